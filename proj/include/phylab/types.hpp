// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace phylab {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kJ{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

/// Throws std::invalid_argument if any entry is NaN or Inf.
inline void require_finite(const Eigen::Ref<const ComplexMatrix>& a, const char* what) {
  if (!a.allFinite())
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

inline void require_finite(const Eigen::Ref<const RealMatrix>& a, const char* what) {
  if (!a.allFinite())
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

/// Largest absolute entry; 0 for empty matrices.
inline double max_abs(const Eigen::Ref<const ComplexMatrix>& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

}  // namespace phylab
