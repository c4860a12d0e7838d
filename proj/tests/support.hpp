// SPDX-License-Identifier: Apache-2.0
// Shared helpers for the test binaries.
#pragma once

#include <vector>

#include "phylab/rng.hpp"
#include "phylab/types.hpp"

namespace phylab::test {

inline ComplexMatrix random_complex_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                           double variance = 1.0) {
  ComplexMatrix a(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = rng.complex_gaussian(variance);
  return a;
}

inline ComplexMatrix random_hermitian(Rng& rng, Eigen::Index n) {
  const ComplexMatrix a = random_complex_matrix(rng, n, n);
  return 0.5 * (a + a.adjoint());
}

/// Gauss-Laguerre nodes/weights for integrals of f(x) e^{-x} on [0, inf),
/// via the Golub-Welsch tridiagonal eigenproblem.
inline void gauss_laguerre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  RealMatrix j = RealMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    j(i, i) = 2.0 * i + 1.0;
    if (i + 1 < n) {
      j(i, i + 1) = i + 1.0;
      j(i + 1, i) = i + 1.0;
    }
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(j);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = v0 * v0;  // first moment of e^{-x} is 1
  }
}

}  // namespace phylab::test
