// SPDX-License-Identifier: Apache-2.0
#include "phylab/numerics.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace phylab::numerics {

namespace {

// Rotates each column of u so its largest-magnitude entry is real positive.
// Columns j < shared of v absorb the same phase so u*diag(sigma)*v^H is
// unchanged; the remaining columns of v are fixed independently.
void apply_phase_convention(ComplexMatrix& u, ComplexMatrix& v) {
  const Eigen::Index shared = std::min(u.cols(), v.cols());
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index imax = 0;
    u.col(j).cwiseAbs().maxCoeff(&imax);
    const Complex pivot = u(imax, j);
    if (std::abs(pivot) == 0.0) continue;
    const Complex phase = std::conj(pivot) / std::abs(pivot);
    u.col(j) *= phase;
    if (j < shared) v.col(j) *= phase;
  }
  for (Eigen::Index j = shared; j < v.cols(); ++j) {
    Eigen::Index imax = 0;
    v.col(j).cwiseAbs().maxCoeff(&imax);
    const Complex pivot = v(imax, j);
    if (std::abs(pivot) == 0.0) continue;
    v.col(j) *= std::conj(pivot) / std::abs(pivot);
  }
}

}  // namespace

SvdFactors svd(const ComplexMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0)
    throw std::invalid_argument("svd: empty matrix");
  require_finite(a, "svd");

  Eigen::JacobiSVD<ComplexMatrix> solver(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SvdFactors f{solver.matrixU(), solver.singularValues(), solver.matrixV()};
  apply_phase_convention(f.u, f.v);

  const Eigen::Index k = std::min(a.rows(), a.cols());
  const ComplexMatrix recon =
      f.u.leftCols(k) * f.sigma.head(k).asDiagonal() * f.v.leftCols(k).adjoint();
  const double scale = std::max(max_abs(a), 1e-300);
  if (max_abs(recon - a) > 1e-9 * scale)
    throw std::runtime_error("svd: no convergence for " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " matrix");
  return f;
}

RealVector singular_values(const ComplexMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0)
    throw std::invalid_argument("singular_values: empty matrix");
  require_finite(a, "singular_values");
  Eigen::JacobiSVD<ComplexMatrix> solver(a);
  return solver.singularValues();
}

EigFactors eig_hermitian(const ComplexMatrix& a) {
  if (a.rows() == 0) throw std::invalid_argument("eig_hermitian: empty matrix");
  if (a.rows() != a.cols()) throw std::invalid_argument("eig_hermitian: matrix not square");
  require_finite(a, "eig_hermitian");

  const double scale = std::max(max_abs(a), 1.0);
  if (max_abs(a - a.adjoint()) > 1e-12 * scale)
    throw std::invalid_argument("eig_hermitian: matrix not Hermitian within tolerance");

  const ComplexMatrix sym = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eig_hermitian: no convergence for " +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                             " matrix");

  // Eigen returns ascending order; flip to non-increasing.
  EigFactors f;
  f.values = solver.eigenvalues().reverse();
  f.vectors = solver.eigenvectors().rowwise().reverse();
  return f;
}

GmdFactors gmd(const ComplexMatrix& a, Eigen::Index k) {
  if (k < 1) throw std::invalid_argument("gmd: k must be >= 1");
  const SvdFactors f = svd(a);
  const Eigen::Index rank_bound = std::min(a.rows(), a.cols());
  if (k > rank_bound)
    throw std::invalid_argument("gmd: k exceeds min(rows, cols)");
  const double sigma1 = f.sigma(0);
  if (!(f.sigma(k - 1) > 1e-12 * sigma1))
    throw std::invalid_argument("gmd: k exceeds the numerical rank");

  double log_mean = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) log_mean += std::log(f.sigma(i));
  const double sigma_bar = std::exp(log_mean / static_cast<double>(k));

  ComplexMatrix q = f.u.leftCols(k);
  ComplexMatrix p = f.v.leftCols(k);
  RealMatrix r = RealMatrix::Zero(k, k);
  r.diagonal() = f.sigma.head(k);

  // Jiang-Hager style equalization. Invariant before step i: rows i..k-1 of
  // r hold only their diagonal entries, so each step works on a diagonal
  // 2x2 block [d1 0; 0 d2] with sigma_bar between d1 and d2.
  for (Eigen::Index i = 0; i + 1 < k; ++i) {
    const double d_head = r(i, i);
    Eigen::Index pick = i + 1;
    bool found = false;
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const bool straddles = d_head >= sigma_bar ? r(j, j) <= sigma_bar : r(j, j) >= sigma_bar;
      if (straddles) {
        pick = j;
        found = true;
        break;
      }
    }
    if (!found) {
      // Rounding can leave every candidate on one side; take the extreme.
      for (Eigen::Index j = i + 2; j < k; ++j) {
        const bool better = d_head >= sigma_bar ? r(j, j) < r(pick, pick) : r(j, j) > r(pick, pick);
        if (better) pick = j;
      }
    }
    if (pick != i + 1) {
      r.row(i + 1).swap(r.row(pick));
      r.col(i + 1).swap(r.col(pick));
      q.col(i + 1).swap(q.col(pick));
      p.col(i + 1).swap(p.col(pick));
    }

    const double d1 = r(i, i);
    const double d2 = r(i + 1, i + 1);
    double c = 1.0, s = 0.0;
    const double denom = d1 * d1 - d2 * d2;
    if (std::abs(denom) > 1e-30 * sigma_bar * sigma_bar) {
      double t = (sigma_bar * sigma_bar - d2 * d2) / denom;
      t = std::min(1.0, std::max(0.0, t));
      c = std::sqrt(t);
      s = std::sqrt(1.0 - t);
    }

    // Right rotation on columns (i, i+1); p absorbs the same rotation.
    for (Eigen::Index row = 0; row <= i + 1; ++row) {
      const double a0 = r(row, i), a1 = r(row, i + 1);
      r(row, i) = c * a0 + s * a1;
      r(row, i + 1) = -s * a0 + c * a1;
    }
    {
      const ComplexVector p0 = p.col(i);
      p.col(i) = c * p0 + s * p.col(i + 1);
      p.col(i + 1) = -s * p0 + c * p.col(i + 1);
    }

    // Left rotation on rows (i, i+1), chosen to land exactly sigma_bar on
    // the diagonal; q absorbs its transpose.
    const double cl = c * d1 / sigma_bar;
    const double sl = s * d2 / sigma_bar;
    for (Eigen::Index col = i; col < k; ++col) {
      const double a0 = r(i, col), a1 = r(i + 1, col);
      r(i, col) = cl * a0 + sl * a1;
      r(i + 1, col) = -sl * a0 + cl * a1;
    }
    {
      const ComplexVector q0 = q.col(i);
      q.col(i) = cl * q0 + sl * q.col(i + 1);
      q.col(i + 1) = -sl * q0 + cl * q.col(i + 1);
    }
    r(i + 1, i) = 0.0;  // analytically zero
  }

  GmdFactors g;
  g.q = std::move(q);
  g.p = std::move(p);
  g.r = r.triangularView<Eigen::Upper>().toDenseMatrix().cast<Complex>();
  g.sigma_bar = sigma_bar;
  return g;
}

}  // namespace phylab::numerics
