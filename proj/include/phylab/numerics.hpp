// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "phylab/types.hpp"

namespace phylab::numerics {

/// Full singular value decomposition a = u * diag(sigma) * v^H.
/// u is rows x rows unitary, v is cols x cols unitary, sigma is
/// non-increasing and non-negative. Column phases are fixed so the
/// largest-magnitude entry of each column of u is real positive (the
/// matching column of v absorbs the same phase), which makes the
/// factorization deterministic for distinct singular values.
struct SvdFactors {
  ComplexMatrix u;
  RealVector sigma;
  ComplexMatrix v;
};

SvdFactors svd(const ComplexMatrix& a);

/// Singular values only, non-increasing.
RealVector singular_values(const ComplexMatrix& a);

/// Eigendecomposition of a Hermitian matrix. Input must be Hermitian within
/// 1e-12 relative to its largest entry; it is symmetrized before
/// decomposition. Eigenvalues are returned non-increasing with orthonormal
/// eigenvector columns.
struct EigFactors {
  RealVector values;
  ComplexMatrix vectors;
};

EigFactors eig_hermitian(const ComplexMatrix& a);

/// Geometric mean decomposition of the rank-k truncation of a:
///   a_k = q * r * p^H
/// where q (rows x k) and p (cols x k) have orthonormal columns and r is
/// k x k real upper triangular with every diagonal entry equal to
/// sigma_bar, the geometric mean of the k largest singular values.
/// Built from the truncated SVD by paired Givens rotations and symmetric
/// permutations that equalize the diagonal; each step pivots one diagonal
/// entry >= sigma_bar against one <= sigma_bar.
struct GmdFactors {
  ComplexMatrix q;
  ComplexMatrix r;
  ComplexMatrix p;
  double sigma_bar = 0.0;
};

GmdFactors gmd(const ComplexMatrix& a, Eigen::Index k);

}  // namespace phylab::numerics
