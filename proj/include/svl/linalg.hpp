#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace svl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thin factorization left * diag(singulars) * right^T.
///
/// left and right have orthonormal columns and singulars are sorted
/// non-increasing. A rank-zero result has zero columns in both factors.
struct ThinSvd {
  Matrix left;
  Vector singulars;
  Matrix right;

  Index rank() const { return singulars.size(); }
  Matrix reconstruct() const;
};

bool all_finite(const Matrix& m);

/// Throws InvalidInput naming `what` if `m` holds NaN or Inf.
void require_finite(const Matrix& m, const char* what);

/// Exact thin SVD (divide and conquer bidiagonal solver).
ThinSvd exact_svd(const Matrix& m);

/// Proximal operator of tau * nuclear norm in factored form: keeps the
/// singular triplets with sigma > tau and shrinks them by tau.
ThinSvd soft_threshold_svd(const Matrix& m, double tau);

/// Randomized range finder with power iterations followed by an exact SVD
/// of the projected matrix. Requires target_rank + oversample <= min(rows,
/// cols). The Gaussian test matrix is drawn from `seed`.
ThinSvd power_svd(const Matrix& m, Index target_rank, int power_iters, int oversample,
                  std::uint64_t seed);

/// Orthonormal basis of span(u, v) whose leading columns are u itself.
///
/// Columns of v are Gram-Schmidt orthogonalized (twice) against the running
/// basis and dropped when the residual norm is <= drop_tol.
Matrix orthonormal_union(const Matrix& u, const Matrix& v, double drop_tol = 1e-8);

double nuclear_norm(const Matrix& m);
double spectral_norm(const Matrix& m);

/// Largest principal angle (radians) between span(a) and span(b). Both
/// inputs are orthonormalized first; the column counts may differ, in which
/// case the angle is measured from the smaller subspace into the larger.
double max_principal_angle(const Matrix& a, const Matrix& b);

/// Orthonormal basis of the column span of m (Householder QR).
Matrix orthonormal_basis(const Matrix& m);

/// Rows x cols matrix with i.i.d. N(0, 1) entries.
Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed);

/// Random matrix with orthonormal columns (QR of a Gaussian matrix).
Matrix random_orthonormal(Index rows, Index cols, std::uint64_t seed);

}  // namespace svl
