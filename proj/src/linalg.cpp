#include "svl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "svl/error.hpp"

namespace svl {

Matrix ThinSvd::reconstruct() const {
  return left * singulars.asDiagonal() * right.transpose();
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite())
    throw InvalidInput(std::string(what) + ": matrix contains NaN or Inf");
}

ThinSvd exact_svd(const Matrix& m) {
  ThinSvd out;
  const Index p = std::min(m.rows(), m.cols());
  if (p == 0) {
    out.left = Matrix(m.rows(), 0);
    out.right = Matrix(m.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.left = svd.matrixU();
  out.singulars = svd.singularValues();
  out.right = svd.matrixV();
  return out;
}

namespace {

// Keeps the leading `keep` triplets after subtracting `shift` from the
// singular values.
ThinSvd truncate(const ThinSvd& s, Index keep, double shift) {
  ThinSvd out;
  out.left = s.left.leftCols(keep);
  out.right = s.right.leftCols(keep);
  out.singulars = s.singulars.head(keep).array() - shift;
  return out;
}

Index count_above(const Vector& sv, double tau) {
  Index k = 0;
  while (k < sv.size() && sv[k] > tau) ++k;
  return k;
}

Matrix thin_q(const Matrix& m) {
  Eigen::HouseholderQR<Matrix> qr(m);
  return qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
}

}  // namespace

ThinSvd soft_threshold_svd(const Matrix& m, double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau))
    throw InvalidInput("soft_threshold_svd: tau must be finite and non-negative");
  require_finite(m, "soft_threshold_svd");
  const ThinSvd full = exact_svd(m);
  return truncate(full, count_above(full.singulars, tau), tau);
}

ThinSvd power_svd(const Matrix& m, Index target_rank, int power_iters, int oversample,
                  std::uint64_t seed) {
  require_finite(m, "power_svd");
  if (target_rank < 1) throw InvalidInput("power_svd: target_rank must be >= 1");
  if (oversample < 0 || power_iters < 0)
    throw InvalidInput("power_svd: oversample and power_iters must be >= 0");
  const Index sketch = target_rank + oversample;
  if (sketch > std::min(m.rows(), m.cols()))
    throw InvalidInput("power_svd: target_rank + oversample = " + std::to_string(sketch) +
                       " exceeds min(rows, cols) = " +
                       std::to_string(std::min(m.rows(), m.cols())));

  Matrix q = thin_q(m * gaussian_matrix(m.cols(), sketch, seed));
  for (int it = 0; it < power_iters; ++it) {
    q = thin_q(m.transpose() * q);
    q = thin_q(m * q);
  }
  const ThinSvd small = exact_svd(q.transpose() * m);
  ThinSvd out;
  out.left = q * small.left;
  out.singulars = small.singulars;
  out.right = small.right;
  return truncate(out, std::min(target_rank, count_above(out.singulars, 0.0)), 0.0);
}

Matrix orthonormal_union(const Matrix& u, const Matrix& v, double drop_tol) {
  if (u.rows() != v.rows())
    throw InvalidInput("orthonormal_union: row counts differ (" + std::to_string(u.rows()) +
                       " vs " + std::to_string(v.rows()) + ")");
  require_finite(u, "orthonormal_union");
  require_finite(v, "orthonormal_union");
  const Matrix gram = u.transpose() * u;
  if (u.cols() > 0 && (gram - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff() > 1e-8)
    throw InvalidInput("orthonormal_union: U does not have orthonormal columns");

  Matrix q(u.rows(), u.cols() + v.cols());
  q.leftCols(u.cols()) = u;
  Index k = u.cols();
  for (Index j = 0; j < v.cols() && k < u.rows(); ++j) {
    Vector r = v.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      const auto basis = q.leftCols(k);
      r -= basis * (basis.transpose() * r);
    }
    const double norm = r.norm();
    if (norm <= drop_tol) continue;
    q.col(k++) = r / norm;
  }
  return q.leftCols(k);
}

double nuclear_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::BDCSVD<Matrix>(m).singularValues().sum();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::BDCSVD<Matrix>(m).singularValues()(0);
}

Matrix orthonormal_basis(const Matrix& m) { return thin_q(m); }

double max_principal_angle(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw InvalidInput("max_principal_angle: row counts differ");
  const Matrix& small = a.cols() <= b.cols() ? a : b;
  const Matrix& large = a.cols() <= b.cols() ? b : a;
  if (small.cols() == 0) return 0.0;
  const Matrix qs = thin_q(small);
  const Matrix ql = thin_q(large);
  const Matrix residual = qs - ql * (ql.transpose() * qs);
  return std::asin(std::min(1.0, spectral_norm(residual)));
}

Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

Matrix random_orthonormal(Index rows, Index cols, std::uint64_t seed) {
  if (cols > rows) throw InvalidInput("random_orthonormal: cols exceeds rows");
  return thin_q(gaussian_matrix(rows, cols, seed));
}

}  // namespace svl
