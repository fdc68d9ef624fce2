#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "svl/model.hpp"

namespace svl {

/// Whitened principal coordinates of the row-stacked views, each view
/// scaled to unit Frobenius norm: Z = sqrt(n) V_d^T where V_d holds the top-d
/// right singular vectors. Computed with an exact SVD, so the result does not
/// depend on `seed`; the argument is kept for interface stability.
Matrix init_latent(std::span<const ViewMatrix> views, Index d, std::uint64_t seed);

/// Closed-form latent update: column i is
/// (sum_v W_v^T W_v + n m C2 I)^{-1} sum_v W_v^T x_i^v.
Matrix solve_latent(std::span<const ViewMatrix> views, std::span<const ViewFunction> vfs,
                    const Hyperparams& hyper, Index n, Index m);

/// Lipschitz constant (2/(n m)) lambda_max(Z Z^T) of the view loss gradient.
double lipschitz_step(const Matrix& z, Index n, Index m);

/// Smooth part g(W) = (1/(n m)) ||X - W Z||_F^2 of one view's subproblem,
/// held as the sufficient statistics X Z^T, Z Z^T and ||X||^2.
class ViewLoss {
 public:
  ViewLoss(const Matrix& x, const Matrix& z, Index m_norm);

  double value(const Matrix& w) const;
  Matrix gradient(const Matrix& w) const;
  double lipschitz() const { return lipschitz_; }
  double scale() const { return scale_; }
  const Matrix& xzt() const { return xzt_; }
  const Matrix& zzt() const { return zzt_; }

 private:
  Matrix xzt_;
  Matrix zzt_;
  double x_sq_ = 0.0;
  double scale_ = 0.0;
  double lipschitz_ = 0.0;
};

/// ||W - soft(W - grad/eta, c1/eta)||_F for the prox-gradient map with
/// eta = loss.lipschitz().
double prox_fixed_point_residual(const ViewLoss& loss, const Matrix& w, double c1);

struct ViewSolveResult {
  ViewFunction vf;
  bool converged = false;
  int iterations = 0;
  /// Terminal ||W - soft(W - grad/L, C1/L)||_F / ||W||_F (0 when W = 0).
  double relative_residual = 0.0;
  /// g(W) + C1 ||W||_* after initialization and after every prox step.
  std::vector<double> objective_trace;
};

/// Trace-norm regularized view-function solve with fixed Z:
///   min_W (1/(n m_norm)) ||X - W Z||_F^2 + C1 ||W||_*,
/// by prox-gradient steps whose SVD is approximated with power_svd. The
/// thresholded singular vectors extend the column and row subspaces, the
/// combination weights are solved exactly inside them, then re-diagonalized.
///
/// Without `warm` the iteration starts from X Z^T (Z Z^T)^{-1}; with it the
/// given factors seed the subspaces and the result is never worse than warm.
ViewSolveResult solve_view_function(const ViewMatrix& x, const Matrix& z,
                                    const Hyperparams& hyper, const SolverConfig& config,
                                    Index m_norm, const ViewFunction* warm = nullptr);

struct BatchResult {
  ModelState state;
  /// Objective after every completed outer iteration, preceded by the
  /// objective of the warm start when one was given.
  std::vector<double> objective_trace;
  bool converged = false;
  bool views_converged = true;
  int outer_iterations = 0;
  /// Terminal relative prox residual of each view in the last iteration.
  std::vector<double> view_residuals;
};

/// Alternates solve_view_function over every view (view functions first)
/// and solve_latent until the relative objective change drops below
/// config.rel_tol or config.max_outer_iters is reached.
BatchResult fit_batch(std::span<const ViewMatrix> views, const Hyperparams& hyper,
                      const SolverConfig& config, const ModelState* warm = nullptr);

}  // namespace svl
