#include "svl/streaming.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "seed.hpp"
#include "svl/error.hpp"
#include "svl/parallel.hpp"

namespace svl {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double top_eigenvalue(const Matrix& sym) {
  if (sym.size() == 0) return 0.0;
  return std::max(
      Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff(),
      0.0);
}

}  // namespace

WeightProblem::WeightProblem(Matrix cross, Matrix gram, double scale, double c1)
    : cross_(std::move(cross)),
      gram_(std::move(gram)),
      scale_(scale),
      c1_(c1),
      lipschitz_(2.0 * scale * top_eigenvalue(gram_)) {
  if (gram_.rows() != gram_.cols() || cross_.cols() != gram_.rows())
    throw InvalidInput("weight problem: P and G shapes disagree");
}

WeightProblem WeightProblem::from_data(const Matrix& x, const Matrix& col_space,
                                       const Matrix& row_space, const Matrix& z, double scale,
                                       double c1) {
  if (x.rows() != col_space.rows() || x.cols() != z.cols() || row_space.rows() != z.rows())
    throw InvalidInput("weight problem: dimension mismatch between X, A, B and Z");
  const Matrix bz = row_space.transpose() * z;  // k_b x n
  return WeightProblem((col_space.transpose() * x) * bz.transpose(), bz * bz.transpose(), scale,
                       c1);
}

WeightProblem WeightProblem::from_statistics(const Matrix& xzt, const Matrix& zzt,
                                             const Matrix& col_space, const Matrix& row_space,
                                             double scale, double c1) {
  return WeightProblem(col_space.transpose() * xzt * row_space,
                       row_space.transpose() * zzt * row_space, scale, c1);
}

double WeightProblem::smooth_value(const Matrix& s) const {
  if (s.size() == 0) return 0.0;
  return scale_ * (-2.0 * (s.array() * cross_.array()).sum() +
                   ((s * gram_).array() * s.array()).sum());
}

double WeightProblem::value(const Matrix& s) const {
  if (s.size() == 0) return 0.0;
  return smooth_value(s) + c1_ * nuclear_norm(s);
}

Matrix WeightProblem::gradient(const Matrix& s) const {
  return 2.0 * scale_ * (s * gram_ - cross_);
}

double WeightProblem::residual(const Matrix& s) const {
  if (!(lipschitz_ > 0.0)) return s.norm();
  const Matrix y = s - gradient(s) / lipschitz_;
  return (s - soft_threshold_svd(y, c1_ / lipschitz_).reconstruct()).norm();
}

WeightSolveResult WeightProblem::solve(const Matrix& start, double rel_tol, int max_iters) const {
  if (start.rows() != cross_.rows() || start.cols() != cross_.cols())
    throw InvalidInput("weight problem: start has shape " + std::to_string(start.rows()) + "x" +
                       std::to_string(start.cols()) + ", expected " +
                       std::to_string(cross_.rows()) + "x" + std::to_string(cross_.cols()));
  WeightSolveResult out;
  if (cross_.size() == 0) {
    out.weights = start;
    out.converged = true;
    return out;
  }
  if (!(lipschitz_ > 0.0)) {
    // B^T Z = 0: the loss is constant in S and the penalty alone decides.
    out.weights = Matrix::Zero(start.rows(), start.cols());
    out.converged = true;
    return out;
  }

  const double tau = c1_ / lipschitz_;
  Matrix x = start;
  double fx = value(x);
  Matrix y = x;
  double t = 1.0;
  bool restarted = false;
  constexpr int kCheckEvery = 5;

  for (int it = 0; it < max_iters; ++it) {
    if (it % kCheckEvery == 0) {
      const double r = residual(x);
      if (r <= rel_tol * x.norm()) {
        out.converged = true;
        out.relative_residual = x.norm() > 0 ? r / x.norm() : r;
        break;
      }
    }
    // The prox output's nuclear norm is the sum of its shrunk singular values.
    const ThinSvd prox = soft_threshold_svd(y - gradient(y) / lipschitz_, tau);
    const Matrix xn = prox.reconstruct();
    const double fxn = smooth_value(xn) + c1_ * prox.singulars.sum();
    out.iterations = it + 1;
    if (fxn > fx && !restarted) {
      // Momentum overshot: restart from the current iterate. The next step is
      // a plain prox-gradient step, which cannot increase the objective, so
      // it is accepted even if rounding makes it look like an increase.
      y = x;
      t = 1.0;
      restarted = true;
      continue;
    }
    restarted = false;
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = xn + ((t - 1.0) / tn) * (xn - x);
    x = xn;
    fx = fxn;
    t = tn;
  }
  if (!out.converged) {
    const double r = residual(x);
    out.converged = r <= rel_tol * x.norm();
    out.relative_residual = x.norm() > 0 ? r / x.norm() : r;
  }
  out.weights = std::move(x);
  out.objective = fx;
  return out;
}

ViewSolveResult solve_new_view(const Matrix& latent, const ViewMatrix& x_new,
                               const Hyperparams& hyper, const SolverConfig& config) {
  return solve_view_function(x_new, latent, hyper, config, 1);
}

WeightSolveResult solve_weights(const ViewMatrix& x, const Matrix& col_space,
                                const Matrix& row_space, const Matrix& start, const Matrix& z,
                                const Hyperparams& hyper, const SolverConfig& config,
                                Index m_total) {
  ViewFunction{col_space, start, row_space}.validate();
  const double scale = 1.0 / (static_cast<double>(z.cols()) * static_cast<double>(m_total));
  const auto problem = WeightProblem::from_data(x.X, col_space, row_space, z, scale, hyper.c1);
  return problem.solve(start, config.rel_tol, config.max_weight_iters);
}

FinetuneResult finetune(const ModelState& state, std::span<const ViewMatrix> all_views,
                        const SolverConfig& config) {
  config.validate();
  if (static_cast<Index>(all_views.size()) != state.views_seen())
    throw InvalidInput("finetune: " + std::to_string(all_views.size()) + " views for " +
                       std::to_string(state.views_seen()) + " view functions");
  const Index n = state.examples();
  const Index m_total = state.views_seen();

  FinetuneResult out;
  out.state = state;
  double prev = objective(out.state, all_views).total();
  out.objective_trace.push_back(prev);

  auto& vfs = out.state.view_functions;
  std::vector<WeightSolveResult> solved(vfs.size());
  for (int it = 0; it < config.finetune_iters; ++it) {
    out.state.latent = solve_latent(all_views, vfs, state.hyper, n, m_total);
    parallel_for(vfs.size(), config.threads, [&](std::size_t v) {
      if (vfs[v].rank() == 0) {
        solved[v] = WeightSolveResult{vfs[v].weights, true, 0, 0.0, 0.0};
        return;
      }
      solved[v] = solve_weights(all_views[v], vfs[v].col_space, vfs[v].row_space,
                                vfs[v].weights, out.state.latent, state.hyper, config, m_total);
    });
    for (std::size_t v = 0; v < vfs.size(); ++v) {
      out.weights_converged = out.weights_converged && solved[v].converged;
      vfs[v].weights = std::move(solved[v].weights);
    }
    const double f = objective(out.state, all_views).total();
    out.objective_trace.push_back(f);
    out.iterations = it + 1;
    if (std::abs(prev - f) <= config.rel_tol * std::abs(prev)) {
      out.converged = true;
      break;
    }
    prev = f;
  }
  return out;
}

AddViewResult add_view(const ModelState& state, std::span<const ViewMatrix> all_views,
                       const SolverConfig& config) {
  const Index m = state.views_seen();
  if (static_cast<Index>(all_views.size()) != m + 1)
    throw InvalidInput("add_view: expected " + std::to_string(m + 1) + " views (past + new), got " +
                       std::to_string(all_views.size()));
  const ViewMatrix& x_new = all_views.back();

  const auto t0 = std::chrono::steady_clock::now();
  SolverConfig cfg = config;
  cfg.seed = detail::mix_seed(config.seed, static_cast<std::uint64_t>(m), 0xADD);
  ViewSolveResult part1 = solve_new_view(state.latent, x_new, state.hyper, cfg);
  const double part1_seconds = seconds_since(t0);

  ModelState grown = state;
  grown.view_functions.push_back(std::move(part1.vf));
  const auto t1 = std::chrono::steady_clock::now();
  FinetuneResult part2 = finetune(grown, all_views, config);
  const double part2_seconds = seconds_since(t1);

  AddViewResult out;
  auto& diag = out.diagnostics;
  diag.views_seen = m + 1;
  diag.objective_trace = std::move(part2.objective_trace);
  diag.z_drift = (part2.state.latent - state.latent).norm();
  diag.part1_seconds = part1_seconds;
  diag.part2_seconds = part2_seconds;
  for (const auto& vf : part2.state.view_functions) diag.ranks.push_back(vf.rank());
  diag.new_view_converged = part1.converged;
  diag.finetune_converged = part2.converged;
  out.state = std::move(part2.state);
  return out;
}

BatchResult naive_retrain(std::span<const ViewMatrix> all_views, const Hyperparams& hyper,
                          const SolverConfig& config, const ModelState* warm) {
  if (warm == nullptr) return fit_batch(all_views, hyper, config);
  const Index past = warm->views_seen();
  if (static_cast<Index>(all_views.size()) < past)
    throw InvalidInput("naive_retrain: fewer views than the warm state has");
  ModelState start = *warm;
  start.hyper = hyper;
  for (std::size_t v = static_cast<std::size_t>(past); v < all_views.size(); ++v) {
    SolverConfig cfg = config;
    cfg.seed = detail::mix_seed(config.seed, v, 0xADD);
    start.view_functions.push_back(
        solve_new_view(warm->latent, all_views[v], hyper, cfg).vf);
  }
  return fit_batch(all_views, hyper, config, &start);
}

}  // namespace svl
