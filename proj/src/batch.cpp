#include "svl/batch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "svl/error.hpp"
#include "svl/parallel.hpp"
#include "svl/streaming.hpp"
#include "seed.hpp"

namespace svl {

using detail::mix_seed;

namespace {

void check_views(std::span<const ViewMatrix> views, const char* who) {
  if (views.empty()) throw InvalidInput(std::string(who) + ": empty view list");
  const Index n = views.front().examples();
  for (const auto& v : views) {
    if (v.examples() != n)
      throw InvalidInput(std::string(who) + ": view '" + v.name + "' has " +
                         std::to_string(v.examples()) + " examples, expected " +
                         std::to_string(n));
    require_finite(v.X, who);
  }
}

struct Directions {
  Matrix left;
  Matrix right;
  Vector singulars;  // unshrunk
};

// Singular triplets of y with sigma > tau, found with power_svd at a rank
// that grows until the sketch captures every triplet above the threshold.
Directions thresholded_directions(const Matrix& y, double tau, Index start_rank,
                                  const SolverConfig& config, std::uint64_t seed) {
  const Index max_rank = std::min(y.rows(), y.cols());
  Index r = std::clamp<Index>(start_rank, 1, max_rank);
  ThinSvd svd;
  for (;;) {
    const bool exact = r + config.oversample > max_rank;
    svd = exact ? exact_svd(y) : power_svd(y, r, config.power_iters, config.oversample, seed);
    Index above = 0;
    while (above < svd.rank() && svd.singulars[above] > tau) ++above;
    if (exact || above < r || r == max_rank) {
      return {svd.left.leftCols(above), svd.right.leftCols(above), svd.singulars.head(above)};
    }
    r = std::min(2 * r, max_rank);
  }
}

Matrix soft_reconstruct(const Directions& dirs, double tau) {
  return dirs.left * (dirs.singulars.array() - tau).matrix().asDiagonal() *
         dirs.right.transpose();
}

// Rotates (A, S, B) so that S is diagonal and drops negligible singular values.
void rediagonalize(Matrix& a, Matrix& s, Matrix& b, double prune_tol) {
  if (s.size() == 0) {
    a = Matrix(a.rows(), 0);
    b = Matrix(b.rows(), 0);
    s = Matrix(0, 0);
    return;
  }
  const ThinSvd svd = exact_svd(s);
  const double cut = svd.rank() > 0 ? prune_tol * svd.singulars[0] : 0.0;
  Index keep = 0;
  while (keep < svd.rank() && svd.singulars[keep] > cut && svd.singulars[keep] > 0.0) ++keep;
  a = a * svd.left.leftCols(keep);
  b = b * svd.right.leftCols(keep);
  s = svd.singulars.head(keep).asDiagonal();
}

double weights_nuclear(const Matrix& s) { return s.size() == 0 ? 0.0 : nuclear_norm(s); }

}  // namespace

Matrix init_latent(std::span<const ViewMatrix> views, Index d, std::uint64_t /*seed*/) {
  check_views(views, "init_latent");
  Index total = 0;
  for (const auto& v : views) total += v.dim();
  const Index n = views.front().examples();
  if (d < 1 || d > total || d > n)
    throw InvalidInput("init_latent: d = " + std::to_string(d) + " exceeds total view dims (" +
                       std::to_string(total) + ") or example count (" + std::to_string(n) + ")");
  Matrix stacked(total, n);
  Index row = 0;
  for (const auto& v : views) {
    const double norm = v.X.norm();
    stacked.middleRows(row, v.dim()) = norm > 0 ? Matrix(v.X / norm) : v.X;
    row += v.dim();
  }
  const ThinSvd svd = exact_svd(stacked);
  return std::sqrt(static_cast<double>(n)) * svd.right.leftCols(d).transpose();
}

Matrix solve_latent(std::span<const ViewMatrix> views, std::span<const ViewFunction> vfs,
                    const Hyperparams& hyper, Index n, Index m) {
  if (views.size() != vfs.size())
    throw InvalidInput("solve_latent: view and view-function counts differ");
  std::vector<Matrix> xs;
  xs.reserve(views.size());
  for (const auto& v : views) xs.push_back(v.X);
  const double ridge = static_cast<double>(n) * static_cast<double>(m) * hyper.c2;
  return encode_with_ridge(vfs, xs, ridge);
}

double lipschitz_step(const Matrix& z, Index n, Index m) {
  const double top = spectral_norm(z);
  if (!(top > 0.0)) throw DegenerateInput("lipschitz_step: latent matrix is zero");
  return 2.0 / (static_cast<double>(n) * static_cast<double>(m)) * top * top;
}

ViewLoss::ViewLoss(const Matrix& x, const Matrix& z, Index m_norm)
    : xzt_(x * z.transpose()),
      zzt_(z * z.transpose()),
      x_sq_(x.squaredNorm()),
      scale_(1.0 / (static_cast<double>(z.cols()) * static_cast<double>(m_norm))) {
  const double top = zzt_.size() ? Eigen::SelfAdjointEigenSolver<Matrix>(zzt_, Eigen::EigenvaluesOnly)
                                      .eigenvalues()
                                      .maxCoeff()
                                 : 0.0;
  lipschitz_ = 2.0 * scale_ * std::max(top, 0.0);
}

double ViewLoss::value(const Matrix& w) const {
  if (w.size() == 0) return scale_ * x_sq_;
  return scale_ * (x_sq_ - 2.0 * (w.array() * xzt_.array()).sum() +
                   ((w * zzt_).array() * w.array()).sum());
}

Matrix ViewLoss::gradient(const Matrix& w) const { return 2.0 * scale_ * (w * zzt_ - xzt_); }

double prox_fixed_point_residual(const ViewLoss& loss, const Matrix& w, double c1) {
  const double eta = loss.lipschitz();
  if (!(eta > 0.0)) throw DegenerateInput("prox residual: zero Lipschitz constant");
  const Matrix y = w - loss.gradient(w) / eta;
  return (w - soft_threshold_svd(y, c1 / eta).reconstruct()).norm();
}

ViewSolveResult solve_view_function(const ViewMatrix& x, const Matrix& z,
                                    const Hyperparams& hyper, const SolverConfig& config,
                                    Index m_norm, const ViewFunction* warm) {
  config.validate();
  if (x.examples() != z.cols())
    throw InvalidInput("solve_view_function: view '" + x.name + "' has " +
                       std::to_string(x.examples()) + " examples but Z has " +
                       std::to_string(z.cols()));
  require_finite(x.X, "solve_view_function");
  const Index dim = x.dim();
  const Index d = z.rows();
  const double c1 = hyper.c1;
  const ViewLoss loss(x.X, z, m_norm);
  const double lip = loss.lipschitz();
  if (!(lip > 0.0)) throw DegenerateInput("solve_view_function: latent matrix is zero");

  Matrix a, s, b;
  if (warm != nullptr) {
    if (warm->view_dim() != dim || warm->latent_dim() != d)
      throw InvalidInput("solve_view_function: warm start has mismatched dimensions");
    a = warm->col_space;
    s = warm->weights;
    b = warm->row_space;
  } else {
    Matrix zzt = loss.zzt();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(zzt, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12)
      zzt.diagonal().array() += 1e-10 * zzt.trace() / static_cast<double>(d);
    const Matrix w0 = zzt.ldlt().solve(loss.xzt().transpose()).transpose();
    const ThinSvd svd = exact_svd(w0);
    a = svd.left;
    b = svd.right;
    s = svd.singulars.asDiagonal();
    rediagonalize(a, s, b, config.rank_prune_tol);
  }

  auto compose_w = [&] { return Matrix(a * s * b.transpose()); };
  Matrix w = compose_w();
  double f = loss.value(w) + c1 * weights_nuclear(s);

  ViewSolveResult out;
  out.objective_trace.push_back(f);
  const double inner_tol = 0.1 * config.rel_tol;
  double eta = lip;
  double residual = 0.0;

  for (int t = 0;; ++t) {
    residual = prox_fixed_point_residual(loss, w, c1);
    const double wnorm = w.norm();
    if (residual <= config.rel_tol * wnorm) {
      out.converged = true;
      break;
    }
    if (t == config.max_prox_iters) break;
    out.iterations = t + 1;

    const Matrix grad = loss.gradient(w);
    const std::uint64_t seed = mix_seed(config.seed, static_cast<std::uint64_t>(t));
    const Index start_rank = std::max<Index>(s.rows(), s.cols()) + 1;
    Directions dirs;
    if (config.step_rule == StepRule::backtracking) {
      // Start from a longer step than last time and shorten until the
      // quadratic upper model holds; eta never needs to exceed lip.
      eta = std::max(eta / 2.0, 1e-3 * lip);
      const double g0 = loss.value(w);
      for (;;) {
        dirs = thresholded_directions(w - grad / eta, c1 / eta, start_rank, config, seed);
        const Matrix step = soft_reconstruct(dirs, c1 / eta) - w;
        const double model = g0 + (grad.array() * step.array()).sum() + 0.5 * eta * step.squaredNorm();
        if (eta >= lip || loss.value(w + step) <= model + 1e-12 * std::abs(model)) break;
        eta = std::min(2.0 * eta, lip);
      }
    } else {
      dirs = thresholded_directions(w - grad / lip, c1 / lip, start_rank, config, seed);
    }

    const Index ka = a.cols(), kb = b.cols();
    a = orthonormal_union(a, dirs.left, config.drop_tol);
    b = orthonormal_union(b, dirs.right, config.drop_tol);
    Matrix start = Matrix::Zero(a.cols(), b.cols());
    start.topLeftCorner(ka, kb) = s;

    const auto problem =
        WeightProblem::from_statistics(loss.xzt(), loss.zzt(), a, b, loss.scale(), c1);
    s = problem.solve(start, inner_tol, config.max_weight_iters).weights;
    rediagonalize(a, s, b, config.rank_prune_tol);
    w = compose_w();
    f = loss.value(w) + c1 * weights_nuclear(s);
    out.objective_trace.push_back(f);
  }

  const double wnorm = w.norm();
  out.relative_residual = wnorm > 0 ? residual / wnorm : residual;
  out.vf = ViewFunction{std::move(a), std::move(s), std::move(b)};
  if (out.vf.rank() == 0) out.vf = ViewFunction::zero(dim, d);
  return out;
}

BatchResult fit_batch(std::span<const ViewMatrix> views, const Hyperparams& hyper,
                      const SolverConfig& config, const ModelState* warm) {
  check_views(views, "fit_batch");
  hyper.validate();
  config.validate();
  const Index n = views.front().examples();
  const Index m = static_cast<Index>(views.size());

  BatchResult out;
  out.state.hyper = hyper;
  double prev = std::numeric_limits<double>::infinity();
  if (warm != nullptr) {
    if (warm->views_seen() != m)
      throw InvalidInput("fit_batch: warm state has " + std::to_string(warm->views_seen()) +
                         " view functions for " + std::to_string(m) + " views");
    if (warm->hyper.latent_dim != hyper.latent_dim || warm->examples() != n)
      throw InvalidInput("fit_batch: warm state dimensions do not match");
    out.state.view_functions = warm->view_functions;
    out.state.latent = warm->latent;
    prev = objective(out.state, views).total();
    out.objective_trace.push_back(prev);
  } else {
    out.state.latent = init_latent(views, hyper.latent_dim, config.seed);
  }

  std::vector<ViewSolveResult> solved(views.size());
  for (int it = 0; it < config.max_outer_iters; ++it) {
    const auto& current = out.state.view_functions;
    parallel_for(views.size(), config.threads, [&](std::size_t v) {
      SolverConfig cfg = config;
      cfg.seed = mix_seed(config.seed, v, static_cast<std::uint64_t>(it));
      const ViewFunction* start = current.empty() ? nullptr : &current[v];
      solved[v] = solve_view_function(views[v], out.state.latent, hyper, cfg, m, start);
    });
    out.state.view_functions.clear();
    out.view_residuals.clear();
    out.views_converged = true;
    for (auto& r : solved) {
      out.views_converged = out.views_converged && r.converged;
      out.view_residuals.push_back(r.relative_residual);
      out.state.view_functions.push_back(std::move(r.vf));
    }
    out.state.latent = solve_latent(views, out.state.view_functions, hyper, n, m);
    const double f = objective(out.state, views).total();
    out.objective_trace.push_back(f);
    out.outer_iterations = it + 1;
    if (std::isfinite(prev) && std::abs(prev - f) <= config.rel_tol * std::abs(prev)) {
      out.converged = true;
      break;
    }
    prev = f;
  }
  return out;
}

}  // namespace svl
