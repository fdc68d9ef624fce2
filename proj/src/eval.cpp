#include "svl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "seed.hpp"
#include "svl/batch.hpp"
#include "svl/error.hpp"
#include "svl/parallel.hpp"

namespace svl {

namespace {

// Squared distances from every column of `points` to every centroid (n x k).
Matrix squared_distances(const Matrix& points, const Matrix& centroids,
                         const Vector& point_norms) {
  Matrix d2 = -2.0 * points.transpose() * centroids;
  d2.colwise() += point_norms;
  d2.rowwise() += centroids.colwise().squaredNorm();
  return d2.cwiseMax(0.0);
}

KMeansResult lloyd(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& opt) {
  const Index n = points.cols();
  std::mt19937_64 rng(seed);
  const Vector norms = points.colwise().squaredNorm().transpose();

  // Greedy k-means++: each new center is the best of several D^2-weighted
  // candidates, judged by the potential it leaves.
  Matrix centroids(points.rows(), k);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centroids.col(0) = points.col(pick(rng));
  Vector closest = (points.colwise() - centroids.col(0)).colwise().squaredNorm().transpose();
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    std::vector<double> cumulative(static_cast<std::size_t>(n));
    double total = 0.0;
    Index last_positive = 0;
    for (Index i = 0; i < n; ++i) {
      total += closest[i];
      if (closest[i] > 0.0) last_positive = i;
      cumulative[static_cast<std::size_t>(i)] = total;
    }
    Index best = -1;
    double best_potential = std::numeric_limits<double>::infinity();
    Vector best_closest;
    for (int trial = 0; trial < trials; ++trial) {
      Index cand = 0;
      if (total > 0.0) {
        // First index whose cumulative mass exceeds the target; zero-mass
        // points (existing centers) are never hit.
        const double target = unit(rng) * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
        cand = it == cumulative.end() ? last_positive : static_cast<Index>(it - cumulative.begin());
      } else {
        cand = pick(rng);
      }
      Vector updated =
          (points.colwise() - points.col(cand)).colwise().squaredNorm().transpose().cwiseMin(closest);
      const double potential = updated.sum();
      if (potential < best_potential) {
        best_potential = potential;
        best = cand;
        best_closest = std::move(updated);
      }
    }
    centroids.col(c) = points.col(best);
    closest = std::move(best_closest);
  }

  LabelVector labels(static_cast<std::size_t>(n), 0);
  auto assign = [&] {
    const Matrix d2 = squared_distances(points, centroids, norms);
    for (Index i = 0; i < n; ++i) {
      Index j;
      d2.row(i).minCoeff(&j);
      labels[static_cast<std::size_t>(i)] = static_cast<int>(j);
    }
  };

  for (int it = 0; it < opt.max_iters; ++it) {
    assign();
    Matrix sums = Matrix::Zero(points.rows(), k);
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      sums.col(labels[static_cast<std::size_t>(i)]) += points.col(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    Matrix next = centroids;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        next.col(c) = sums.col(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // Empty cluster: move it to the point farthest from its centroid.
        const Matrix d2 = squared_distances(points, centroids, norms);
        Index far = 0;
        double worst = -1.0;
        for (Index i = 0; i < n; ++i) {
          const double v = d2(i, labels[static_cast<std::size_t>(i)]);
          if (v > worst) {
            worst = v;
            far = i;
          }
        }
        next.col(c) = points.col(far);
      }
    }
    const double shift = (next - centroids).norm();
    centroids = std::move(next);
    if (shift <= opt.tol) break;
  }
  assign();

  KMeansResult out;
  out.labels = std::move(labels);
  out.centroids = std::move(centroids);
  for (Index i = 0; i < n; ++i)
    out.wcss += (points.col(i) - out.centroids.col(out.labels[static_cast<std::size_t>(i)]))
                    .squaredNorm();
  return out;
}

void check_labels(std::span<const int> pred, std::span<const int> truth, const char* who) {
  if (pred.size() != truth.size())
    throw InvalidInput(std::string(who) + ": label vectors differ in length (" +
                       std::to_string(pred.size()) + " vs " + std::to_string(truth.size()) + ")");
  if (pred.empty()) throw InvalidInput(std::string(who) + ": empty label vectors");
  auto negative = [](int l) { return l < 0; };
  if (std::any_of(pred.begin(), pred.end(), negative) ||
      std::any_of(truth.begin(), truth.end(), negative))
    throw InvalidInput(std::string(who) + ": labels must be non-negative");
}

Matrix contingency(std::span<const int> pred, std::span<const int> truth) {
  const int rows = *std::max_element(pred.begin(), pred.end()) + 1;
  const int cols = *std::max_element(truth.begin(), truth.end()) + 1;
  Matrix table = Matrix::Zero(rows, cols);
  for (std::size_t i = 0; i < pred.size(); ++i) table(pred[i], truth[i]) += 1.0;
  return table;
}

double entropy(const Vector& counts, double n) {
  double h = 0.0;
  for (Index i = 0; i < counts.size(); ++i)
    if (counts[i] > 0) h -= counts[i] / n * std::log(counts[i] / n);
  return h;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed,
                    const KMeansOptions& options) {
  if (k < 1 || k > points.cols())
    throw InvalidInput("kmeans: k = " + std::to_string(k) + " outside [1, n = " +
                       std::to_string(points.cols()) + "]");
  if (options.restarts < 1 || options.max_iters < 1)
    throw InvalidInput("kmeans: restarts and max_iters must be >= 1");
  require_finite(points, "kmeans");
  std::vector<KMeansResult> runs(static_cast<std::size_t>(options.restarts));
  parallel_for(runs.size(), options.threads, [&](std::size_t r) {
    runs[r] = lloyd(points, k, detail::mix_seed(seed, r), options);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].wcss < runs[best].wcss) best = r;
  return std::move(runs[best]);
}

double nmi(std::span<const int> pred, std::span<const int> truth) {
  check_labels(pred, truth, "nmi");
  const Matrix table = contingency(pred, truth);
  const double n = static_cast<double>(pred.size());
  const Vector rows = table.rowwise().sum();
  const Vector cols = table.colwise().sum().transpose();
  const double hp = entropy(rows, n);
  const double ht = entropy(cols, n);
  if (hp == 0.0 && ht == 0.0) return 1.0;
  if (hp == 0.0 || ht == 0.0) return 0.0;
  double mi = 0.0;
  for (Index i = 0; i < table.rows(); ++i)
    for (Index j = 0; j < table.cols(); ++j) {
      const double c = table(i, j);
      if (c > 0) mi += c / n * std::log(c * n / (rows[i] * cols[j]));
    }
  return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

std::vector<int> hungarian_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw InvalidInput("hungarian_assignment: cost must be square");
  const int size = static_cast<int>(cost.rows());
  // Shortest augmenting path formulation with row/column potentials
  // (1-based internally, column 0 is the virtual source).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(size + 1, 0.0), v(size + 1, 0.0);
  std::vector<int> match(size + 1, 0), way(size + 1, 0);
  for (int i = 1; i <= size; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(size + 1, inf);
    std::vector<char> used(size + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= size; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= size; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(size), 0);
  for (int j = 1; j <= size; ++j)
    if (match[j] > 0) row_to_col[static_cast<std::size_t>(match[j] - 1)] = j - 1;
  return row_to_col;
}

double clustering_accuracy(std::span<const int> pred, std::span<const int> truth) {
  check_labels(pred, truth, "clustering_accuracy");
  const Matrix table = contingency(pred, truth);
  const Index size = std::max(table.rows(), table.cols());
  Matrix cost = Matrix::Zero(size, size);
  cost.topLeftCorner(table.rows(), table.cols()) = -table;
  const auto match = hungarian_assignment(cost);
  double hits = 0.0;
  for (Index i = 0; i < table.rows(); ++i) {
    const Index j = match[static_cast<std::size_t>(i)];
    if (j < table.cols()) hits += table(i, j);
  }
  return hits / static_cast<double>(pred.size());
}

Theorem1Report theorem1_diagnostic(std::span<const std::pair<Index, double>> drifts,
                                   const Theorem1Options& options) {
  Theorem1Report out;
  for (const auto& [m, a] : drifts) {
    if (m < options.window_lo || m > options.window_hi) continue;
    if (!(a > 0.0) || !std::isfinite(a))
      throw InvalidInput("theorem1_diagnostic: drift at m = " + std::to_string(m) +
                         " is not positive and finite");
    out.steps.push_back(m);
    out.drifts.push_back(a);
    out.scaled.push_back(static_cast<double>(m) * a);
  }
  if (out.steps.size() < 5)
    throw InvalidInput("theorem1_diagnostic: need at least 5 stream steps in [" +
                       std::to_string(options.window_lo) + ", " +
                       std::to_string(options.window_hi) + "], got " +
                       std::to_string(out.steps.size()));
  out.median_scaled = median(out.scaled);
  out.max_scaled = *std::max_element(out.scaled.begin(), out.scaled.end());
  out.ratio = out.max_scaled / out.median_scaled;

  double mx = 0.0, my = 0.0;
  const double count = static_cast<double>(out.steps.size());
  for (std::size_t i = 0; i < out.steps.size(); ++i) {
    mx += std::log(static_cast<double>(out.steps[i]));
    my += std::log(out.drifts[i]);
  }
  mx /= count;
  my /= count;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < out.steps.size(); ++i) {
    const double dx = std::log(static_cast<double>(out.steps[i])) - mx;
    sxy += dx * (std::log(out.drifts[i]) - my);
    sxx += dx * dx;
  }
  if (!(sxx > 0.0)) throw InvalidInput("theorem1_diagnostic: steps must not all coincide");
  out.slope = sxy / sxx;
  out.bounded = out.ratio <= options.bound_factor;
  out.decaying = out.slope <= options.slope_bound;
  return out;
}

Theorem3Report theorem3_diagnostic(const Matrix& x, const Matrix& z, const Matrix& z_tilde,
                                   const Hyperparams& hyper, Index k,
                                   const SolverConfig& config) {
  if (z.rows() != z_tilde.rows() || z.cols() != z_tilde.cols() || x.cols() != z.cols())
    throw InvalidInput("theorem3_diagnostic: X, Z and Z~ shapes disagree");
  if (k < 1) throw InvalidInput("theorem3_diagnostic: k must be >= 1");
  Theorem3Report out;
  const Matrix gram = z_tilde * z_tilde.transpose();
  const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues();
  out.lambda = eig.minCoeff();
  if (!(out.lambda > 1e-12 * std::max(eig.maxCoeff(), 1.0)))
    throw DegenerateInput("theorem3_diagnostic: Z~ Z~^T is singular");

  SolverConfig tight = config;
  tight.rel_tol = std::min(config.rel_tol, 1e-9);
  tight.max_prox_iters = std::max(config.max_prox_iters, 500);
  const ViewMatrix view{"view", x};
  const auto truncated = [&](const Matrix& latent, Index& rank) {
    ViewFunction vf = solve_view_function(view, latent, hyper, tight, 1).vf;
    rank = vf.rank();
    // S is diagonal with non-increasing entries after the solve.
    const Index keep = std::min(k, vf.rank());
    return Matrix(vf.col_space.leftCols(keep) * vf.weights.topLeftCorner(keep, keep) *
                  vf.row_space.leftCols(keep).transpose());
  };
  const Matrix w = truncated(z, out.rank_w);
  const Matrix w_tilde = truncated(z_tilde, out.rank_w_tilde);

  out.lhs = (w_tilde - w).norm();
  out.upsilon = x.norm();
  out.omega = z.norm();
  out.epsilon = (z_tilde - z).norm();
  const double e = out.epsilon;
  out.rhs = (out.upsilon * out.upsilon * (2.0 * e * out.omega + e * e) / hyper.c1 +
             e * out.upsilon + 2.0 * std::sqrt(static_cast<double>(k) + 1.0)) /
            out.lambda;
  return out;
}

std::vector<double> reconstruction_report(const ModelState& state,
                                          std::span<const ViewMatrix> views) {
  if (static_cast<Index>(views.size()) != state.views_seen())
    throw InvalidInput("reconstruction_report: view count does not match the model");
  std::vector<double> out;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const auto& vf = state.view_functions[v];
    if (views[v].dim() != vf.view_dim() || views[v].examples() != state.examples())
      throw InvalidInput("reconstruction_report: dimension mismatch on view " +
                         std::to_string(v));
    const double err = std::sqrt(reconstruction_sq_error(vf, views[v].X, state.latent));
    const double norm = views[v].X.norm();
    out.push_back(norm > 0 ? err / norm : err);
  }
  return out;
}

ClusteringScore evaluate_clustering(const Matrix& latent, std::span<const int> truth, int k,
                                    int reps, std::uint64_t seed, const KMeansOptions& options) {
  if (reps < 1) throw InvalidInput("evaluate_clustering: reps must be >= 1");
  if (static_cast<Index>(truth.size()) != latent.cols())
    throw InvalidInput("evaluate_clustering: label count does not match example count");
  ClusteringScore out;
  for (int r = 0; r < reps; ++r) {
    const auto km = kmeans(latent, k, seed + static_cast<std::uint64_t>(r), options);
    out.nmi.push_back(nmi(km.labels, truth));
    out.acc.push_back(clustering_accuracy(km.labels, truth));
  }
  auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(v.size()));
  };
  stats(out.nmi, out.nmi_mean, out.nmi_std);
  stats(out.acc, out.acc_mean, out.acc_std);
  return out;
}

}  // namespace svl
