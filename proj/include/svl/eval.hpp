#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "svl/model.hpp"

namespace svl {

using LabelVector = std::vector<int>;

struct KMeansOptions {
  int restarts = 20;
  int max_iters = 300;
  double tol = 1e-6;  // centroid shift (Frobenius) that ends Lloyd iterations
  int threads = 1;
};

struct KMeansResult {
  LabelVector labels;
  Matrix centroids;  // d x k
  double wcss = 0.0;
};

/// Lloyd's algorithm on the columns of `points` with greedy k-means++
/// seeding; the restart with the lowest within-cluster sum of squares wins.
/// Restart r draws from a seed derived from (seed, r) only.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed,
                    const KMeansOptions& options = {});

/// Normalized mutual information I(pred; truth) / sqrt(H(pred) H(truth)).
/// Two single-cluster partitions score 1; a single-cluster partition against
/// a non-trivial one scores 0.
double nmi(std::span<const int> pred, std::span<const int> truth);

/// Fraction of examples matched under the best one-to-one relabeling of
/// `pred` onto `truth` (Hungarian assignment on the confusion matrix).
double clustering_accuracy(std::span<const int> pred, std::span<const int> truth);

/// Minimum-cost perfect assignment for a square cost matrix; returns the
/// column assigned to each row.
std::vector<int> hungarian_assignment(const Matrix& cost);

struct Theorem1Report {
  std::vector<Index> steps;   // m
  std::vector<double> drifts; // a_m
  std::vector<double> scaled; // m * a_m
  double median_scaled = 0.0;
  double max_scaled = 0.0;
  double ratio = 0.0;         // max / median over the window
  double slope = 0.0;         // least-squares slope of log a_m on log m
  bool bounded = false;       // ratio <= bound_factor
  bool decaying = false;      // slope <= slope_bound
  bool holds() const { return bounded && decaying; }
};

struct Theorem1Options {
  Index window_lo = 5;
  Index window_hi = 20;
  double bound_factor = 3.0;
  double slope_bound = -0.5;
};

/// Checks the drift sequence ||Z^m - Z^{m-1}||_F for O(1/m) behaviour:
/// m * a_m bounded by bound_factor times its median and a log-log slope
/// at most slope_bound, both over m in [window_lo, window_hi]. Needs at
/// least five steps inside the window.
Theorem1Report theorem1_diagnostic(std::span<const std::pair<Index, double>> drifts,
                                   const Theorem1Options& options = {});

struct Theorem3Report {
  double lhs = 0.0;  // ||W' - W||_F
  double rhs = 0.0;
  double upsilon = 0.0;  // ||X^v||_F
  double omega = 0.0;    // ||Z||_F
  double epsilon = 0.0;  // ||Z~ - Z||_F
  double lambda = 0.0;   // lambda_min(Z~ Z~^T)
  Index rank_w = 0;
  Index rank_w_tilde = 0;
  bool holds() const { return lhs <= rhs; }
};

/// Solves the view function against Z and against Z_tilde (1/n
/// normalization, tight tolerance), truncates both to rank k and evaluates
/// the perturbation bound
///   (1/lambda) (Upsilon^2 (2 eps Omega + eps^2) / C1 + eps Upsilon + 2 sqrt(k+1)).
Theorem3Report theorem3_diagnostic(const Matrix& x, const Matrix& z, const Matrix& z_tilde,
                                   const Hyperparams& hyper, Index k,
                                   const SolverConfig& config);

/// ||X^v - W_v Z||_F / ||X^v||_F per view (0 for an all-zero view that is
/// reconstructed exactly).
std::vector<double> reconstruction_report(const ModelState& state,
                                          std::span<const ViewMatrix> views);

struct ClusteringScore {
  double nmi_mean = 0.0, nmi_std = 0.0;
  double acc_mean = 0.0, acc_std = 0.0;
  std::vector<double> nmi, acc;
};

/// Repeats k-means on the columns of `latent` `reps` times (seed + rep) and
/// aggregates NMI and ACC against `truth`. std is the population deviation.
ClusteringScore evaluate_clustering(const Matrix& latent, std::span<const int> truth, int k,
                                    int reps, std::uint64_t seed,
                                    const KMeansOptions& options = {});

}  // namespace svl
