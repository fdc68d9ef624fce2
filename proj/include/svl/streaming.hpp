#pragma once

#include <optional>
#include <span>
#include <vector>

#include "svl/batch.hpp"
#include "svl/model.hpp"

namespace svl {

struct WeightSolveResult {
  Matrix weights;
  bool converged = false;
  int iterations = 0;
  double relative_residual = 0.0;
  double objective = 0.0;  // h(S) + C1 ||S||_* up to the constant ||X||^2 term
};

/// Combination-weight problem in fixed orthonormal subspaces A, B:
///   min_S (1/(n m)) ||X - A S B^T Z||_F^2 + C1 ||S||_*
/// written through the k x k statistics P = A^T X Z^T B and G = B^T Z Z^T B.
/// Solved by accelerated proximal gradient with exact SVT and objective
/// restarts; returns the best iterate, which is never worse than `start`.
class WeightProblem {
 public:
  WeightProblem(Matrix cross, Matrix gram, double scale, double c1);

  /// P and G from the full data.
  static WeightProblem from_data(const Matrix& x, const Matrix& col_space,
                                 const Matrix& row_space, const Matrix& z, double scale,
                                 double c1);
  /// P and G from the precomputed X Z^T and Z Z^T.
  static WeightProblem from_statistics(const Matrix& xzt, const Matrix& zzt,
                                       const Matrix& col_space, const Matrix& row_space,
                                       double scale, double c1);

  double value(const Matrix& s) const;
  double smooth_value(const Matrix& s) const;  // value without the trace-norm term
  Matrix gradient(const Matrix& s) const;
  double lipschitz() const { return lipschitz_; }
  double residual(const Matrix& s) const;

  WeightSolveResult solve(const Matrix& start, double rel_tol, int max_iters) const;

 private:
  Matrix cross_;
  Matrix gram_;
  double scale_;
  double c1_;
  double lipschitz_;
};

/// New-view solve with Z held fixed, using the 1/n normalization of the
/// single-view problem.
ViewSolveResult solve_new_view(const Matrix& latent, const ViewMatrix& x_new,
                               const Hyperparams& hyper, const SolverConfig& config);

/// One view's combination weights with A_v, B_v held fixed, normalized by
/// 1/(n m_total).
WeightSolveResult solve_weights(const ViewMatrix& x, const Matrix& col_space,
                                const Matrix& row_space, const Matrix& start, const Matrix& z,
                                const Hyperparams& hyper, const SolverConfig& config,
                                Index m_total);

struct FinetuneResult {
  ModelState state;
  /// Objective of the input state followed by one entry per alternation.
  std::vector<double> objective_trace;
  bool converged = false;
  bool weights_converged = true;
  int iterations = 0;
};

/// Alternates the closed-form latent update and solve_weights for every
/// view, leaving every A_v and B_v untouched.
FinetuneResult finetune(const ModelState& state, std::span<const ViewMatrix> all_views,
                        const SolverConfig& config);

struct StreamDiagnostics {
  Index views_seen = 0;              // m after the arrival
  std::vector<double> objective_trace;
  double z_drift = 0.0;              // ||Z^m - Z^{m-1}||_F
  double part1_seconds = 0.0;
  double part2_seconds = 0.0;
  std::vector<Index> ranks;          // k_v per view after the arrival
  bool new_view_converged = false;
  bool finetune_converged = false;
  double final_objective() const {
    return objective_trace.empty() ? 0.0 : objective_trace.back();
  }
};

struct AddViewResult {
  ModelState state;
  StreamDiagnostics diagnostics;
};

/// Absorbs one new view: solve_new_view against the current latent matrix,
/// then finetune over all m+1 views. `all_views` lists the past views in
/// model order followed by the new view.
AddViewResult add_view(const ModelState& state, std::span<const ViewMatrix> all_views,
                       const SolverConfig& config);

/// Baseline: re-solve the batch problem over every view. With `warm`, the
/// new views' functions are first solved against warm->latent and the batch
/// alternation starts from the resulting state.
BatchResult naive_retrain(std::span<const ViewMatrix> all_views, const Hyperparams& hyper,
                          const SolverConfig& config, const ModelState* warm = nullptr);

}  // namespace svl
