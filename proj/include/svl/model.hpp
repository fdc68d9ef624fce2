#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "svl/linalg.hpp"
#include "svl/view.hpp"

namespace svl {

/// Factored linear view function W_v = A_v S_v B_v^T.
///
/// col_space (A_v, D_v x k_v) and row_space (B_v, d x k_v) have orthonormal
/// columns; weights (S_v, k_v x k_v) combines the rank-one subspaces.
struct ViewFunction {
  Matrix col_space;
  Matrix weights;
  Matrix row_space;

  Index view_dim() const { return col_space.rows(); }
  Index latent_dim() const { return row_space.rows(); }
  Index rank() const { return weights.rows(); }

  /// Throws InvalidInput on shape mismatch, non-orthonormal factors, or
  /// non-finite entries.
  void validate() const;

  /// Zero view function of rank 0.
  static ViewFunction zero(Index view_dim, Index latent_dim);
};

Matrix compose(const ViewFunction& vf);

struct Hyperparams {
  double c1 = 1e-3;  // trace-norm weight
  double c2 = 1e-3;  // latent ridge weight
  Index latent_dim = 10;

  void validate() const;
};

enum class StepRule { lipschitz, backtracking };

/// Iteration budgets and tolerances shared by the solvers.
struct SolverConfig {
  int max_outer_iters = 30;     // batch alternations
  int max_prox_iters = 100;     // view-function prox steps
  int max_weight_iters = 5000;  // prox steps of one combination-weight solve
  int finetune_iters = 10;      // streaming fine-tune alternations
  double rel_tol = 1e-6;
  StepRule step_rule = StepRule::lipschitz;
  int power_iters = 4;
  int oversample = 5;
  double drop_tol = 1e-8;
  double rank_prune_tol = 1e-8;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

/// All view functions plus the shared latent matrix Z (d x n).
struct ModelState {
  std::vector<ViewFunction> view_functions;
  Matrix latent;
  Hyperparams hyper;

  Index views_seen() const { return static_cast<Index>(view_functions.size()); }
  Index examples() const { return latent.cols(); }

  void validate() const;
};

struct ObjectiveTerms {
  double loss = 0.0;           // (1/(n m)) sum ||x_i^v - W_v z_i||^2
  double trace_penalty = 0.0;  // C1 sum ||S_v||_*
  double ridge_penalty = 0.0;  // C2 ||Z||_F^2

  double total() const { return loss + trace_penalty + ridge_penalty; }
};

/// Multi-view objective over m = views.size() views. Throws InvalidInput
/// unless the views line up one-to-one with the state's view functions.
ObjectiveTerms objective(const ModelState& state, std::span<const ViewMatrix> views);

/// Squared reconstruction error ||X - A S B^T Z||_F^2 computed from the
/// factors without forming W.
double reconstruction_sq_error(const ViewFunction& vf, const Matrix& x, const Matrix& z);

/// Latent code of examples outside the training set, one column per
/// example: (sum W^T W + n m C2 I)^{-1} sum W^T x with the training n and m.
Matrix encode(const ModelState& state, std::span<const Matrix> example_views);

/// Latent code of a single example given one vector per view.
Vector encode(const ModelState& state, std::span<const Vector> example_views);

/// The same closed form with an explicit ridge coefficient.
Matrix encode_with_ridge(std::span<const ViewFunction> vfs, std::span<const Matrix> views,
                         double ridge);

void save_model(const ModelState& state, const std::filesystem::path& path);
ModelState load_model(const std::filesystem::path& path);

}  // namespace svl
