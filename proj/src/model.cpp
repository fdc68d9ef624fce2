#include "svl/model.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "binary_io.hpp"
#include "svl/error.hpp"

namespace svl {

namespace {

constexpr char kMagic[4] = {'S', 'V', 'L', 'M'};
constexpr std::uint8_t kVersion = 1;

bool orthonormal(const Matrix& q, double tol) {
  if (q.cols() == 0) return true;
  return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff() <= tol;
}

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

void ViewFunction::validate() const {
  const Index k = weights.rows();
  if (weights.cols() != k || col_space.cols() != k || row_space.cols() != k)
    throw InvalidInput("view function: inconsistent factor shapes A " + dims(col_space) +
                       ", S " + dims(weights) + ", B " + dims(row_space));
  if (k > std::min(col_space.rows(), row_space.rows()))
    throw InvalidInput("view function: rank exceeds min(D_v, d)");
  require_finite(col_space, "view function A");
  require_finite(weights, "view function S");
  require_finite(row_space, "view function B");
  if (!orthonormal(col_space, 1e-8) || !orthonormal(row_space, 1e-8))
    throw InvalidInput("view function: A or B lacks orthonormal columns");
}

ViewFunction ViewFunction::zero(Index view_dim, Index latent_dim) {
  return ViewFunction{Matrix(view_dim, 0), Matrix(0, 0), Matrix(latent_dim, 0)};
}

Matrix compose(const ViewFunction& vf) {
  vf.validate();
  return vf.col_space * vf.weights * vf.row_space.transpose();
}

void Hyperparams::validate() const {
  if (!(c1 > 0.0) || !std::isfinite(c1)) throw InvalidInput("C1 must be positive");
  if (!(c2 > 0.0) || !std::isfinite(c2)) throw InvalidInput("C2 must be positive");
  if (latent_dim < 1) throw InvalidInput("latent dimension d must be >= 1");
}

void SolverConfig::validate() const {
  if (max_outer_iters < 1 || max_prox_iters < 1 || max_weight_iters < 1 || finetune_iters < 1)
    throw InvalidInput("solver iteration budgets must be >= 1");
  if (power_iters < 1 || oversample < 1)
    throw InvalidInput("power_iters and oversample must be >= 1");
  if (!(rel_tol > 0.0) || !(drop_tol > 0.0) || !(rank_prune_tol > 0.0))
    throw InvalidInput("solver tolerances must be positive");
  if (threads < 1) throw InvalidInput("threads must be >= 1");
}

void ModelState::validate() const {
  hyper.validate();
  if (latent.rows() != hyper.latent_dim)
    throw InvalidInput("latent matrix has " + std::to_string(latent.rows()) +
                       " rows but d = " + std::to_string(hyper.latent_dim));
  require_finite(latent, "latent matrix");
  for (const auto& vf : view_functions) {
    vf.validate();
    if (vf.latent_dim() != hyper.latent_dim)
      throw InvalidInput("view function row space does not match d");
  }
}

double reconstruction_sq_error(const ViewFunction& vf, const Matrix& x, const Matrix& z) {
  if (vf.rank() == 0) return x.squaredNorm();
  return (x - vf.col_space * (vf.weights * (vf.row_space.transpose() * z))).squaredNorm();
}

ObjectiveTerms objective(const ModelState& state, std::span<const ViewMatrix> views) {
  if (static_cast<Index>(views.size()) != state.views_seen())
    throw InvalidInput("objective: " + std::to_string(views.size()) + " views for " +
                       std::to_string(state.views_seen()) + " view functions");
  const Matrix& z = state.latent;
  ObjectiveTerms out;
  double sq = 0.0;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const auto& vf = state.view_functions[v];
    if (views[v].dim() != vf.view_dim() || views[v].examples() != z.cols() ||
        vf.latent_dim() != z.rows())
      throw InvalidInput("objective: dimension mismatch on view " + std::to_string(v));
    sq += reconstruction_sq_error(vf, views[v].X, z);
    if (vf.rank() > 0) out.trace_penalty += nuclear_norm(vf.weights);
  }
  const double nm = static_cast<double>(z.cols()) * static_cast<double>(views.size());
  out.loss = nm > 0 ? sq / nm : 0.0;
  out.trace_penalty *= state.hyper.c1;
  out.ridge_penalty = state.hyper.c2 * z.squaredNorm();
  return out;
}

Matrix encode_with_ridge(std::span<const ViewFunction> vfs, std::span<const Matrix> views,
                         double ridge) {
  if (vfs.size() != views.size() || vfs.empty())
    throw InvalidInput("encode: need exactly one input per view function");
  const Index d = vfs.front().latent_dim();
  const Index n = views.front().cols();
  Matrix gram = ridge * Matrix::Identity(d, d);
  Matrix rhs = Matrix::Zero(d, n);
  for (std::size_t v = 0; v < vfs.size(); ++v) {
    const auto& vf = vfs[v];
    if (views[v].rows() != vf.view_dim() || views[v].cols() != n || vf.latent_dim() != d)
      throw InvalidInput("encode: dimension mismatch on view " + std::to_string(v));
    if (vf.rank() == 0) continue;
    const Matrix bst = vf.row_space * vf.weights.transpose();  // B S^T, d x k
    gram.noalias() += bst * bst.transpose();
    rhs.noalias() += bst * (vf.col_space.transpose() * views[v]);
  }
  return gram.ldlt().solve(rhs);
}

Matrix encode(const ModelState& state, std::span<const Matrix> example_views) {
  const double ridge = static_cast<double>(state.examples()) *
                       static_cast<double>(state.views_seen()) * state.hyper.c2;
  return encode_with_ridge(state.view_functions, example_views, ridge);
}

Vector encode(const ModelState& state, std::span<const Vector> example_views) {
  std::vector<Matrix> cols;
  cols.reserve(example_views.size());
  for (const auto& x : example_views) cols.emplace_back(x);
  return encode(state, std::span<const Matrix>(cols)).col(0);
}

void save_model(const ModelState& state, const std::filesystem::path& path) {
  state.validate();
  detail::ByteWriter w;
  w.raw(kMagic, sizeof kMagic);
  w.u8(kVersion);
  w.u64(static_cast<std::uint64_t>(state.views_seen()));
  w.u64(static_cast<std::uint64_t>(state.hyper.latent_dim));
  w.u64(static_cast<std::uint64_t>(state.examples()));
  w.f64(state.hyper.c1);
  w.f64(state.hyper.c2);
  for (const auto& vf : state.view_functions) {
    w.u64(static_cast<std::uint64_t>(vf.view_dim()));
    w.u64(static_cast<std::uint64_t>(vf.rank()));
    w.matrix(vf.col_space);
    w.matrix(vf.weights);
    w.matrix(vf.row_space);
  }
  w.matrix(state.latent);
  w.write_to(path);
}

ModelState load_model(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  char magic[4];
  r.raw(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw VersionError(path.string() + ": not a model file (bad magic)");
  const auto version = r.u8("version");
  if (version != kVersion)
    throw VersionError(path.string() + ": unsupported model version " +
                       std::to_string(version));
  const auto m = r.u64("view count");
  const auto d = r.u64("latent dimension");
  const auto n = r.u64("example count");
  ModelState state;
  state.hyper.c1 = r.f64("C1");
  state.hyper.c2 = r.f64("C2");
  state.hyper.latent_dim = static_cast<Index>(d);
  if (m > r.remaining() / 16) r.fail("view count exceeds file size");
  for (std::uint64_t v = 0; v < m; ++v) {
    const auto dv = r.u64("view dimension");
    const auto kv = r.u64("view rank");
    ViewFunction vf;
    vf.col_space = r.matrix(dv, kv, "A_v");
    vf.weights = r.matrix(kv, kv, "S_v");
    vf.row_space = r.matrix(d, kv, "B_v");
    state.view_functions.push_back(std::move(vf));
  }
  state.latent = r.matrix(d, n, "Z");
  if (r.remaining() != 0) r.fail("trailing bytes after latent matrix");
  try {
    state.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(path.string() + ": invalid model contents: " + e.what());
  }
  return state;
}

}  // namespace svl
