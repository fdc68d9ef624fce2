// Command-line driver: fit, stream, eval, bench, diag, synth.

#include "svl/batch.hpp"
#include "svl/data.hpp"
#include "svl/error.hpp"
#include "svl/eval.hpp"
#include "svl/model.hpp"
#include "svl/streaming.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace svl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

// Usage and config problems; mapped to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-convergence under --strict; mapped to exit code 4.
struct StrictFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("svl");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SVL_LOG")) {
    const std::string level = env;
    if (level == "0" || level == "off") spdlog::set_level(spdlog::level::off);
    else if (level == "1" || level == "warn") spdlog::set_level(spdlog::level::warn);
    else if (level == "2" || level == "info") spdlog::set_level(spdlog::level::info);
    else if (level == "3" || level == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::set_level(spdlog::level::from_str(level));
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

// Shortest round-trip representation, so CSVs are byte-stable and exact.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- settings shared by every command --------------------------------

struct Settings {
  Hyperparams hyper{0.03, 1e-5, 100};
  SolverConfig solver;
  Normalization normalization = Normalization::zscore;
  int reps = 10;
  bool strict = false;

  std::map<std::string, std::function<void(const std::string&)>> setters();
  void apply(const std::string& key, const std::string& value);
};

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (in.fail() || !in.eof()) throw UsageError("bad value '" + value + "' for " + key);
  return out;
}

std::map<std::string, std::function<void(const std::string&)>> Settings::setters() {
  auto real = [](double& field, const std::string& key) {
    return [&field, key](const std::string& v) { field = parse_number<double>(key, v); };
  };
  auto integer = [](int& field, const std::string& key) {
    return [&field, key](const std::string& v) { field = parse_number<int>(key, v); };
  };
  return {
      {"c1", real(hyper.c1, "c1")},
      {"c2", real(hyper.c2, "c2")},
      {"d", [this](const std::string& v) { hyper.latent_dim = parse_number<Index>("d", v); }},
      {"latent_dim",
       [this](const std::string& v) { hyper.latent_dim = parse_number<Index>("latent_dim", v); }},
      {"max_outer_iters", integer(solver.max_outer_iters, "max_outer_iters")},
      {"max_prox_iters", integer(solver.max_prox_iters, "max_prox_iters")},
      {"max_weight_iters", integer(solver.max_weight_iters, "max_weight_iters")},
      {"finetune_iters", integer(solver.finetune_iters, "finetune_iters")},
      {"rel_tol", real(solver.rel_tol, "rel_tol")},
      {"step_rule",
       [this](const std::string& v) {
         if (v == "lipschitz") solver.step_rule = StepRule::lipschitz;
         else if (v == "backtracking") solver.step_rule = StepRule::backtracking;
         else throw UsageError("step_rule must be lipschitz or backtracking, got '" + v + "'");
       }},
      {"power_iters", integer(solver.power_iters, "power_iters")},
      {"oversample", integer(solver.oversample, "oversample")},
      {"drop_tol", real(solver.drop_tol, "drop_tol")},
      {"rank_prune_tol", real(solver.rank_prune_tol, "rank_prune_tol")},
      {"seed",
       [this](const std::string& v) { solver.seed = parse_number<std::uint64_t>("seed", v); }},
      {"threads", integer(solver.threads, "threads")},
      {"normalize",
       [this](const std::string& v) {
         try {
           normalization = parse_normalization(v);
         } catch (const InvalidInput& e) {
           throw UsageError(e.what());
         }
       }},
      {"reps", integer(reps, "reps")},
      {"strict", [this](const std::string& v) { strict = v == "1" || v == "true"; }},
  };
}

void Settings::apply(const std::string& key, const std::string& value) {
  auto table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw UsageError("unknown config key '" + key + "'");
  it->second(value);
}

// Flat key=value file; '#' starts a comment.
void load_config_file(Settings& settings, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    settings.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

// Command-line overrides are recorded as raw strings so that a config file
// can be read first and the flags applied on top of it.
struct CommonFlags {
  std::string config;
  std::vector<std::string> sets;
  std::map<std::string, std::string> overrides;
  std::string data_dir;
  std::string out;
  std::string csv;

  void add_to(CLI::App* cmd, bool with_data, bool with_solver) {
    cmd->add_option("--config", config, "flat key=value config file");
    cmd->add_option("--set", sets, "key=value override (repeatable)");
    if (with_data) {
      cmd->add_option("--data-dir", data_dir, "mfeat or manifest dataset directory")->required();
      add_override(cmd, "--normalize", "normalize", "zscore | unit_l2 | none");
    }
    if (with_solver) {
      add_override(cmd, "--d", "d", "latent dimension");
      add_override(cmd, "--c1", "c1", "trace-norm weight");
      add_override(cmd, "--c2", "c2", "latent ridge weight");
      add_override(cmd, "--step", "step_rule", "lipschitz | backtracking");
    }
    add_override(cmd, "--seed", "seed", "master seed");
    add_override(cmd, "--threads", "threads", "worker cap");
    cmd->add_flag("--strict", [this](std::int64_t) { overrides["strict"] = "1"; },
                  "treat non-convergence as fatal (exit 4)");
  }

  void add_override(CLI::App* cmd, const std::string& flag, const std::string& key,
                    const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { overrides[key] = v; }, help);
  }

  Settings resolve() const {
    Settings s;
    if (!config.empty()) load_config_file(s, config);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
      s.apply(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [k, v] : overrides) s.apply(k, v);
    try {
      s.hyper.validate();
      s.solver.validate();
    } catch (const InvalidInput& e) {
      throw UsageError(e.what());
    }
    if (s.reps < 1) throw UsageError("reps must be at least 1");
    return s;
  }
};

// ---- output helpers ---------------------------------------------------

class CsvOut {
 public:
  explicit CsvOut(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::trunc);
      if (!file_) throw UsageError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void write_header(std::ostream& out, const std::string& schema, const std::string& columns) {
  out << "# svl " << schema << " v1\n" << columns << '\n';
}

// ---- dataset / model plumbing ----------------------------------------

struct ModelSidecar {
  Normalization normalization = Normalization::zscore;
  std::vector<std::string> views;
};

fs::path sidecar_path(const fs::path& model) { return fs::path(model.string() + ".views"); }

void write_sidecar(const fs::path& model, const ModelSidecar& sc) {
  std::ofstream out(sidecar_path(model), std::ios::trunc);
  if (!out) throw UsageError("cannot write " + sidecar_path(model).string());
  out << "normalize " << to_string(sc.normalization) << '\n';
  for (const auto& v : sc.views) out << "view " << v << '\n';
}

ModelSidecar read_sidecar(const fs::path& model) {
  std::ifstream in(sidecar_path(model));
  if (!in) throw FormatError("missing view list " + sidecar_path(model).string());
  ModelSidecar sc;
  std::string key, value;
  while (in >> key >> value) {
    if (key == "normalize") sc.normalization = parse_normalization(value);
    else if (key == "view") sc.views.push_back(value);
    else throw FormatError("unknown entry '" + key + "' in " + sidecar_path(model).string());
  }
  return sc;
}

Dataset load_data(const std::string& dir) {
  if (!fs::is_directory(dir)) throw FormatError("dataset directory not found: " + dir);
  spdlog::info("loading dataset from {}", dir);
  return load_any(dir);
}

ViewList select_views(const Dataset& data, const std::vector<std::string>& names,
                      Normalization scheme) {
  ViewList out;
  for (const auto& name : names) {
    if (!data.has_view(name)) {
      std::vector<std::string> known;
      for (const auto& v : data.views) known.push_back(v.name);
      throw UsageError("unknown view '" + name + "' (have " + join(known, ',') + ")");
    }
    out.push_back(normalize(data.view(name), scheme));
  }
  return out;
}

void check_converged(bool ok, const Settings& s, const std::string& what) {
  if (ok) return;
  if (s.strict) throw StrictFailure(what + " did not converge");
  spdlog::warn("{} did not converge within the iteration budget", what);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- commands ---------------------------------------------------------

int cmd_fit(const CommonFlags& flags, const std::string& init_views) {
  const Settings s = flags.resolve();
  if (flags.out.empty()) throw UsageError("fit needs --out");
  const auto names = split_list(init_views);
  if (names.empty()) throw UsageError("fit needs --init-views");
  const Dataset data = load_data(flags.data_dir);
  const ViewList views = select_views(data, names, s.normalization);
  spdlog::info("fitting {} views with d={}", views.size(), s.hyper.latent_dim);
  const BatchResult r = fit_batch(views, s.hyper, s.solver);
  save_model(r.state, flags.out);
  write_sidecar(flags.out, {s.normalization, names});

  CsvOut csv(flags.csv);
  write_header(csv.stream(), "fit-trace", "iteration,objective");
  for (std::size_t i = 0; i < r.objective_trace.size(); ++i)
    csv.stream() << i + 1 << ',' << num(r.objective_trace[i]) << '\n';
  check_converged(r.views_converged, s, "view-function solve");
  return kExitOk;
}

int cmd_stream(const CommonFlags& flags, const std::string& model_in,
               const std::string& new_views, int eval_reps, bool timings) {
  const Settings s = flags.resolve();
  ModelState state = load_model(model_in);
  ModelSidecar sc = read_sidecar(model_in);
  const auto arriving = split_list(new_views);
  const std::string out = flags.out.empty() ? model_in : flags.out;

  CsvOut csv(flags.csv);
  std::string columns = "m,view,objective,z_drift,rank,new_view_converged,finetune_converged";
  if (eval_reps > 0) columns += ",nmi_mean,nmi_std,acc_mean,acc_std";
  if (timings) columns += ",part1_seconds,part2_seconds";
  write_header(csv.stream(), "stream-diagnostics", columns);

  const Dataset data = arriving.empty() && eval_reps == 0 ? Dataset{} : load_data(flags.data_dir);
  ViewList all = arriving.empty() ? ViewList{} : select_views(data, sc.views, sc.normalization);
  const int k = data.n_classes;
  for (const auto& name : arriving) {
    all.push_back(select_views(data, {name}, sc.normalization).front());
    spdlog::info("adding view {} (m -> {})", name, all.size());
    AddViewResult r = add_view(state, all, s.solver);
    state = std::move(r.state);
    sc.views.push_back(name);
    const auto& dg = r.diagnostics;
    auto& o = csv.stream();
    o << dg.views_seen << ',' << name << ',' << num(dg.final_objective()) << ','
      << num(dg.z_drift) << ',' << dg.ranks.back() << ',' << int(dg.new_view_converged) << ','
      << int(dg.finetune_converged);
    if (eval_reps > 0) {
      const auto score =
          evaluate_clustering(state.latent, data.labels, k, eval_reps, s.solver.seed);
      o << ',' << num(score.nmi_mean) << ',' << num(score.nmi_std) << ','
        << num(score.acc_mean) << ',' << num(score.acc_std);
    }
    if (timings) o << ',' << num(dg.part1_seconds) << ',' << num(dg.part2_seconds);
    o << '\n';
    check_converged(dg.new_view_converged, s, "new view '" + name + "'");
  }
  if (!arriving.empty() || out != model_in) {
    save_model(state, out);
    write_sidecar(out, sc);
  }
  return kExitOk;
}

int cmd_eval(const CommonFlags& flags, const std::string& model_in, int k) {
  const Settings s = flags.resolve();
  const ModelState state = load_model(model_in);
  const ModelSidecar sc = read_sidecar(model_in);
  const Dataset data = load_data(flags.data_dir);
  if (static_cast<Index>(data.labels.size()) != state.examples())
    throw FormatError("label count does not match the model's example count");
  const ViewList views = select_views(data, sc.views, sc.normalization);
  if (k <= 0) k = data.n_classes;
  const auto score = evaluate_clustering(state.latent, data.labels, k, s.reps, s.solver.seed);
  const auto recon = reconstruction_report(state, views);
  double recon_mean = 0.0;
  for (double r : recon) recon_mean += r / static_cast<double>(recon.size());

  CsvOut csv(flags.csv);
  write_header(csv.stream(), "eval",
               "views,m,d,k,reps,nmi_mean,nmi_std,acc_mean,acc_std,objective,recon_mean");
  csv.stream() << join(sc.views, '+') << ',' << state.views_seen() << ','
               << state.latent.rows() << ',' << k << ',' << s.reps << ','
               << num(score.nmi_mean) << ',' << num(score.nmi_std) << ','
               << num(score.acc_mean) << ',' << num(score.acc_std) << ','
               << num(objective(state, views).total()) << ',' << num(recon_mean) << '\n';
  return kExitOk;
}

struct SynthFlags {
  Index n = 500;
  Index dim = 100;
  Index rank = 5;
  Index views = 8;
  double noise = 0.1;
  int classes = 5;
};

SyntheticSpec make_spec(const SynthFlags& f, const Settings& s) {
  SyntheticSpec spec;
  spec.n = f.n;
  spec.d = s.hyper.latent_dim;
  spec.view_dims.assign(f.views, f.dim);
  spec.ranks.assign(f.views, f.rank);
  spec.noise_sigma = f.noise;
  spec.n_classes = f.classes;
  spec.seed = s.solver.seed;
  return spec;
}

void add_synth_flags(CLI::App* cmd, SynthFlags& f) {
  cmd->add_option("--n", f.n, "examples");
  cmd->add_option("--dim", f.dim, "dimension of every view");
  cmd->add_option("--rank", f.rank, "rank of every true view function");
  cmd->add_option("--views", f.views, "number of views");
  cmd->add_option("--noise", f.noise, "noise standard deviation");
  cmd->add_option("--classes", f.classes, "latent classes");
}

// Paired streaming-vs-retrain runs: a base model on the first `init` views,
// then every further view absorbed by add_view and, separately, by a
// warm-started naive_retrain from the same state.
int cmd_bench(const CommonFlags& flags, const SynthFlags& sf, Index init) {
  const Settings s = flags.resolve();
  if (init < 1 || init >= sf.views) throw UsageError("--init must be in [1, views)");
  const auto stream = synth_stream(make_spec(sf, s));
  const std::span<const ViewMatrix> all(stream.views);
  ModelState state = fit_batch(all.first(init), s.hyper, s.solver).state;

  CsvOut csv(flags.csv);
  write_header(csv.stream(), "bench", "m,method,seconds,objective,speedup");
  for (Index m = init + 1; m <= sf.views; ++m) {
    auto t0 = std::chrono::steady_clock::now();
    AddViewResult added = add_view(state, all.first(m), s.solver);
    const double t_add = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const BatchResult retrain = naive_retrain(all.first(m), s.hyper, s.solver, &state);
    const double t_retrain = seconds_since(t0);
    const double f_add = objective(added.state, all.first(m)).total();
    auto& o = csv.stream();
    o << m << ",add_view," << num(t_add) << ',' << num(f_add) << ",1\n";
    o << m << ",naive_retrain," << num(t_retrain) << ',' << num(retrain.objective_trace.back())
      << ',' << num(t_retrain / t_add) << '\n';
    state = std::move(added.state);
  }
  return kExitOk;
}

int cmd_diag_theorem1(const CommonFlags& flags, const SynthFlags& sf, Index init) {
  const Settings s = flags.resolve();
  const auto stream = synth_stream(make_spec(sf, s));
  const std::span<const ViewMatrix> all(stream.views);
  if (init < 1 || init >= sf.views) throw UsageError("--init must be in [1, views)");
  ModelState state = fit_batch(all.first(init), s.hyper, s.solver).state;
  std::vector<std::pair<Index, double>> drifts;
  for (Index m = init + 1; m <= sf.views; ++m) {
    AddViewResult r = add_view(state, all.first(m), s.solver);
    drifts.push_back({m, r.diagnostics.z_drift});
    state = std::move(r.state);
  }
  const auto rep = theorem1_diagnostic(drifts);
  CsvOut csv(flags.csv);
  write_header(csv.stream(), "diag-theorem1", "m,z_drift,m_times_drift");
  for (const auto& [m, a] : drifts)
    csv.stream() << m << ',' << num(a) << ',' << num(double(m) * a) << '\n';
  csv.stream() << "# slope=" << num(rep.slope) << " ratio=" << num(rep.ratio)
               << " holds=" << int(rep.holds()) << '\n';
  if (!rep.holds() && s.strict) throw StrictFailure("drift sequence violates the O(1/m) shape");
  return kExitOk;
}

int cmd_diag_theorem3(const CommonFlags& flags, Index n, Index dim, int instances,
                      const std::vector<double>& epsilons) {
  const Settings s = flags.resolve();
  const Index d = s.hyper.latent_dim;
  CsvOut csv(flags.csv);
  write_header(csv.stream(), "diag-theorem3",
               "instance,epsilon,lhs,rhs,holds,upsilon,omega,lambda,rank_w,rank_w_tilde");
  bool all_hold = true;
  for (int i = 0; i < instances; ++i) {
    const std::uint64_t base = s.solver.seed * 1000 + static_cast<std::uint64_t>(i) * 3;
    const Matrix z = gaussian_matrix(d, n, base);
    const Matrix x = gaussian_matrix(dim, d, base + 1) * z + 0.1 * gaussian_matrix(dim, n, base + 2);
    const Matrix dir = gaussian_matrix(d, n, base + 3);
    for (double eps : epsilons) {
      const Matrix zt = z + eps * dir / dir.norm();
      const auto r = theorem3_diagnostic(x, z, zt, s.hyper, std::min(dim, d), s.solver);
      all_hold = all_hold && r.holds();
      csv.stream() << i << ',' << num(eps) << ',' << num(r.lhs) << ',' << num(r.rhs) << ','
                   << int(r.holds()) << ',' << num(r.upsilon) << ',' << num(r.omega) << ','
                   << num(r.lambda) << ',' << r.rank_w << ',' << r.rank_w_tilde << '\n';
    }
  }
  if (!all_hold && s.strict) throw StrictFailure("perturbation bound violated");
  return kExitOk;
}

int cmd_synth(const CommonFlags& flags, const SynthFlags& sf) {
  const Settings s = flags.resolve();
  if (flags.out.empty()) throw UsageError("synth needs --out");
  const auto stream = synth_stream(make_spec(sf, s));
  save_dataset({stream.views, stream.truth.labels, sf.classes}, flags.out);
  CsvOut csv(flags.csv);
  write_header(csv.stream(), "synth", "view,dim,rank,snr");
  for (std::size_t v = 0; v < stream.views.size(); ++v)
    csv.stream() << stream.views[v].name << ',' << stream.views[v].dim() << ','
                 << stream.truth.ranks[v] << ',' << num(stream.truth.snr[v]) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Streaming multi-view subspace learning"};
  app.require_subcommand(1);

  CommonFlags fit_f, stream_f, eval_f, bench_f, t1_f, t3_f, synth_f;
  std::string init_views = "fac,fou,kar";
  auto* fit = app.add_subcommand("fit", "train a base model on the initial views");
  fit_f.add_to(fit, true, true);
  fit->add_option("--init-views,--views", init_views, "comma-separated initial views");
  fit->add_option("--out", fit_f.out, "model file to write")->required();
  fit->add_option("--csv", fit_f.csv, "objective trace CSV (default stdout)");

  std::string model_in, new_views;
  int eval_reps = 0;
  bool timings = false;
  auto* stream = app.add_subcommand("stream", "absorb new views into a model, in order");
  stream_f.add_to(stream, false, false);
  stream->add_option("--data-dir", stream_f.data_dir, "dataset directory");
  stream->add_option("--model", model_in, "input model file")->required();
  stream->add_option("--views", new_views, "comma-separated arriving views");
  stream->add_option("--out", stream_f.out, "output model (default: overwrite input)");
  stream->add_option("--csv", stream_f.csv, "diagnostics CSV (default stdout)");
  stream->add_option("--eval-reps", eval_reps, "also score clustering after each arrival");
  stream->add_flag("--timings", timings, "append wall-clock columns (not byte-stable)");

  std::string eval_model;
  int k = 0;
  auto* ev = app.add_subcommand("eval", "cluster the latent codes and score them");
  eval_f.add_to(ev, true, false);
  ev->add_option("--model", eval_model, "model file")->required();
  ev->add_option("--k", k, "clusters (default: number of classes)");
  eval_f.add_override(ev, "--reps", "reps", "k-means repetitions");
  ev->add_option("--out,--csv", eval_f.csv, "CSV output (default stdout)");

  SynthFlags bench_s;
  Index bench_init = 4;
  auto* bench = app.add_subcommand("bench", "time add_view against retraining");
  bench_f.add_to(bench, false, true);
  add_synth_flags(bench, bench_s);
  bench->add_option("--init", bench_init, "views in the base model");
  bench->add_option("--out,--csv", bench_f.csv, "CSV output (default stdout)");

  auto* diag = app.add_subcommand("diag", "drift and perturbation-bound diagnostics");
  diag->require_subcommand(1);
  SynthFlags t1_s;
  t1_s.views = 20;
  t1_s.dim = 30;
  Index t1_init = 2;
  auto* t1 = diag->add_subcommand("drift", "latent drift along a synthetic stream");
  t1_f.add_to(t1, false, true);
  add_synth_flags(t1, t1_s);
  t1->add_option("--init", t1_init, "views in the base model");
  t1->add_option("--out,--csv", t1_f.csv, "CSV output (default stdout)");
  Index t3_n = 60, t3_dim = 12;
  int t3_instances = 20;
  std::vector<double> t3_eps{0.001, 0.01};
  auto* t3 = diag->add_subcommand("bound", "view-function perturbation bound");
  t3_f.add_to(t3, false, true);
  t3->add_option("--n", t3_n, "examples");
  t3->add_option("--dim", t3_dim, "view dimension");
  t3->add_option("--instances", t3_instances, "random instances");
  t3->add_option("--eps", t3_eps, "latent perturbation sizes");
  t3->add_option("--out,--csv", t3_f.csv, "CSV output (default stdout)");

  SynthFlags synth_s;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset directory");
  synth_f.add_to(synth, false, false);
  add_synth_flags(synth, synth_s);
  synth_f.add_override(synth, "--d", "d", "latent dimension");
  synth->add_option("--out", synth_f.out, "dataset directory")->required();
  synth->add_option("--csv", synth_f.csv, "summary CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  // defaults that differ per command unless set explicitly
  if (t1->parsed() && !t1_f.overrides.count("d")) t1_f.overrides["d"] = "10";
  if (t3->parsed() && !t3_f.overrides.count("d")) t3_f.overrides["d"] = "5";
  if (t3->parsed() && !t3_f.overrides.count("c1")) t3_f.overrides["c1"] = "0.2";
  if (bench->parsed() && !bench_f.overrides.count("d")) bench_f.overrides["d"] = "20";
  if (synth->parsed() && !synth_f.overrides.count("d")) synth_f.overrides["d"] = "10";

  try {
    if (fit->parsed()) return cmd_fit(fit_f, init_views);
    if (stream->parsed()) return cmd_stream(stream_f, model_in, new_views, eval_reps, timings);
    if (ev->parsed()) return cmd_eval(eval_f, eval_model, k);
    if (bench->parsed()) return cmd_bench(bench_f, bench_s, bench_init);
    if (t1->parsed()) return cmd_diag_theorem1(t1_f, t1_s, t1_init);
    if (t3->parsed()) return cmd_diag_theorem3(t3_f, t3_n, t3_dim, t3_instances, t3_eps);
    if (synth->parsed()) return cmd_synth(synth_f, synth_s);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const InvalidInput& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const FormatError& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const VersionError& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const StrictFailure& e) {
    spdlog::error("{}", e.what());
    return kExitNumerical;
  } catch (const DegenerateInput& e) {
    spdlog::error("{}", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  }
  return kExitUsage;
}
