// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion
// numbers as arguments to run a subset.

#include "oracles.hpp"
#include "svl/batch.hpp"
#include "svl/data.hpp"
#include "svl/eval.hpp"
#include "svl/streaming.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>

using namespace svl;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1: SVT against the eigen-embedding oracle -----------------------

Outcome svt_oracle() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Matrix m = gaussian_matrix(10, 8, 1000 + s);
    for (double tau : {0.1, 1.0, 10.0}) {
      const Matrix got = soft_threshold_svd(m, tau).reconstruct();
      worst = std::max(worst, (got - oracle::soft_threshold(m, tau)).norm());
    }
  }
  return {worst <= 1e-8, fmt("max Frobenius error %.2e (tol 1e-8)", worst)};
}

// ---- 2: closed-form latent update ------------------------------------

Outcome latent_oracle() {
  double worst_grad = 0.0, worst_err = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Index m = 2 + s % 3, n = 6 + s % 5, d = 4 + s % 4;
    ViewList views;
    std::vector<ViewFunction> vfs;
    std::vector<Matrix> ws, xs;
    for (Index v = 0; v < m; ++v) {
      const Index dim = 5 + v, k = std::min<Index>(3, d);
      views.push_back({"v", gaussian_matrix(dim, n, s * 100 + v)});
      vfs.push_back({random_orthonormal(dim, k, s * 100 + 10 + v),
                     gaussian_matrix(k, k, s * 100 + 20 + v), random_orthonormal(d, k, s * 100 + 30 + v)});
      ws.push_back(compose(vfs.back()));
      xs.push_back(views.back().X);
    }
    const Hyperparams hyper{1e-3, 1e-3 * double(1 + s % 7), d};
    const Matrix z = solve_latent(views, vfs, hyper, n, m);
    const Matrix ref = oracle::ridge_latent(ws, xs, double(n * m) * hyper.c2);
    worst_err = std::max(worst_err, (z - ref).norm() / std::max(1.0, ref.norm()));
    for (Index i = 0; i < n; ++i) {
      Vector g = 2.0 * hyper.c2 * z.col(i);
      for (Index v = 0; v < m; ++v)
        g -= 2.0 / double(n * m) * ws[v].transpose() * (xs[v].col(i) - ws[v] * z.col(i));
      worst_grad = std::max(worst_grad, g.norm());
    }
  }
  return {worst_grad <= 1e-8 && worst_err <= 1e-10,
          fmt("max gradient %.2e (tol 1e-8), max oracle gap %.2e (tol 1e-10)", worst_grad, worst_err)};
}

// ---- 3: monotone convergence of the batch solver ---------------------

Outcome batch_convergence() {
  double worst_rise = 0.0, worst_residual = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    SyntheticSpec spec;
    spec.n = 200;
    spec.d = 8;
    spec.view_dims = {20, 20, 20};
    spec.ranks = {4, 4, 4};
    spec.noise_sigma = 0.1;
    spec.seed = 300 + s;
    const auto stream = synth_stream(spec);
    SolverConfig config;
    config.seed = s;
    const auto r = fit_batch(stream.views, {0.01, 1e-3, 8}, config);
    for (std::size_t t = 1; t < r.objective_trace.size(); ++t)
      worst_rise = std::max(worst_rise, (r.objective_trace[t] - r.objective_trace[t - 1]) /
                                            std::abs(r.objective_trace[t - 1]));
    for (double res : r.view_residuals) worst_residual = std::max(worst_residual, res);
  }
  return {worst_rise <= 1e-8 && worst_residual <= 1e-5,
          fmt("max relative rise %.2e (tol 1e-8), max terminal residual %.2e (tol 1e-5)",
              worst_rise, worst_residual)};
}

// ---- 4: drift shape along a long stream ------------------------------

Outcome drift_shape() {
  SyntheticSpec spec;
  spec.n = 500;
  spec.d = 10;
  spec.view_dims.assign(20, 30);
  spec.ranks.assign(20, 5);
  spec.noise_sigma = 0.1;
  spec.seed = 4;
  const auto stream = synth_stream(spec);
  const std::span<const ViewMatrix> all(stream.views);
  const Hyperparams hyper{0.01, 1e-3, 10};
  SolverConfig config;
  ModelState state = fit_batch(all.first(2), hyper, config).state;
  std::vector<std::pair<Index, double>> drifts;
  for (Index m = 3; m <= 20; ++m) {
    AddViewResult r = add_view(state, all.first(m), config);
    drifts.push_back({m, r.diagnostics.z_drift});
    state = std::move(r.state);
  }
  const auto rep = theorem1_diagnostic(drifts);
  return {rep.slope <= -0.5 && rep.ratio <= 3.0,
          fmt("log-log slope %.3f (<= -0.5), max/median of m*a_m %.3f (<= 3)", rep.slope, rep.ratio)};
}

// ---- 5: perturbation bound -------------------------------------------

Outcome perturbation_bound() {
  int violations = 0, total = 0;
  double worst_ratio = 0.0;
  const Index n = 60, dim = 12, d = 5;
  SolverConfig config;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix z = gaussian_matrix(d, n, 500 + 3 * s);
    const Matrix x = gaussian_matrix(dim, d, 501 + 3 * s) * z + 0.1 * gaussian_matrix(dim, n, 502 + 3 * s);
    const Matrix dir = gaussian_matrix(d, n, 10000 + s);
    for (double eps : {0.001, 0.01}) {
      const auto r = theorem3_diagnostic(x, z, z + eps * dir / dir.norm(), {0.2, 1e-3, d}, d, config);
      ++total;
      if (!r.holds()) ++violations;
      worst_ratio = std::max(worst_ratio, r.lhs / r.rhs);
    }
  }
  return {violations == 0, fmt("%d/%d instances hold, max lhs/rhs %.2e", total - violations, total,
                               worst_ratio)};
}

// ---- 6: streaming against retraining ---------------------------------

Outcome streaming_vs_retrain() {
  // quality: base on 4 views, absorb views 5..8 one at a time
  SyntheticSpec spec;
  spec.n = 500;
  spec.d = 20;
  spec.view_dims.assign(8, 100);
  spec.ranks.assign(8, 5);
  spec.noise_sigma = 0.1;
  spec.seed = 6;
  const auto stream = synth_stream(spec);
  const std::span<const ViewMatrix> all(stream.views);
  const Hyperparams hyper{0.01, 1e-3, 20};
  SolverConfig config;
  ModelState state = fit_batch(all.first(4), hyper, config).state;
  for (Index m = 5; m <= 8; ++m) state = add_view(state, all.first(m), config).state;
  const double f_stream = objective(state, all).total();
  const double f_retrain = naive_retrain(all, hyper, config).objective_trace.back();
  const double gap = std::abs(f_stream - f_retrain) / f_retrain;

  // timing: base on 8 views, one arrival, both paths from the same state
  SyntheticSpec big;
  big.n = 1000;
  big.d = 50;
  big.view_dims.assign(9, 500);
  big.ranks.assign(9, 5);
  big.noise_sigma = 0.1;
  big.seed = 66;
  const auto big_stream = synth_stream(big);
  const std::span<const ViewMatrix> big_all(big_stream.views);
  const Hyperparams big_hyper{0.01, 1e-3, 50};
  const ModelState base = fit_batch(big_all.first(8), big_hyper, config).state;
  auto t0 = Clock::now();
  const AddViewResult added = add_view(base, big_all, config);
  const double t_add = std::chrono::duration<double>(Clock::now() - t0).count();
  t0 = Clock::now();
  const BatchResult retrain = naive_retrain(big_all, big_hyper, config, &base);
  const double t_retrain = std::chrono::duration<double>(Clock::now() - t0).count();
  const double f_add = added.diagnostics.final_objective();
  const double f_ret = retrain.objective_trace.back();

  return {gap <= 0.10 && t_retrain >= 2.0 * t_add,
          fmt("stream/retrain objective gap %.2f%% (<= 10%%); add_view %.2fs vs retrain %.2fs, "
              "speedup %.2fx (>= 2), objectives %.6g vs %.6g",
              100.0 * gap, t_add, t_retrain, t_retrain / t_add, f_add, f_ret)};
}

// ---- 7, 8: Handwritten Numerals --------------------------------------

struct NumeralsRun {
  std::vector<ClusteringScore> checkpoints;  // KAR(0), MOR(1), PIX(2), ZER(3)
};

NumeralsRun run_numerals(const Dataset& data, Index d) {
  ViewList views;
  for (const auto& name : {"fac", "fou", "kar", "mor", "pix", "zer"})
    views.push_back(normalize(data.view(name), Normalization::zscore));
  const std::span<const ViewMatrix> all(views);
  const Hyperparams hyper{0.03, 1e-5, d};
  SolverConfig config;
  config.max_outer_iters = 10;
  NumeralsRun out;
  ModelState state = fit_batch(all.first(3), hyper, config).state;
  out.checkpoints.push_back(evaluate_clustering(state.latent, data.labels, 10, 10, 1));
  for (Index m = 4; m <= 6; ++m) {
    state = add_view(state, all.first(m), config).state;
    out.checkpoints.push_back(evaluate_clustering(state.latent, data.labels, 10, 10, 1));
  }
  return out;
}

std::string checkpoint_line(const NumeralsRun& r) {
  std::string s;
  const char* names[] = {"KAR(0)", "MOR(1)", "PIX(2)", "ZER(3)"};
  for (std::size_t i = 0; i < r.checkpoints.size(); ++i)
    s += fmt("%s%s %.3f+-%.3f/%.3f", i ? ", " : "", names[i], r.checkpoints[i].nmi_mean,
             r.checkpoints[i].nmi_std, r.checkpoints[i].acc_mean);
  return s;
}

const Dataset& numerals() {
  static const Dataset data = load_mfeat(SVL_MFEAT_DIR);
  return data;
}

std::optional<NumeralsRun> cached_d100;
double d100_seconds_elsewhere = 0.0;  // time of the d=100 run when criterion 7 paid for it

Outcome numerals_reproduction() {
  const auto t0 = Clock::now();
  cached_d100 = run_numerals(numerals(), 100);
  d100_seconds_elsewhere = std::chrono::duration<double>(Clock::now() - t0).count();
  const auto& c = cached_d100->checkpoints;
  // average successive change over KAR(0) -> ZER(3)
  const double mean_step = (c.back().nmi_mean - c.front().nmi_mean) / double(c.size() - 1);
  const bool pass = mean_step >= 0.0 && c.back().nmi_mean >= 0.75 && c.back().acc_mean >= 0.80;
  return {pass, fmt("NMI+-std/ACC: %s; mean step %+.4f (>= 0), final NMI %.3f (>= 0.75), "
                    "final ACC %.3f (>= 0.80); published 0.871+-0.042 / 0.927+-0.050",
                    checkpoint_line(*cached_d100).c_str(), mean_step, c.back().nmi_mean,
                    c.back().acc_mean)};
}

Outcome numerals_d_sweep() {
  if (!cached_d100) cached_d100 = run_numerals(numerals(), 100);
  const NumeralsRun d10 = run_numerals(numerals(), 10);
  const double hi = cached_d100->checkpoints.back().nmi_mean;
  const double lo = d10.checkpoints.back().nmi_mean;
  return {hi - lo >= 0.10, fmt("ZER(3) NMI d=100 %.3f vs d=10 %.3f, gap %.3f (>= 0.10); "
                               "published 0.871 vs 0.705",
                               hi, lo, hi - lo)};
}

// ---- 9: CLI determinism ----------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Drops the columns whose header contains "seconds" or "speedup".
std::string strip_timing_columns(const std::string& csv) {
  std::stringstream in(csv), out;
  std::string line;
  std::vector<bool> keep;
  while (std::getline(in, line)) {
    if (line.rfind('#', 0) == 0) {
      out << line << '\n';
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (keep.empty())
      for (const auto& c : cells)
        keep.push_back(c.find("seconds") == std::string::npos && c.find("speedup") == std::string::npos);
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (i >= keep.size() || keep[i]) out << cells[i] << ',';
    out << '\n';
  }
  return out.str();
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "svl_acceptance_cli";
  fs::remove_all(root);
  const std::string cli = SVL_CLI_PATH;
  const std::string mfeat = SVL_MFEAT_DIR;
  struct Command {
    std::string name;
    std::string args;               // {dir} is replaced by the run directory
    std::vector<std::string> files;  // outputs compared byte for byte
    bool timing_columns = false;
  };
  const std::vector<Command> commands = {
      {"synth", "synth --views 4 --dim 20 --rank 3 --n 120 --seed 3 --out {dir}/syn --csv {dir}/synth.csv",
       {"synth.csv", "syn/manifest.txt", "syn/labels.txt", "syn/view_v00.bin", "syn/view_v03.bin"}},
      {"fit", "fit --data-dir " + mfeat + " --init-views fac,fou,kar --d 20 --seed 5 "
              "--set max_outer_iters=3 --out {dir}/base.svlm --csv {dir}/fit.csv",
       {"fit.csv", "base.svlm", "base.svlm.views"}},
      {"stream", "stream --data-dir " + mfeat + " --model {dir}/base.svlm --views mor,pix,zer "
                 "--eval-reps 2 --seed 5 --out {dir}/full.svlm --csv {dir}/stream.csv",
       {"stream.csv", "full.svlm", "full.svlm.views"}},
      {"eval", "eval --data-dir " + mfeat + " --model {dir}/full.svlm --reps 3 --seed 5 --out {dir}/eval.csv",
       {"eval.csv"}},
      {"bench", "bench --views 5 --init 3 --dim 40 --rank 3 --n 150 --d 10 --seed 7 --out {dir}/bench.csv",
       {"bench.csv"}, true},
      {"diag drift", "diag drift --views 10 --init 2 --dim 20 --rank 3 --n 150 --seed 2 --out {dir}/t1.csv",
       {"t1.csv"}},
      {"diag bound", "diag bound --instances 3 --seed 2 --out {dir}/t3.csv", {"t3.csv"}},
  };
  std::vector<std::string> failures;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / ("run" + std::to_string(run));
    fs::create_directories(dir);
    for (const auto& c : commands) {
      std::string args = c.args;
      for (std::size_t p; (p = args.find("{dir}")) != std::string::npos;) args.replace(p, 5, dir.string());
      const std::string line = "\"" + cli + "\" " + args + " > /dev/null 2>&1";
      if (std::system(line.c_str()) != 0) failures.push_back(c.name + " exited non-zero");
    }
  }
  int compared = 0;
  for (const auto& c : commands)
    for (const auto& f : c.files) {
      std::string a = slurp(root / "run0" / f), b = slurp(root / "run1" / f);
      if (c.timing_columns) {
        a = strip_timing_columns(a);
        b = strip_timing_columns(b);
      }
      ++compared;
      if (a.empty() || a != b) failures.push_back(f + " differs or is empty");
    }
  fs::remove_all(root);
  std::string detail = fmt("%d commands, %d output files compared", int(commands.size()), compared);
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "SVT oracle equivalence", 1.0, svt_oracle},
      {2, "closed-form latent update", 1.0, latent_oracle},
      {3, "batch descent and stationarity", 30.0, batch_convergence},
      {4, "latent drift O(1/m) shape", 120.0, drift_shape},
      {5, "view-function perturbation bound", 60.0, perturbation_bound},
      {6, "streaming vs retrain quality and cost", 0.0, streaming_vs_retrain},
      {7, "Handwritten Numerals reproduction", 900.0, numerals_reproduction},
      {8, "latent dimension sweep direction", 1800.0, numerals_d_sweep},
      {9, "CLI determinism", 0.0, cli_determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    // the d-sweep budget covers both its runs, even when the d=100 one is shared
    const double spent = c.id == 8 ? secs + d100_seconds_elsewhere : secs;
    bool pass = o.pass;
    std::string timing = fmt("%.1fs", spent);
    if (c.budget_seconds > 0) {
      timing += fmt(" (budget %.0fs)", c.budget_seconds);
      if (spent > c.budget_seconds) pass = false;
    }
    std::printf("[%s] %d %s: %s; %s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
    if (!pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
