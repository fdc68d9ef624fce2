#include "svl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "binary_io.hpp"
#include "seed.hpp"
#include "svl/error.hpp"

namespace svl {

namespace fs = std::filesystem;

namespace {

constexpr Index kMfeatRows = 2000;
constexpr Index kMfeatPerClass = 200;
constexpr char kBlockMagic[4] = {'S', 'V', 'L', 'D'};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::vector<double> parse_line(const std::string& line, const std::string& source,
                               std::size_t line_no) {
  std::vector<double> out;
  const char* p = line.data();
  const char* end = p + line.size();
  for (;;) {
    while (p < end && is_space(*p)) ++p;
    if (p == end) break;
    const char* tok = p;
    while (p < end && !is_space(*p)) ++p;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok, p, v);
    if (ec != std::errc() || ptr != p || !std::isfinite(v))
      throw FormatError(source + ":" + std::to_string(line_no) + ": unparseable token '" +
                        std::string(tok, p) + "'");
    out.push_back(v);
  }
  return out;
}

fs::path find_view_file(const fs::path& dir, const std::string& tag) {
  const fs::path exact = dir / ("mfeat-" + tag);
  if (fs::is_regular_file(exact)) return exact;
  std::vector<fs::path> hits;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename().string().find(tag) != std::string::npos)
      hits.push_back(entry.path());
  }
  if (hits.empty()) throw FormatError(dir.string() + ": no file for view '" + tag + "'");
  std::sort(hits.begin(), hits.end());
  return hits.front();
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_block(const Matrix& m, const fs::path& path) {
  detail::ByteWriter w;
  w.raw(kBlockMagic, sizeof kBlockMagic);
  w.u8(1);
  w.u64(static_cast<std::uint64_t>(m.rows()));
  w.u64(static_cast<std::uint64_t>(m.cols()));
  w.matrix(m);
  w.write_to(path);
}

Matrix read_block(const fs::path& path) {
  auto r = detail::ByteReader::from_file(path);
  char magic[4];
  r.raw(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kBlockMagic, sizeof magic) != 0)
    throw VersionError(path.string() + ": not a matrix block file (bad magic)");
  if (const auto version = r.u8("version"); version != 1)
    throw VersionError(path.string() + ": unsupported block version " + std::to_string(version));
  const auto rows = r.u64("rows");
  const auto cols = r.u64("cols");
  Matrix m = r.matrix(rows, cols, "matrix");
  if (r.remaining() != 0) r.fail("trailing bytes after matrix");
  return m;
}

}  // namespace

const ViewMatrix& Dataset::view(const std::string& name) const {
  for (const auto& v : views)
    if (v.name == name) return v;
  throw InvalidInput("unknown view '" + name + "'");
}

bool Dataset::has_view(const std::string& name) const {
  return std::any_of(views.begin(), views.end(), [&](const auto& v) { return v.name == name; });
}

ViewMatrix read_view_text(const fs::path& path, const std::string& name, Index expected_rows) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t blank_run = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), is_space)) {
      ++blank_run;
      continue;
    }
    if (blank_run > 0 && !rows.empty())
      throw FormatError(path.string() + ":" + std::to_string(line_no - 1) + ": empty line");
    blank_run = 0;
    auto values = parse_line(line, path.string(), line_no);
    if (!rows.empty() && values.size() != rows.front().size())
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": ragged row with " +
                        std::to_string(values.size()) + " values, expected " +
                        std::to_string(rows.front().size()));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw FormatError(path.string() + ": no data rows");
  if (expected_rows >= 0 && static_cast<Index>(rows.size()) != expected_rows)
    throw FormatError(path.string() + ": " + std::to_string(rows.size()) + " rows, expected " +
                      std::to_string(expected_rows));
  ViewMatrix out{name, Matrix(static_cast<Index>(rows.front().size()), static_cast<Index>(rows.size()))};
  for (Index j = 0; j < out.X.cols(); ++j)
    for (Index i = 0; i < out.X.rows(); ++i)
      out.X(i, j) = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  return out;
}

void write_view_text(const ViewMatrix& view, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (Index j = 0; j < view.X.cols(); ++j) {
    for (Index i = 0; i < view.X.rows(); ++i) {
      if (i) out << ' ';
      out << format_double(view.X(i, j));
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

Dataset load_mfeat(const fs::path& directory) {
  if (!fs::is_directory(directory))
    throw FormatError("dataset directory not found: " + directory.string());
  Dataset out;
  for (const auto& tag : kMfeatViews)
    out.views.push_back(read_view_text(find_view_file(directory, tag), tag, kMfeatRows));
  out.n_classes = static_cast<int>(kMfeatRows / kMfeatPerClass);
  out.labels.resize(kMfeatRows);
  for (Index i = 0; i < kMfeatRows; ++i) out.labels[static_cast<std::size_t>(i)] = static_cast<int>(i / kMfeatPerClass);
  return out;
}

SyntheticStream synth_stream(const SyntheticSpec& spec) {
  if (spec.view_dims.size() != spec.ranks.size())
    throw InvalidInput("synth_stream: view_dims and ranks differ in length");
  if (spec.n < 1 || spec.d < 1 || spec.n_classes < 1)
    throw InvalidInput("synth_stream: n, d and n_classes must be >= 1");
  if (!(spec.noise_sigma >= 0.0)) throw InvalidInput("synth_stream: noise_sigma must be >= 0");
  for (std::size_t v = 0; v < spec.ranks.size(); ++v)
    if (spec.ranks[v] < 1 || spec.ranks[v] > std::min(spec.view_dims[v], spec.d))
      throw InvalidInput("synth_stream: rank " + std::to_string(spec.ranks[v]) + " of view " +
                         std::to_string(v) + " outside [1, min(D_v, d)]");

  SyntheticStream out;
  auto& truth = out.truth;
  truth.noise_sigma = spec.noise_sigma;
  truth.ranks = spec.ranks;
  const Matrix centers =
      spec.class_separation * gaussian_matrix(spec.d, spec.n_classes, detail::mix_seed(spec.seed, 0, 1));
  truth.z_true = gaussian_matrix(spec.d, spec.n, detail::mix_seed(spec.seed, 0, 2));
  truth.labels.resize(static_cast<std::size_t>(spec.n));
  for (Index i = 0; i < spec.n; ++i) {
    const int c = static_cast<int>(i % spec.n_classes);
    truth.labels[static_cast<std::size_t>(i)] = c;
    truth.z_true.col(i) += centers.col(c);
  }

  for (std::size_t v = 0; v < spec.view_dims.size(); ++v) {
    const Index dim = spec.view_dims[v];
    const Index k = spec.ranks[v];
    const std::uint64_t base = detail::mix_seed(spec.seed, v + 1);
    const Matrix a = random_orthonormal(dim, k, detail::mix_seed(base, 1));
    const Matrix b = random_orthonormal(spec.d, k, detail::mix_seed(base, 2));
    Vector sigma(k);
    for (Index j = 0; j < k; ++j) sigma[j] = std::pow(spec.spectrum_decay, static_cast<double>(j));
    Matrix w = a * sigma.asDiagonal() * b.transpose();
    const Matrix clean = w * truth.z_true;
    Matrix x = clean;
    if (spec.noise_sigma > 0) x += spec.noise_sigma * gaussian_matrix(dim, spec.n, detail::mix_seed(base, 3));
    truth.snr.push_back(spec.noise_sigma > 0
                            ? clean.squaredNorm() / (spec.noise_sigma * spec.noise_sigma *
                                                     static_cast<double>(dim * spec.n))
                            : std::numeric_limits<double>::infinity());
    truth.w_true.push_back(std::move(w));
    char name[16];
    std::snprintf(name, sizeof name, "v%02zu", v);
    out.views.push_back(ViewMatrix{name, std::move(x)});
  }
  return out;
}

Normalization parse_normalization(const std::string& s) {
  if (s == "none") return Normalization::none;
  if (s == "zscore") return Normalization::zscore;
  if (s == "unit_l2") return Normalization::unit_l2;
  throw InvalidInput("unknown normalization '" + s + "' (expected zscore, unit_l2 or none)");
}

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::none: return "none";
    case Normalization::zscore: return "zscore";
    case Normalization::unit_l2: return "unit_l2";
  }
  return "none";
}

ViewMatrix normalize(const ViewMatrix& view, Normalization scheme) {
  ViewMatrix out = view;
  Matrix& x = out.X;
  if (scheme == Normalization::zscore) {
    const double n = static_cast<double>(x.cols());
    for (Index i = 0; i < x.rows(); ++i) {
      const double mean = x.row(i).mean();
      auto row = x.row(i);
      row.array() -= mean;
      const double sd = std::sqrt(row.squaredNorm() / n);
      if (sd <= 1e-12 * std::max(1.0, std::abs(mean)))
        row.setZero();
      else
        row /= sd;
    }
  } else if (scheme == Normalization::unit_l2) {
    for (Index j = 0; j < x.cols(); ++j) {
      const double norm = x.col(j).norm();
      if (norm > 0) x.col(j) /= norm;
    }
  }
  return out;
}

void save_dataset(const Dataset& data, const fs::path& directory) {
  fs::create_directories(directory);
  std::ofstream manifest(directory / "manifest.txt", std::ios::trunc);
  if (!manifest) throw Error("cannot write manifest in " + directory.string());
  manifest << "format svl-dataset 1\n";
  manifest << "examples " << (data.views.empty() ? 0 : data.views.front().examples()) << '\n';
  manifest << "classes " << data.n_classes << '\n';
  for (const auto& v : data.views) {
    const std::string file = "view_" + v.name + ".bin";
    manifest << "view " << v.name << ' ' << v.dim() << ' ' << file << '\n';
    write_block(v.X, directory / file);
  }
  if (!data.labels.empty()) {
    manifest << "labels labels.txt\n";
    std::ofstream labels(directory / "labels.txt", std::ios::trunc);
    for (int l : data.labels) labels << l << '\n';
  }
}

Dataset load_dataset(const fs::path& directory) {
  const fs::path mpath = directory / "manifest.txt";
  std::ifstream manifest(mpath);
  if (!manifest) throw FormatError("cannot open " + mpath.string());
  Dataset out;
  Index examples = -1;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    auto bad = [&](const std::string& why) -> FormatError {
      return FormatError(mpath.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    if (key == "format") {
      std::string kind;
      int version = 0;
      fields >> kind >> version;
      if (kind != "svl-dataset") throw bad("not an svl dataset manifest");
      if (version != 1) throw VersionError(mpath.string() + ": unsupported dataset version");
      header = true;
    } else if (key == "examples") {
      if (!(fields >> examples)) throw bad("bad example count");
    } else if (key == "classes") {
      if (!(fields >> out.n_classes)) throw bad("bad class count");
    } else if (key == "view") {
      std::string name, file;
      Index dim = 0;
      if (!(fields >> name >> dim >> file)) throw bad("expected: view <name> <dim> <file>");
      ViewMatrix v{name, read_block(directory / file)};
      if (v.dim() != dim || (examples >= 0 && v.examples() != examples))
        throw bad("view '" + name + "' block shape disagrees with the manifest");
      require_finite(v.X, "dataset view");
      out.views.push_back(std::move(v));
    } else if (key == "labels") {
      std::string file;
      fields >> file;
      std::ifstream labels(directory / file);
      if (!labels) throw bad("cannot open label file " + file);
      int l;
      while (labels >> l) out.labels.push_back(l);
    } else {
      throw bad("unknown key '" + key + "'");
    }
  }
  if (!header) throw FormatError(mpath.string() + ": missing format line");
  if (!out.labels.empty() && examples >= 0 && static_cast<Index>(out.labels.size()) != examples)
    throw FormatError(mpath.string() + ": label count does not match example count");
  return out;
}

Dataset load_any(const fs::path& directory) {
  if (fs::is_regular_file(directory / "manifest.txt")) return load_dataset(directory);
  return load_mfeat(directory);
}

}  // namespace svl
