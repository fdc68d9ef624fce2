#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "svl/eval.hpp"
#include "svl/view.hpp"

namespace svl {

/// View tags of the Handwritten Numerals (UCI mfeat) set in canonical order.
inline const std::vector<std::string> kMfeatViews = {"fac", "fou", "kar", "mor", "pix", "zer"};

struct Dataset {
  ViewList views;
  LabelVector labels;
  int n_classes = 0;

  const ViewMatrix& view(const std::string& name) const;
  bool has_view(const std::string& name) const;
};

/// Reads the six mfeat files (whitespace-separated numbers, one example per
/// line, 2000 lines). Each file is located by the view tag in its name.
/// Labels follow the row blocks of 200 examples per digit.
Dataset load_mfeat(const std::filesystem::path& directory);

/// Parses one whitespace-separated numeric file into a D x n view (one
/// example per line). Throws FormatError with the file name and line number.
ViewMatrix read_view_text(const std::filesystem::path& path, const std::string& name,
                          Index expected_rows = -1);

/// Writes a view in the same layout using shortest round-trip formatting.
void write_view_text(const ViewMatrix& view, const std::filesystem::path& path);

struct SyntheticTruth {
  Matrix z_true;                 // d x n
  std::vector<Matrix> w_true;    // D_v x d
  std::vector<Index> ranks;
  double noise_sigma = 0.0;
  LabelVector labels;
  std::vector<double> snr;       // ||W Z||_F^2 / (sigma^2 D_v n), inf when sigma = 0
};

struct SyntheticStream {
  ViewList views;
  SyntheticTruth truth;
};

struct SyntheticSpec {
  Index n = 500;
  Index d = 10;
  std::vector<Index> view_dims;
  std::vector<Index> ranks;
  double noise_sigma = 0.1;
  int n_classes = 5;
  double class_separation = 3.0;  // std of the class centers around 0
  double spectrum_decay = 0.8;    // S = diag(1, decay, decay^2, ...)
  std::uint64_t seed = 1;
};

/// Views X^v = W_v Z + sigma N(0, 1) with W_v = A S B^T for random
/// orthonormal A, B and a geometric spectrum S, and Z drawn as
/// class-clustered Gaussians with balanced classes (example i in class
/// i mod n_classes).
SyntheticStream synth_stream(const SyntheticSpec& spec);

enum class Normalization { none, zscore, unit_l2 };

Normalization parse_normalization(const std::string& s);
std::string to_string(Normalization n);

/// zscore: each feature row to mean 0 / std 1 (population std; constant
/// rows become 0). unit_l2: each example column to unit Euclidean norm
/// (zero columns stay 0).
ViewMatrix normalize(const ViewMatrix& view, Normalization scheme);

/// Synthetic datasets on disk: `manifest.txt` plus one binary block per view
/// and a label file.
void save_dataset(const Dataset& data, const std::filesystem::path& directory);
Dataset load_dataset(const std::filesystem::path& directory);

/// load_dataset when `directory` holds a manifest, load_mfeat otherwise.
Dataset load_any(const std::filesystem::path& directory);

}  // namespace svl
