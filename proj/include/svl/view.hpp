#pragma once

#include <string>
#include <vector>

#include "svl/linalg.hpp"

namespace svl {

/// One view's feature matrix, D_v x n with one column per example.
struct ViewMatrix {
  std::string name;
  Matrix X;

  Index dim() const { return X.rows(); }
  Index examples() const { return X.cols(); }
};

using ViewList = std::vector<ViewMatrix>;

}  // namespace svl
