#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace asvi {

struct RegressionDataset {
  enum class Provenance { synthetic, csv };

  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  std::vector<double> x;  // row-major, n_rows * n_features
  std::vector<double> y;
  double sigma_eps = 1.0;
  Provenance provenance = Provenance::synthetic;

  std::size_t n() const { return n_rows; }
  std::size_t p() const { return n_features; }

  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * n_features, n_features};
  }

  void validate() const {
    if (x.size() != n_rows * n_features || y.size() != n_rows) {
      throw std::invalid_argument("RegressionDataset: inconsistent dimensions");
    }
  }
};

}  // namespace asvi
