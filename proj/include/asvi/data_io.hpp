#pragma once

// CSV ingestion, standardization and deterministic train/test splitting.
// CSV contract: comma-delimited, UTF-8, header row required, every cell
// numeric. No imputation: a bad cell is a hard error naming its location.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "asvi/dataset.hpp"
#include "asvi/rng.hpp"

namespace asvi {

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_cell(const std::string& raw, std::size_t data_row, std::size_t col) {
  const std::string s = trim(raw);
  double value = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw CsvError("non-numeric cell at row " + std::to_string(data_row) + ", column " +
                   std::to_string(col) + ": '" + raw + "'");
  }
  return value;
}

}  // namespace detail

// Loads a CSV with a header row; the target column is selected by name. All
// remaining columns become features in file order. Row/column positions in
// errors are 1-based, rows counted from the first data row.
inline RegressionDataset load_csv(const std::string& path, const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open CSV file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty CSV file: " + path);
  auto header = detail::split_csv_line(line);
  for (auto& name : header) name = detail::trim(name);

  std::size_t target_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == target_column) {
      target_idx = i;
      break;
    }
  }
  if (target_idx == header.size()) {
    throw CsvError("target column '" + target_column + "' not found in " + path);
  }

  RegressionDataset data;
  data.provenance = RegressionDataset::Provenance::csv;
  data.n_features = header.size() - 1;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++data_row;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw CsvError("row " + std::to_string(data_row) + " has " + std::to_string(cells.size()) +
                     " cells, expected " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = detail::parse_cell(cells[c], data_row, c + 1);
      if (c == target_idx) {
        data.y.push_back(v);
      } else {
        data.x.push_back(v);
      }
    }
  }
  data.n_rows = data_row;
  if (data.n_rows == 0) throw CsvError("CSV file has no data rows: " + path);
  data.validate();
  return data;
}

// Target column by index; negative counts from the end (-1 = last column).
inline RegressionDataset load_csv(const std::string& path, int target_index) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open CSV file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty CSV file: " + path);
  auto header = detail::split_csv_line(line);
  const int cols = static_cast<int>(header.size());
  int idx = target_index < 0 ? cols + target_index : target_index;
  if (idx < 0 || idx >= cols) {
    throw CsvError("target index " + std::to_string(target_index) + " out of range for " +
                   std::to_string(cols) + " columns");
  }
  return load_csv(path, detail::trim(header[static_cast<std::size_t>(idx)]));
}

struct Standardizer {
  std::vector<double> x_means;
  std::vector<double> x_stds;  // zero-variance columns forced to 1
  double y_mean = 0.0;
  double y_std = 1.0;

  double invert_y(double standardized) const { return standardized * y_std + y_mean; }
};

inline Standardizer fit_standardizer(const RegressionDataset& train) {
  if (train.n() == 0) throw std::invalid_argument("fit_standardizer: empty dataset");
  const std::size_t p = train.p();
  const double n = static_cast<double>(train.n());
  Standardizer st;
  st.x_means.assign(p, 0.0);
  st.x_stds.assign(p, 0.0);
  for (std::size_t i = 0; i < train.n(); ++i) {
    auto row = train.row(i);
    for (std::size_t c = 0; c < p; ++c) st.x_means[c] += row[c];
  }
  for (std::size_t c = 0; c < p; ++c) st.x_means[c] /= n;
  for (std::size_t i = 0; i < train.n(); ++i) {
    auto row = train.row(i);
    for (std::size_t c = 0; c < p; ++c) {
      const double d = row[c] - st.x_means[c];
      st.x_stds[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < p; ++c) {
    st.x_stds[c] = std::sqrt(st.x_stds[c] / n);
    if (st.x_stds[c] == 0.0) st.x_stds[c] = 1.0;
  }
  st.y_mean = std::accumulate(train.y.begin(), train.y.end(), 0.0) / n;
  double acc = 0.0;
  for (double v : train.y) acc += (v - st.y_mean) * (v - st.y_mean);
  st.y_std = std::sqrt(acc / n);
  if (st.y_std == 0.0) st.y_std = 1.0;
  return st;
}

inline RegressionDataset apply(const Standardizer& st, const RegressionDataset& data) {
  if (st.x_means.size() != data.p()) {
    throw std::invalid_argument("apply: standardizer dimension does not match dataset");
  }
  RegressionDataset out = data;
  for (std::size_t i = 0; i < out.n(); ++i) {
    for (std::size_t c = 0; c < out.p(); ++c) {
      double& v = out.x[i * out.p() + c];
      v = (v - st.x_means[c]) / st.x_stds[c];
    }
  }
  for (double& v : out.y) v = (v - st.y_mean) / st.y_std;
  return out;
}

struct SplitSpec {
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
  int replications = 1;

  void validate(std::size_t n) const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
      throw std::invalid_argument("SplitSpec: test_fraction must lie in (0,1)");
    }
    if (replications < 1) throw std::invalid_argument("SplitSpec: replications must be >= 1");
    if (static_cast<std::size_t>(test_fraction * static_cast<double>(n)) < 1 && n < 1) {
      throw std::invalid_argument("SplitSpec: dataset too small to split");
    }
  }
};

namespace detail {

inline RegressionDataset take_rows(const RegressionDataset& data,
                                   const std::vector<std::size_t>& rows) {
  RegressionDataset out;
  out.n_rows = rows.size();
  out.n_features = data.p();
  out.sigma_eps = data.sigma_eps;
  out.provenance = data.provenance;
  out.x.reserve(rows.size() * data.p());
  out.y.reserve(rows.size());
  for (std::size_t r : rows) {
    auto row = data.row(r);
    out.x.insert(out.x.end(), row.begin(), row.end());
    out.y.push_back(data.y[r]);
  }
  return out;
}

}  // namespace detail

// Each replication is an independent seeded permutation; the test set takes
// the first floor(test_fraction * n) shuffled rows (at least 1), the train
// set the remainder.
inline std::vector<std::pair<RegressionDataset, RegressionDataset>> split(
    const RegressionDataset& data, const SplitSpec& spec) {
  spec.validate(data.n());
  const std::size_t n = data.n();
  std::size_t test_size = static_cast<std::size_t>(spec.test_fraction * static_cast<double>(n));
  if (test_size < 1) test_size = 1;
  if (test_size >= n) throw std::invalid_argument("split: test fraction leaves no training rows");

  std::vector<std::pair<RegressionDataset, RegressionDataset>> out;
  out.reserve(static_cast<std::size_t>(spec.replications));
  for (int rep = 0; rep < spec.replications; ++rep) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = Rng(spec.seed).split(static_cast<std::uint64_t>(rep));
    rng.shuffle(perm);
    std::vector<std::size_t> test_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(test_size));
    std::vector<std::size_t> train_rows(perm.begin() + static_cast<std::ptrdiff_t>(test_size), perm.end());
    out.emplace_back(detail::take_rows(data, train_rows), detail::take_rows(data, test_rows));
  }
  return out;
}

}  // namespace asvi
