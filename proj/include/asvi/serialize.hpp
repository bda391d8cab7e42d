#pragma once

// JSON / CSV serialization of models, datasets and reports. Doubles are
// written by printf %.17g in CSVs and by the JSON library's exact
// round-trip formatting, so re-loading an artifact reproduces every value
// bit for bit.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "asvi/data_io.hpp"
#include "asvi/dataset.hpp"
#include "asvi/elbo.hpp"
#include "asvi/network.hpp"
#include "asvi/select.hpp"
#include "asvi/teacher.hpp"
#include "asvi/variational.hpp"

namespace asvi {

using json = nlohmann::json;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline json shape_to_json(const NetworkShape& shape) {
  return json{{"input_dim", shape.input_dim},
              {"hidden_widths", shape.hidden_widths},
              {"output_dim", shape.output_dim}};
}

inline NetworkShape shape_from_json(const json& j) {
  NetworkShape shape;
  shape.input_dim = j.at("input_dim").get<int>();
  shape.hidden_widths = j.at("hidden_widths").get<std::vector<int>>();
  shape.output_dim = j.at("output_dim").get<int>();
  shape.validate();
  return shape;
}

inline json standardizer_to_json(const Standardizer& st) {
  return json{{"x_means", st.x_means}, {"x_stds", st.x_stds}, {"y_mean", st.y_mean}, {"y_std", st.y_std}};
}

inline Standardizer standardizer_from_json(const json& j) {
  Standardizer st;
  st.x_means = j.at("x_means").get<std::vector<double>>();
  st.x_stds = j.at("x_stds").get<std::vector<double>>();
  st.y_mean = j.at("y_mean").get<double>();
  st.y_std = j.at("y_std").get<double>();
  return st;
}

struct ParamsFile {
  NetworkShape shape;
  VariationalParams params;
  std::optional<Standardizer> standardizer;
};

inline json params_file_to_json(const ParamsFile& pf) {
  json j{{"shape", shape_to_json(pf.shape)},
         {"mu", pf.params.mu},
         {"sigma_raw", pf.params.sigma_raw},
         {"nu_raw", pf.params.nu_raw}};
  if (pf.standardizer) j["standardizer"] = standardizer_to_json(*pf.standardizer);
  return j;
}

inline ParamsFile params_file_from_json(const json& j) {
  ParamsFile pf;
  pf.shape = shape_from_json(j.at("shape"));
  pf.params.mu = j.at("mu").get<std::vector<double>>();
  pf.params.sigma_raw = j.at("sigma_raw").get<std::vector<double>>();
  pf.params.nu_raw = j.at("nu_raw").get<std::vector<double>>();
  pf.params.validate();
  if (pf.params.size() != pf.shape.param_count()) {
    throw IoError("params file: parameter length does not match shape");
  }
  if (j.contains("standardizer")) pf.standardizer = standardizer_from_json(j.at("standardizer"));
  return pf;
}

inline json teacher_to_json(const TeacherNetwork& teacher, std::uint64_t seed) {
  return json{{"shape", shape_to_json(teacher.shape)},
              {"theta", teacher.theta},
              {"mask", teacher.mask},
              {"nonzero_count", teacher.nonzero_count},
              {"seed", seed}};
}

inline TeacherNetwork teacher_from_json(const json& j) {
  TeacherNetwork teacher;
  teacher.shape = shape_from_json(j.at("shape"));
  teacher.theta = j.at("theta").get<std::vector<double>>();
  teacher.mask = j.at("mask").get<std::vector<std::uint8_t>>();
  teacher.nonzero_count = j.at("nonzero_count").get<int>();
  if (teacher.theta.size() != teacher.shape.param_count() ||
      teacher.mask.size() != teacher.theta.size()) {
    throw IoError("teacher file: inconsistent dimensions");
  }
  return teacher;
}

inline json elbo_report_to_json(const ElboReport& report, bool with_trace = true) {
  json j{{"l1", report.l1},
         {"l2", report.l2},
         {"l3", report.l3},
         {"neg_elbo", report.neg_elbo},
         {"omega", report.omega}};
  if (with_trace) j["trace"] = report.trace;
  return j;
}

inline json selection_report_to_json(const SelectionReport& report) {
  json rows = json::array();
  for (const CandidateResult& row : report.per_candidate) {
    json r{{"widths", row.candidate.widths},
           {"prior_level", row.candidate.prior_level},
           {"parameter_count", row.parameter_count},
           {"failed", row.failed}};
    if (row.failed) {
      r["error"] = row.error;
    } else {
      r["omega"] = row.omega;
      r["log_prior"] = row.log_prior;
      r["omega_p"] = row.omega_p;
      r["report"] = elbo_report_to_json(row.report, false);
      if (row.metrics) {
        r["metrics"] = json{{"test_rmse", row.metrics->test_rmse},
                            {"mean_inclusion", row.metrics->mean_inclusion},
                            {"expected_edges", row.metrics->expected_edges}};
      }
    }
    rows.push_back(std::move(r));
  }
  return json{{"seed", report.seed}, {"candidates", std::move(rows)}, {"selected", report.selected}};
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open JSON file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

// CSV with header x1..xp,y; %.17g preserves doubles exactly.
inline void write_csv(const std::filesystem::path& path, const RegressionDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (std::size_t c = 0; c < data.p(); ++c) out << "x" << (c + 1) << ",";
  out << "y\n";
  char buf[64];
  for (std::size_t i = 0; i < data.n(); ++i) {
    auto row = data.row(i);
    for (std::size_t c = 0; c < data.p(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[c]);
      out << buf << ",";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", data.y[i]);
    out << buf << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace asvi
