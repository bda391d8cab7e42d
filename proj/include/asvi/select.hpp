#pragma once

// Penalized-ELBO width selection: trains each candidate architecture
// independently, scores Omega_p = Omega + log pi(N), and picks the argmax
// with ties broken toward fewer parameters.

#include <atomic>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "asvi/dataset.hpp"
#include "asvi/metrics.hpp"
#include "asvi/train.hpp"
#include "asvi/variational.hpp"

namespace asvi {

struct WidthCandidate {
  std::vector<int> widths;  // hidden layer widths
  int prior_level = 1;      // N entering the architecture prior pi(N)

  static WidthCandidate explicit_widths(std::vector<int> widths) {
    if (widths.empty()) throw std::invalid_argument("WidthCandidate: widths must be non-empty");
    int level = 0;
    for (int w : widths) {
      if (w < 1) throw std::invalid_argument("WidthCandidate: widths must be positive");
      level = std::max(level, w);
    }
    return {std::move(widths), level};
  }

  // Theory convention: equal hidden widths 12 * p * N.
  static WidthCandidate from_multiplier(int multiplier, int input_dim, int hidden_layers) {
    if (multiplier < 1) throw std::invalid_argument("WidthCandidate: multiplier must be >= 1");
    if (hidden_layers < 1) throw std::invalid_argument("WidthCandidate: hidden_layers must be >= 1");
    std::vector<int> widths(static_cast<std::size_t>(hidden_layers), 12 * input_dim * multiplier);
    return {std::move(widths), multiplier};
  }

  NetworkShape shape(int input_dim, int output_dim = 1) const {
    return {input_dim, widths, output_dim};
  }
};

inline double penalized_elbo(double omega, int width_level, double lambda) {
  return omega + log_prior_width(width_level, lambda);
}

struct CandidateMetrics {
  double test_rmse = 0.0;
  double mean_inclusion = 0.0;
  double expected_edges = 0.0;
};

struct CandidateResult {
  WidthCandidate candidate;
  bool failed = false;
  std::string error;
  double omega = 0.0;
  double log_prior = 0.0;
  double omega_p = 0.0;
  std::size_t parameter_count = 0;
  VariationalParams params;
  ElboReport report;
  std::optional<CandidateMetrics> metrics;
};

struct SelectionReport {
  std::uint64_t seed = 0;
  std::vector<CandidateResult> per_candidate;
  int selected = -1;  // index into per_candidate
};

struct SelectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Trains every candidate (optionally across `parallel` workers) and selects
// the penalized-ELBO argmax. Per-candidate seeds derive from (cfg.seed,
// candidate index) so adding a candidate never perturbs the others. Failed
// candidates stay in the report but are excluded from the argmax.
inline SelectionReport select_width(const RegressionDataset& train,
                                    const std::vector<WidthCandidate>& candidates, int input_dim,
                                    const PriorConfig& prior, const TrainConfig& cfg,
                                    int parallel = 1, const RegressionDataset* test = nullptr,
                                    int eval_draws = 30) {
  if (candidates.empty()) throw SelectionError("select_width: candidate list is empty");
  if (parallel < 1) throw std::invalid_argument("select_width: parallel must be >= 1");

  SelectionReport report;
  report.seed = cfg.seed;
  report.per_candidate.resize(candidates.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= candidates.size()) return;
      CandidateResult& result = report.per_candidate[idx];
      result.candidate = candidates[idx];
      const NetworkShape shape = candidates[idx].shape(input_dim);
      result.parameter_count = shape.param_count();
      TrainConfig local = cfg;
      local.seed = derive_seed(cfg.seed, idx);
      try {
        TrainResult trained = train_width(train, shape, prior, local);
        result.params = std::move(trained.params);
        result.report = std::move(trained.report);
        result.omega = result.report.omega;
        result.log_prior = log_prior_width(candidates[idx].prior_level, prior.lambda);
        result.omega_p = result.omega + result.log_prior;
        if (test != nullptr) {
          Rng eval_rng = Rng(local.seed).split("posterior-eval");
          CandidateMetrics metrics;
          metrics.test_rmse =
              rmse(posterior_mean_predict(result.params, shape, *test, eval_draws, cfg.tau, eval_rng),
                   test->y);
          const SparsitySummary sparsity = sparsity_summary(result.params);
          metrics.mean_inclusion = sparsity.mean_inclusion;
          metrics.expected_edges = sparsity.expected_edges;
          result.metrics = metrics;
        }
      } catch (const std::exception& e) {
        result.failed = true;
        result.error = e.what();
      }
    }
  };

  if (parallel == 1 || candidates.size() == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    const int workers = std::min<std::size_t>(static_cast<std::size_t>(parallel), candidates.size());
    threads.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  // Argmax of omega_p; ties go to the candidate with fewer parameters, then
  // to the earlier index.
  int best = -1;
  for (std::size_t i = 0; i < report.per_candidate.size(); ++i) {
    const CandidateResult& row = report.per_candidate[i];
    if (row.failed) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const CandidateResult& cur = report.per_candidate[static_cast<std::size_t>(best)];
    if (row.omega_p > cur.omega_p ||
        (row.omega_p == cur.omega_p && row.parameter_count < cur.parameter_count)) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) throw SelectionError("select_width: every candidate failed to train");
  report.selected = best;
  return report;
}

}  // namespace asvi
