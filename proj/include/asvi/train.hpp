#pragma once

// Per-width training loop: seeded minibatch SGD on the penalized loss,
// optional windowed early stopping, and the averaged full-data ELBO
// estimate used by the width-selection criterion.

#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "asvi/dataset.hpp"
#include "asvi/elbo.hpp"
#include "asvi/network.hpp"
#include "asvi/optimizer.hpp"
#include "asvi/rng.hpp"
#include "asvi/variational.hpp"

namespace asvi {

struct TrainingError : std::runtime_error {
  int epoch;
  explicit TrainingError(const std::string& what, int epoch_in)
      : std::runtime_error(what), epoch(epoch_in) {}
};

struct TrainResult {
  VariationalParams params;
  ElboReport report;
};

// Called after each epoch; used for checkpoint-style diagnostics.
using EpochObserver = std::function<void(int epoch, const VariationalParams&, double epoch_neg_elbo)>;

// Means uniform with fan-based range per layer, slab stds at 0.05,
// inclusion probabilities at 0.5.
inline VariationalParams init_params(const NetworkShape& shape, std::uint64_t seed) {
  shape.validate();
  const std::size_t h = shape.param_count();
  VariationalParams params;
  params.mu.resize(h);
  params.sigma_raw.assign(h, sigma_raw_from_sigma(0.05));
  params.nu_raw.assign(h, 0.0);

  Rng rng = Rng(seed).split("init-mu");
  std::size_t off = 0;
  for (int l = 0; l < shape.layer_count(); ++l) {
    const std::size_t in = static_cast<std::size_t>(shape.layer_in(l));
    const std::size_t out = static_cast<std::size_t>(shape.layer_out(l));
    const double r = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t i = 0; i < (in + 1) * out; ++i) params.mu[off + i] = rng.uniform(-r, r);
    off += (in + 1) * out;
  }
  return params;
}

inline TrainResult train_width(const RegressionDataset& train, const NetworkShape& shape,
                               const PriorConfig& prior, const TrainConfig& cfg,
                               const EpochObserver& observer = {}) {
  prior.validate();
  cfg.validate();
  shape.validate();
  train.validate();
  if (train.n() == 0) throw std::invalid_argument("train_width: empty dataset");
  if (static_cast<std::size_t>(cfg.batch_size) > train.n()) {
    throw std::invalid_argument("train_width: batch_size exceeds dataset size");
  }
  if (train.p() != static_cast<std::size_t>(shape.input_dim)) {
    throw std::invalid_argument("train_width: dataset feature count does not match input_dim");
  }

  const std::size_t h = shape.param_count();
  const std::size_t n = train.n();
  VariationalParams params = init_params(shape, derive_seed(cfg.seed, "init"));
  OptimizerState opt = OptimizerState::create(cfg.optimizer, h);
  Rng shuffle_rng = Rng(cfg.seed).split("shuffle");
  Rng noise_rng = Rng(cfg.seed).split("noise");

  detail::ElboWorkspace ws;
  GradientBlock grad;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  ElboReport report;
  report.trace.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t len = std::min(static_cast<std::size_t>(cfg.batch_size), n - start);
      std::span<const std::size_t> rows(order.data() + start, len);
      auto noises = detail::draw_noises(h, cfg.mc_samples, noise_rng);
      auto step = detail::elbo_step(params, shape, train, rows, n, prior, cfg, noises, &grad, ws);
      if (!std::isfinite(step.neg_elbo)) {
        throw TrainingError("train_width: non-finite loss at epoch " + std::to_string(epoch), epoch);
      }
      optimizer_update(opt, params, grad, cfg.learning_rate);
      epoch_loss += step.neg_elbo;
      ++steps;
    }
    const double epoch_mean = epoch_loss / static_cast<double>(steps);
    report.trace.push_back(epoch_mean);
    if (observer) observer(epoch, params, epoch_mean);

    if (cfg.early_stop_tol > 0.0 &&
        report.trace.size() >= 2 * static_cast<std::size_t>(cfg.early_stop_window)) {
      const std::size_t w = static_cast<std::size_t>(cfg.early_stop_window);
      const auto end = report.trace.end();
      const double recent = std::accumulate(end - static_cast<std::ptrdiff_t>(w), end, 0.0) /
                            static_cast<double>(w);
      const double previous = std::accumulate(end - static_cast<std::ptrdiff_t>(2 * w),
                                              end - static_cast<std::ptrdiff_t>(w), 0.0) /
                              static_cast<double>(w);
      if (previous - recent < cfg.early_stop_tol) break;
    }
  }

  // Final Omega estimate: fresh-noise full-data passes, averaged. l2 and l3
  // are noise-free so averaging keeps neg_elbo = l1 + l2 + l3 exact.
  std::vector<std::size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  Rng eval_rng = Rng(cfg.seed).split("omega-eval");
  double l1_acc = 0.0, l2 = 0.0, l3 = 0.0;
  for (int pass = 0; pass < cfg.eval_passes; ++pass) {
    auto noises = detail::draw_noises(h, cfg.mc_samples, eval_rng);
    auto step = detail::elbo_step(params, shape, train, all_rows, n, prior, cfg, noises, nullptr, ws);
    l1_acc += step.l1;
    l2 = step.l2;
    l3 = step.l3;
  }
  report.l1 = l1_acc / static_cast<double>(cfg.eval_passes);
  report.l2 = l2;
  report.l3 = l3;
  report.neg_elbo = report.l1 + report.l2 + report.l3;
  report.omega = -report.neg_elbo;
  return {std::move(params), std::move(report)};
}

}  // namespace asvi
