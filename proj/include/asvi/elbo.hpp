#pragma once

// Stochastic negative-ELBO estimation and its gradient estimator.
//
// The loss decomposes as L = L1 + L2 + L3:
//   L1  scaled minibatch negative log likelihood, Monte Carlo over K noise
//       draws, evaluated at the hard-gated theta;
//   L2  closed-form slab KL;
//   L3  approximated structure KL.
// The gradient of the L1 part follows the straight-through convention: the
// network gradient is taken at the soft-gated theta, then routed into
// (mu, sigma_raw, nu_raw) through the reparameterizations. L2 and L3 have
// exact gradients.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "asvi/dataset.hpp"
#include "asvi/network.hpp"
#include "asvi/rng.hpp"
#include "asvi/variational.hpp"

namespace asvi {

struct TrainConfig {
  enum class Optimizer { adam, rmsprop };

  int batch_size = 1024;       // m
  int mc_samples = 1;          // K
  int epochs = 7000;
  double learning_rate = 5e-3;
  Optimizer optimizer = Optimizer::adam;
  std::uint64_t seed = 0;
  double tau = 0.5;
  double early_stop_tol = 0.0;  // 0 disables
  int early_stop_window = 50;
  int eval_passes = 8;  // full-data passes averaged into the final ELBO estimate

  void validate() const {
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (mc_samples < 1) throw std::invalid_argument("TrainConfig: mc_samples must be >= 1");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("TrainConfig: tau must be > 0");
    if (early_stop_tol < 0.0) throw std::invalid_argument("TrainConfig: early_stop_tol must be >= 0");
    if (early_stop_window < 1) throw std::invalid_argument("TrainConfig: early_stop_window must be >= 1");
    if (eval_passes < 1) throw std::invalid_argument("TrainConfig: eval_passes must be >= 1");
  }
};

struct ElboReport {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double neg_elbo = 0.0;  // l1 + l2 + l3 for the reported pass
  double omega = 0.0;     // -neg_elbo of the final full-data estimate (set by training)
  std::vector<double> trace;  // per-epoch neg_elbo estimates
};

struct GradientBlock {
  std::vector<double> mu;
  std::vector<double> sigma_raw;
  std::vector<double> nu_raw;

  void resize(std::size_t h) {
    mu.assign(h, 0.0);
    sigma_raw.assign(h, 0.0);
    nu_raw.assign(h, 0.0);
  }
};

namespace detail {

// Scratch buffers reused across minibatch steps.
struct ElboWorkspace {
  MlpTrace trace;
  std::vector<double> grad_theta;  // d(-log lik)/d theta_soft, summed over the batch
  std::vector<double> delta_a, delta_b;
  std::vector<double> upstream;
};

struct StepResult {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double neg_elbo = 0.0;
};

// One evaluation of the stochastic loss on a batch, optionally with its
// gradient. `noises` supplies the K Monte Carlo draws; both value and
// gradient use the same draws.
inline StepResult elbo_step(const VariationalParams& params, const NetworkShape& shape,
                            const RegressionDataset& data, std::span<const std::size_t> rows,
                            std::size_t full_n, const PriorConfig& prior, const TrainConfig& cfg,
                            const std::vector<NoiseDraw>& noises, GradientBlock* grad,
                            ElboWorkspace& ws) {
  if (rows.empty()) throw std::invalid_argument("elbo_step: batch must be non-empty");
  params.validate();
  const std::size_t h = params.size();
  if (h != shape.param_count()) {
    throw std::invalid_argument("elbo_step: parameter length does not match shape");
  }
  const double scale = static_cast<double>(full_n) / static_cast<double>(rows.size()) /
                       static_cast<double>(noises.size());
  const double inv_var = 1.0 / (prior.sigma_eps * prior.sigma_eps);

  if (grad != nullptr) grad->resize(h);

  double l1 = 0.0;
  std::vector<double> theta_hard(h), theta_soft(h), gate_soft(h), slab(h);
  for (const NoiseDraw& noise : noises) {
    if (noise.eps.size() != h || noise.u.size() != h) {
      throw std::invalid_argument("elbo_step: noise dimensions do not match parameters");
    }
    for (std::size_t i = 0; i < h; ++i) {
      const double s = params.mu[i] + sigma_from_raw(params.sigma_raw[i]) * noise.eps[i];
      const GateSample gate = gate_from_raw(params.nu_raw[i], noise.u[i], cfg.tau);
      slab[i] = s;
      gate_soft[i] = gate.gate_soft;
      theta_soft[i] = gate.gate_soft * s;
      theta_hard[i] = gate.gate_hard ? s : 0.0;
    }

    // Value pass on the hard-gated network.
    for (std::size_t r : rows) {
      auto out = forward_trace(shape, theta_hard, data.row(r), ws.trace);
      l1 -= scale * gaussian_log_lik(out[0], data.y[r], prior.sigma_eps);
    }

    if (grad != nullptr) {
      // Gradient pass on the soft-gated network.
      ws.grad_theta.assign(h, 0.0);
      ws.upstream.resize(1);
      for (std::size_t r : rows) {
        auto out = forward_trace(shape, theta_soft, data.row(r), ws.trace);
        ws.upstream[0] = (out[0] - data.y[r]) * inv_var;  // d(-log lik)/d y_pred
        backward_accumulate(shape, theta_soft, ws.trace, ws.upstream, ws.grad_theta, ws.delta_a,
                            ws.delta_b);
      }
      for (std::size_t i = 0; i < h; ++i) {
        const double g = scale * ws.grad_theta[i];
        const double gate = gate_soft[i];
        grad->mu[i] += gate * g;
        grad->sigma_raw[i] += gate * noise.eps[i] * g;  // sigma chain applied below
        // dG/dnu * dnu/dnu_raw collapses to -G(1-G)/tau, finite at saturation.
        grad->nu_raw[i] += slab[i] * g * (-gate * (1.0 - gate) / cfg.tau);
      }
    }
  }

  StepResult result;
  result.l1 = l1;
  result.l2 = kl_gaussian_slab(params, prior.sigma0);
  result.l3 = kl_structure(params, prior.lambda_s, h, prior.entropy_in_nats);
  result.neg_elbo = result.l1 + result.l2 + result.l3;

  if (grad != nullptr) {
    const double hd = static_cast<double>(h);
    double nu_sum = 0.0;
    for (std::size_t i = 0; i < h; ++i) nu_sum += nu_from_raw(params.nu_raw[i]);
    const double variance = nu_sum * (hd - nu_sum) / hd;
    // Entropy derivative w.r.t. the inclusion sum; zero inside the clamp.
    double dent_ds = 0.0;
    if (variance > kStructureVarianceFloor) {
      dent_ds = -0.5 * (hd - 2.0 * nu_sum) / (hd * variance);
      if (!prior.entropy_in_nats) dent_ds /= 0.6931471805599453;
    }
    const double inv_two_sigma0_sq = 1.0 / (2.0 * prior.sigma0 * prior.sigma0);
    for (std::size_t i = 0; i < h; ++i) {
      const double nu = nu_from_raw(params.nu_raw[i]);
      const double sigma = sigma_from_raw(params.sigma_raw[i]);
      const double mu = params.mu[i];
      // L2 terms.
      grad->mu[i] += nu * mu * 2.0 * inv_two_sigma0_sq;
      grad->sigma_raw[i] += nu * (sigma * 2.0 * inv_two_sigma0_sq - 1.0 / sigma);
      const double kl_edge =
          std::log(prior.sigma0 / sigma) + (sigma * sigma + mu * mu) * inv_two_sigma0_sq - 0.5;
      // L3 + L2 nu-chain; dnu/dnu_raw = -nu(1-nu).
      const double dnu = -nu * (1.0 - nu);
      grad->nu_raw[i] += (kl_edge + dent_ds + prior.lambda_s) * dnu;
      // softplus chain for sigma.
      grad->sigma_raw[i] *= sigmoid(params.sigma_raw[i]);
    }
  }
  return result;
}

inline std::vector<NoiseDraw> draw_noises(std::size_t h, int k, Rng& rng) {
  std::vector<NoiseDraw> noises;
  noises.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) noises.push_back(sample_noise(h, rng));
  return noises;
}

}  // namespace detail

// Stochastic estimate of the decomposed negative ELBO on a batch of row
// indices; `full_n` is the dataset size the batch stands in for.
inline ElboReport estimate_neg_elbo(const VariationalParams& params, const NetworkShape& shape,
                                    const RegressionDataset& data,
                                    std::span<const std::size_t> rows, std::size_t full_n,
                                    const PriorConfig& prior, const TrainConfig& cfg, Rng& rng) {
  auto noises = detail::draw_noises(params.size(), cfg.mc_samples, rng);
  detail::ElboWorkspace ws;
  auto step = detail::elbo_step(params, shape, data, rows, full_n, prior, cfg, noises, nullptr, ws);
  ElboReport report;
  report.l1 = step.l1;
  report.l2 = step.l2;
  report.l3 = step.l3;
  report.neg_elbo = step.neg_elbo;
  return report;
}

// Convenience overload over the whole dataset.
inline ElboReport estimate_neg_elbo(const VariationalParams& params, const NetworkShape& shape,
                                    const RegressionDataset& data, const PriorConfig& prior,
                                    const TrainConfig& cfg, Rng& rng) {
  std::vector<std::size_t> rows(data.n());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return estimate_neg_elbo(params, shape, data, rows, data.n(), prior, cfg, rng);
}

// Stochastic gradient of the loss with respect to (mu, sigma_raw, nu_raw).
inline GradientBlock gradient_estimate(const VariationalParams& params, const NetworkShape& shape,
                                       const RegressionDataset& data,
                                       std::span<const std::size_t> rows, std::size_t full_n,
                                       const PriorConfig& prior, const TrainConfig& cfg, Rng& rng) {
  auto noises = detail::draw_noises(params.size(), cfg.mc_samples, rng);
  detail::ElboWorkspace ws;
  GradientBlock grad;
  detail::elbo_step(params, shape, data, rows, full_n, prior, cfg, noises, &grad, ws);
  return grad;
}

}  // namespace asvi
