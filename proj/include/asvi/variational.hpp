#pragma once

// Spike-and-slab variational distribution over the flat parameter vector:
// unconstrained reparameterizations, Gaussian + straight-through
// Gumbel-softmax sampling, and the KL penalty terms of the negative ELBO.
//
// Per coordinate i the posterior is nu_i * N(mu_i, sigma_i^2) + (1-nu_i) * delta_0
// with sigma_i = softplus(sigma_raw_i) and nu_i = 1 / (1 + exp(nu_raw_i)).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "asvi/rng.hpp"

namespace asvi {

struct PriorConfig {
  double sigma0 = 0.8;     // slab std
  double lambda = 10.0;    // width prior rate
  double lambda_s = 3.0;   // sparsity rate
  double sigma_eps = 1.0;  // observation noise std
  double tau = 0.5;        // Gumbel-softmax temperature
  // Entropy term of the structure KL in nats instead of the printed base-2
  // form; off by default.
  bool entropy_in_nats = false;

  void validate() const {
    if (!(sigma0 > 0.0)) throw std::invalid_argument("PriorConfig: sigma0 must be > 0");
    if (!(lambda > 0.0)) throw std::invalid_argument("PriorConfig: lambda must be > 0");
    if (!(lambda_s > 0.0)) throw std::invalid_argument("PriorConfig: lambda_s must be > 0");
    if (!(sigma_eps > 0.0)) throw std::invalid_argument("PriorConfig: sigma_eps must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("PriorConfig: tau must be > 0");
  }
};

struct VariationalParams {
  std::vector<double> mu;
  std::vector<double> sigma_raw;
  std::vector<double> nu_raw;

  std::size_t size() const { return mu.size(); }

  void validate() const {
    if (sigma_raw.size() != mu.size() || nu_raw.size() != mu.size()) {
      throw std::invalid_argument("VariationalParams: mu, sigma_raw, nu_raw must share length");
    }
  }
};

struct NoiseDraw {
  std::vector<double> eps;  // N(0,1) draws
  std::vector<double> u;    // U(0,1) draws, clamped strictly inside (0,1)
};

inline NoiseDraw sample_noise(std::size_t count, Rng& rng) {
  NoiseDraw noise;
  noise.eps.resize(count);
  noise.u.resize(count);
  for (std::size_t i = 0; i < count; ++i) noise.eps[i] = rng.normal();
  for (std::size_t i = 0; i < count; ++i) noise.u[i] = rng.uniform_open();
  return noise;
}

struct ThetaSample {
  std::vector<double> theta_hard;     // gate_hard_i * (mu_i + sigma_i * eps_i)
  std::vector<double> theta_soft;     // gate_soft_i * (mu_i + sigma_i * eps_i)
  std::vector<double> gate_soft;      // G_tau values
  std::vector<std::uint8_t> gate_hard;
};

// nu = 1 / (1 + exp(nu_raw)); inverse of nu_raw = log((1 - nu) / nu).
inline double nu_from_raw(double nu_raw) {
  return nu_raw >= 0.0 ? std::exp(-nu_raw) / (1.0 + std::exp(-nu_raw))
                       : 1.0 / (1.0 + std::exp(nu_raw));
}

inline double nu_raw_from_nu(double nu) { return std::log((1.0 - nu) / nu); }

// sigma = softplus(sigma_raw) = log(1 + exp(sigma_raw)), stable on both tails.
inline double sigma_from_raw(double sigma_raw) {
  return sigma_raw > 0.0 ? sigma_raw + std::log1p(std::exp(-sigma_raw))
                         : std::log1p(std::exp(sigma_raw));
}

// Inverse softplus: sigma_raw = log(exp(sigma) - 1).
inline double sigma_raw_from_sigma(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma_raw_from_sigma: sigma must be > 0");
  return sigma > 30.0 ? sigma : std::log(std::expm1(sigma));
}

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

struct GateSample {
  double gate_soft = 0.0;
  bool gate_hard = false;
};

// G_tau(nu; u) = sigmoid((logit(nu) + logit(u)) / tau). The hard gate is the
// strict threshold 1(G_tau > 0.5), so exactly-0.5 resolves to 0.
inline GateSample gumbel_gate(double nu, double u, double tau) {
  if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument("gumbel_gate: nu must lie in (0,1)");
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("gumbel_gate: u must lie in (0,1)");
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_gate: tau must be > 0");
  const double z = (std::log(nu / (1.0 - nu)) + std::log(u / (1.0 - u))) / tau;
  const double g = sigmoid(z);
  return {g, g > 0.5};
}

// Same gate computed from the unconstrained nu_raw; logit(nu) = -nu_raw
// exactly, so this stays finite even where nu saturates in floating point.
inline GateSample gate_from_raw(double nu_raw, double u, double tau) {
  const double z = (-nu_raw + std::log(u / (1.0 - u))) / tau;
  const double g = sigmoid(z);
  return {g, g > 0.5};
}

inline ThetaSample sample_theta(const VariationalParams& params, const NoiseDraw& noise,
                                double tau) {
  params.validate();
  const std::size_t h = params.size();
  if (noise.eps.size() != h || noise.u.size() != h) {
    throw std::invalid_argument("sample_theta: noise dimensions do not match parameters");
  }
  ThetaSample sample;
  sample.theta_hard.resize(h);
  sample.theta_soft.resize(h);
  sample.gate_soft.resize(h);
  sample.gate_hard.resize(h);
  for (std::size_t i = 0; i < h; ++i) {
    const double slab = params.mu[i] + sigma_from_raw(params.sigma_raw[i]) * noise.eps[i];
    const GateSample gate = gate_from_raw(params.nu_raw[i], noise.u[i], tau);
    sample.gate_soft[i] = gate.gate_soft;
    sample.gate_hard[i] = gate.gate_hard ? 1 : 0;
    sample.theta_soft[i] = gate.gate_soft * slab;
    sample.theta_hard[i] = gate.gate_hard ? slab : 0.0;
  }
  return sample;
}

// Slab KL: sum_i nu_i * KL(N(mu_i, sigma_i^2) || N(0, sigma0^2))
//        = sum_i nu_i * (log(sigma0/sigma_i) + (sigma_i^2 + mu_i^2)/(2 sigma0^2) - 0.5).
inline double kl_gaussian_slab(const VariationalParams& params, double sigma0) {
  if (!(sigma0 > 0.0)) throw std::invalid_argument("kl_gaussian_slab: sigma0 must be > 0");
  params.validate();
  double total = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double nu = nu_from_raw(params.nu_raw[i]);
    const double sigma = sigma_from_raw(params.sigma_raw[i]);
    const double mu = params.mu[i];
    total += nu * (std::log(sigma0 / sigma) + (sigma * sigma + mu * mu) / (2.0 * sigma0 * sigma0) - 0.5);
  }
  return total;
}

inline constexpr double kStructureVarianceFloor = 1e-8;

// Structure KL approximation: -0.5 * log2(2 pi e * v) + lambda_s * S with
// S = sum nu_i and v = S (H - S) / H clamped below at 1e-8. The entropy term
// keeps the printed base-2 logarithm unless in_nats is set.
inline double kl_structure(const VariationalParams& params, double lambda_s, std::size_t total_params,
                           bool in_nats = false) {
  if (!(lambda_s > 0.0)) throw std::invalid_argument("kl_structure: lambda_s must be > 0");
  params.validate();
  if (params.size() != total_params) {
    throw std::invalid_argument("kl_structure: H does not match parameter length");
  }
  double s = 0.0;
  for (double raw : params.nu_raw) s += nu_from_raw(raw);
  const double h = static_cast<double>(total_params);
  double v = s * (h - s) / h;
  if (v < kStructureVarianceFloor) v = kStructureVarianceFloor;
  const double two_pi_e = 17.079468445347132;  // 2 * pi * e
  double entropy = 0.5 * std::log(two_pi_e * v);
  if (!in_nats) entropy /= 0.6931471805599453;  // to bits
  return -entropy + lambda_s * s;
}

// log pi(N) for the width prior pi(N) = lambda^N / ((e^lambda - 1) N!), N >= 1.
inline double log_prior_width(int width_level, double lambda) {
  if (width_level < 1) {
    throw std::invalid_argument("log_prior_width: prior is supported on N >= 1");
  }
  if (!(lambda > 0.0)) throw std::invalid_argument("log_prior_width: lambda must be > 0");
  const double n = static_cast<double>(width_level);
  // log(e^lambda - 1) = lambda + log1p(-e^-lambda), safe for large lambda.
  const double log_denom = lambda + std::log1p(-std::exp(-lambda));
  return n * std::log(lambda) - log_denom - std::lgamma(n + 1.0);
}

}  // namespace asvi
