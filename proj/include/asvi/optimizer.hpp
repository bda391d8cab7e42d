#pragma once

// Adam / RMSprop updates on the concatenated (mu, sigma_raw, nu_raw) block.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "asvi/elbo.hpp"
#include "asvi/variational.hpp"

namespace asvi {

struct OptimizerState {
  TrainConfig::Optimizer kind = TrainConfig::Optimizer::adam;
  std::vector<double> first_moment;   // Adam m_t; unused by RMSprop
  std::vector<double> second_moment;  // Adam v_t / RMSprop accumulator
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rms_decay = 0.9;
  double eps = 1e-8;

  static OptimizerState create(TrainConfig::Optimizer kind, std::size_t h) {
    OptimizerState state;
    state.kind = kind;
    state.first_moment.assign(3 * h, 0.0);
    state.second_moment.assign(3 * h, 0.0);
    return state;
  }
};

namespace detail {

inline void update_block(OptimizerState& state, double* value, const double* grad, std::size_t count,
                         std::size_t offset, double lr) {
  if (state.kind == TrainConfig::Optimizer::adam) {
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < count; ++i) {
      double& m = state.first_moment[offset + i];
      double& v = state.second_moment[offset + i];
      m = state.beta1 * m + (1.0 - state.beta1) * grad[i];
      v = state.beta2 * v + (1.0 - state.beta2) * grad[i] * grad[i];
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      double& v = state.second_moment[offset + i];
      v = state.rms_decay * v + (1.0 - state.rms_decay) * grad[i] * grad[i];
      value[i] -= lr * grad[i] / (std::sqrt(v) + state.eps);
    }
  }
}

}  // namespace detail

inline void optimizer_update(OptimizerState& state, VariationalParams& params,
                             const GradientBlock& grads, double lr) {
  const std::size_t h = params.size();
  if (grads.mu.size() != h || grads.sigma_raw.size() != h || grads.nu_raw.size() != h) {
    throw std::invalid_argument("optimizer_update: gradient block does not match parameters");
  }
  if (state.first_moment.size() != 3 * h || state.second_moment.size() != 3 * h) {
    throw std::invalid_argument("optimizer_update: state sized for a different parameter count");
  }
  ++state.step_count;
  detail::update_block(state, params.mu.data(), grads.mu.data(), h, 0, lr);
  detail::update_block(state, params.sigma_raw.data(), grads.sigma_raw.data(), h, h, lr);
  detail::update_block(state, params.nu_raw.data(), grads.nu_raw.data(), h, 2 * h, lr);
}

}  // namespace asvi
