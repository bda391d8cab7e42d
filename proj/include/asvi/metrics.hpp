#pragma once

// Posterior-predictive evaluation: posterior-mean prediction, RMSE,
// sparsity summaries, and the empirical squared Hellinger diagnostic
// d^2 = E_X[1 - exp(-(f(X) - f0(X))^2 / (8 sigma_eps^2))].

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "asvi/dataset.hpp"
#include "asvi/network.hpp"
#include "asvi/rng.hpp"
#include "asvi/teacher.hpp"
#include "asvi/variational.hpp"

namespace asvi {

// Compensated summation; keeps reductions reproducible across accumulation
// orders.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double value) {
    const double y = value - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }

  double value() const { return sum; }
};

// Average of `draws` hard-gated forward passes per input row.
inline std::vector<double> posterior_mean_predict(const VariationalParams& params,
                                                  const NetworkShape& shape,
                                                  const RegressionDataset& data, int draws,
                                                  double tau, Rng& rng) {
  if (draws < 1) throw std::invalid_argument("posterior_mean_predict: draws must be >= 1");
  params.validate();
  if (params.size() != shape.param_count()) {
    throw std::invalid_argument("posterior_mean_predict: parameter length does not match shape");
  }
  std::vector<KahanSum> acc(data.n());
  MlpTrace trace;
  for (int d = 0; d < draws; ++d) {
    NoiseDraw noise = sample_noise(params.size(), rng);
    ThetaSample sample = sample_theta(params, noise, tau);
    for (std::size_t i = 0; i < data.n(); ++i) {
      auto out = forward_trace(shape, sample.theta_hard, data.row(i), trace);
      acc[i].add(out[0]);
    }
  }
  std::vector<double> mean(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) mean[i] = acc[i].value() / static_cast<double>(draws);
  return mean;
}

inline double rmse(const std::vector<double>& pred, const std::vector<double>& y) {
  if (pred.size() != y.size()) throw std::invalid_argument("rmse: length mismatch");
  if (pred.empty()) throw std::invalid_argument("rmse: empty input");
  KahanSum acc;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - y[i];
    acc.add(d * d);
  }
  return std::sqrt(acc.value() / static_cast<double>(pred.size()));
}

struct SparsitySummary {
  double mean_inclusion = 0.0;  // sum nu_i / H
  double expected_edges = 0.0;  // sum nu_i
};

inline SparsitySummary sparsity_summary(const VariationalParams& params) {
  params.validate();
  KahanSum acc;
  for (double raw : params.nu_raw) acc.add(nu_from_raw(raw));
  const double total = acc.value();
  const double h = static_cast<double>(params.size());
  return {h > 0.0 ? total / h : 0.0, total};
}

// Hellinger diagnostic for a fixed realized network.
inline double empirical_hellinger_sq(const NetworkShape& shape, std::span<const double> theta,
                                     const TeacherNetwork& teacher, const RegressionDataset& x_eval,
                                     double sigma_eps) {
  if (!(sigma_eps > 0.0)) throw std::invalid_argument("empirical_hellinger_sq: sigma_eps must be > 0");
  if (x_eval.n() == 0) throw std::invalid_argument("empirical_hellinger_sq: empty evaluation set");
  MlpTrace trace_student, trace_teacher;
  KahanSum acc;
  for (std::size_t i = 0; i < x_eval.n(); ++i) {
    const double f_student = forward_trace(shape, theta, x_eval.row(i), trace_student)[0];
    const double f_teacher =
        forward_trace(teacher.shape, teacher.theta, x_eval.row(i), trace_teacher)[0];
    const double gap = f_student - f_teacher;
    acc.add(1.0 - std::exp(-gap * gap / (8.0 * sigma_eps * sigma_eps)));
  }
  double value = acc.value() / static_cast<double>(x_eval.n());
  if (value < 0.0) value = 0.0;
  if (value > 1.0) value = 1.0;
  return value;
}

// Hellinger diagnostic for a variational posterior, using the posterior-mean
// predictor over `draws` samples.
inline double empirical_hellinger_sq(const VariationalParams& params, const NetworkShape& shape,
                                     const TeacherNetwork& teacher, const RegressionDataset& x_eval,
                                     double sigma_eps, int draws, double tau, Rng& rng) {
  if (!(sigma_eps > 0.0)) throw std::invalid_argument("empirical_hellinger_sq: sigma_eps must be > 0");
  if (x_eval.n() == 0) throw std::invalid_argument("empirical_hellinger_sq: empty evaluation set");
  std::vector<double> pred = posterior_mean_predict(params, shape, x_eval, draws, tau, rng);
  MlpTrace trace;
  KahanSum acc;
  for (std::size_t i = 0; i < x_eval.n(); ++i) {
    const double f_teacher = forward_trace(teacher.shape, teacher.theta, x_eval.row(i), trace)[0];
    const double gap = pred[i] - f_teacher;
    acc.add(1.0 - std::exp(-gap * gap / (8.0 * sigma_eps * sigma_eps)));
  }
  double value = acc.value() / static_cast<double>(x_eval.n());
  if (value < 0.0) value = 0.0;
  if (value > 1.0) value = 1.0;
  return value;
}

}  // namespace asvi
