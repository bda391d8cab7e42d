#pragma once

// Sparse ground-truth networks and synthetic regression data for
// teacher-student experiments.

#include <cstdint>
#include <vector>

#include "asvi/dataset.hpp"
#include "asvi/network.hpp"
#include "asvi/rng.hpp"

namespace asvi {

struct TeacherNetwork {
  NetworkShape shape;
  std::vector<double> theta;       // flat, canonical layer-major order
  std::vector<std::uint8_t> mask;  // support of theta: theta[i] == 0 wherever mask[i] == 0
  int nonzero_count = 0;
};

// Every coordinate (weights and biases alike) is drawn uniform on
// [weight_low, weight_high], then independently zeroed with probability
// zero_rate. Value and mask draws come from split streams so the support is
// independent of the drawn values.
inline TeacherNetwork generate_teacher(const NetworkShape& shape, double weight_low,
                                       double weight_high, double zero_rate, std::uint64_t seed) {
  shape.validate();
  if (!(weight_low < weight_high)) {
    throw std::invalid_argument("generate_teacher: weight_low must be < weight_high");
  }
  if (!(zero_rate >= 0.0 && zero_rate <= 1.0)) {
    throw std::invalid_argument("generate_teacher: zero_rate must lie in [0,1]");
  }
  const std::size_t h = shape.param_count();
  Rng value_rng = Rng(seed).split("teacher-values");
  Rng mask_rng = Rng(seed).split("teacher-mask");

  TeacherNetwork teacher;
  teacher.shape = shape;
  teacher.theta.resize(h);
  teacher.mask.resize(h);
  for (std::size_t i = 0; i < h; ++i) teacher.theta[i] = value_rng.uniform(weight_low, weight_high);
  int survivors = 0;
  for (std::size_t i = 0; i < h; ++i) {
    const bool zeroed = mask_rng.uniform01() < zero_rate;
    teacher.mask[i] = zeroed ? 0 : 1;
    if (zeroed) {
      teacher.theta[i] = 0.0;
    } else {
      ++survivors;
    }
  }
  teacher.nonzero_count = survivors;
  return teacher;
}

// X rows iid uniform on [-1,1]^p, y = f_teacher(x) + sigma_eps * N(0,1).
// Covariate and noise streams are split so each is reproducible on its own.
inline RegressionDataset synthesize(const TeacherNetwork& teacher, std::size_t n,
                                    double sigma_eps, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("synthesize: n must be >= 1");
  if (!(sigma_eps >= 0.0)) throw std::invalid_argument("synthesize: sigma_eps must be >= 0");
  const std::size_t p = static_cast<std::size_t>(teacher.shape.input_dim);
  Rng x_rng = Rng(seed).split("data-x");
  Rng noise_rng = Rng(seed).split("data-noise");

  RegressionDataset data;
  data.n_rows = n;
  data.n_features = p;
  data.sigma_eps = sigma_eps;
  data.provenance = RegressionDataset::Provenance::synthetic;
  data.x.resize(n * p);
  data.y.resize(n);
  for (double& v : data.x) v = x_rng.uniform(-1.0, 1.0);

  MlpTrace trace;
  for (std::size_t i = 0; i < n; ++i) {
    auto out = forward_trace(teacher.shape, teacher.theta, data.row(i), trace);
    data.y[i] = out[0] + sigma_eps * noise_rng.normal();
  }
  return data;
}

}  // namespace asvi
