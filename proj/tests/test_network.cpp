#include <doctest.h>

#include <cmath>
#include <vector>

#include "asvi/network.hpp"
#include "asvi/rng.hpp"

using namespace asvi;

namespace {

// Independent finite-difference oracle: central difference of upstream . f(x)
// with respect to one flat coordinate.
double fd_grad(const NetworkShape& shape, std::vector<double> theta, const std::vector<double>& x,
               const std::vector<double>& upstream, std::size_t coord, double step) {
  theta[coord] += step;
  auto out_hi = forward(shape, theta, x);
  theta[coord] -= 2.0 * step;
  auto out_lo = forward(shape, theta, x);
  double hi = 0.0, lo = 0.0;
  for (std::size_t o = 0; o < upstream.size(); ++o) {
    hi += upstream[o] * out_hi[o];
    lo += upstream[o] * out_lo[o];
  }
  return (hi - lo) / (2.0 * step);
}

NetworkShape random_shape(Rng& rng) {
  NetworkShape shape;
  shape.input_dim = 1 + static_cast<int>(rng.uniform01() * 4.0);
  const int layers = 1 + static_cast<int>(rng.uniform01() * 2.0);
  for (int l = 0; l < layers; ++l) {
    shape.hidden_widths.push_back(1 + static_cast<int>(rng.uniform01() * 5.0));
  }
  shape.output_dim = 1;
  return shape;
}

// Smallest |pre-activation| across hidden layers, recomputed by hand
// (hidden biases are subtracted thresholds, output bias is additive).
double min_abs_preactivation(const NetworkShape& shape, const std::vector<double>& theta,
                             const std::vector<double>& x) {
  double min_abs = 1e300;
  std::vector<double> act(x.begin(), x.end());
  std::size_t off = 0;
  for (int l = 0; l < shape.layer_count(); ++l) {
    const int in = shape.layer_in(l);
    const int out = shape.layer_out(l);
    std::vector<double> next(static_cast<std::size_t>(out));
    for (int o = 0; o < out; ++o) {
      const double bias = theta[off + static_cast<std::size_t>(in) * static_cast<std::size_t>(out) +
                                static_cast<std::size_t>(o)];
      double acc = (l < shape.layer_count() - 1) ? -bias : bias;
      for (int i = 0; i < in; ++i) {
        acc += theta[off + static_cast<std::size_t>(o) * static_cast<std::size_t>(in) +
                     static_cast<std::size_t>(i)] *
               act[static_cast<std::size_t>(i)];
      }
      if (l < shape.layer_count() - 1) {
        min_abs = std::min(min_abs, std::abs(acc));
        next[static_cast<std::size_t>(o)] = acc > 0.0 ? acc : 0.0;
      } else {
        next[static_cast<std::size_t>(o)] = acc;
      }
    }
    act = std::move(next);
    off += (static_cast<std::size_t>(in) + 1) * static_cast<std::size_t>(out);
  }
  return min_abs;
}

}  // namespace

TEST_CASE("param_count matches hand counts") {
  CHECK(NetworkShape{1, {1}, 1}.param_count() == 4);
  CHECK(NetworkShape{20, {10, 10}, 1}.param_count() == 331);
  CHECK(NetworkShape{8, {50}, 1}.param_count() == 501);
}

TEST_CASE("flat index bijection round-trips on random shapes") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    NetworkShape shape = random_shape(rng);
    const std::size_t h = shape.param_count();
    for (std::size_t flat = 0; flat < h; ++flat) {
      ParamCoord c = flat_to_coord(shape, flat);
      CHECK(coord_to_flat(shape, c) == flat);
    }
    CHECK_THROWS_AS(flat_to_coord(shape, h), ShapeError);
  }
}

TEST_CASE("forward: zero theta maps everything to zero") {
  NetworkShape shape{3, {4, 2}, 1};
  std::vector<double> theta(shape.param_count(), 0.0);
  auto out = forward(shape, theta, std::vector<double>{0.3, -0.8, 0.5});
  CHECK(out[0] == 0.0);
}

TEST_CASE("forward: ReLU dead region (1-1-1 net)") {
  NetworkShape shape{1, {1}, 1};
  // layout: W1, b1, W2, b2
  std::vector<double> theta{1.0, 0.0, 1.0, 0.0};
  CHECK(forward(shape, theta, std::vector<double>{-1.0})[0] == 0.0);
  CHECK(forward(shape, theta, std::vector<double>{2.0})[0] == doctest::Approx(2.0));
}

TEST_CASE("forward matches hand-composed 2-3-1 evaluation") {
  NetworkShape shape{2, {3}, 1};
  // W1 (3x2 row-major), b1 (3), W2 (1x3), b2 (1)
  std::vector<double> theta{0.5, -1.0, 2.0, 0.25, -0.75, 1.5,  // W1
                            0.1, -0.2, 0.3,                    // b1
                            1.0, -2.0, 0.5,                    // W2
                            0.7};                              // b2
  const std::vector<double> x{0.4, -0.6};
  // Hand arithmetic (thresholded hidden units, additive output bias):
  //   h1 = relu(0.5*0.4 - 1.0*(-0.6) - 0.1) = 0.7
  //   h2 = relu(2.0*0.4 + 0.25*(-0.6) + 0.2) = 0.85
  //   h3 = relu(-0.75*0.4 + 1.5*(-0.6) - 0.3) = relu(-1.5) = 0
  //   y  = 1.0*0.7 - 2.0*0.85 + 0.5*0 + 0.7 = -0.3
  CHECK(forward(shape, theta, x)[0] == doctest::Approx(-0.3).epsilon(1e-12));
}

TEST_CASE("forward errors on dimension mismatch") {
  NetworkShape shape{2, {3}, 1};
  std::vector<double> theta(shape.param_count(), 0.1);
  CHECK_THROWS_AS(forward(shape, theta, std::vector<double>{1.0}), ShapeError);
  theta.pop_back();
  CHECK_THROWS_AS(forward(shape, theta, std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST_CASE("backward: zero theta edge cases") {
  NetworkShape shape{2, {2}, 1};
  std::vector<double> theta(shape.param_count(), 0.0);
  const std::vector<double> x{0.5, -0.5};
  const std::vector<double> upstream{2.0};
  auto grad = backward(shape, theta, x, upstream);
  // Output bias picks up the upstream weight directly.
  CHECK(grad[coord_to_flat(shape, {1, 0, 0, true})] == doctest::Approx(2.0));
  // Gradients of weights into dead units vanish.
  CHECK(grad[coord_to_flat(shape, {0, 0, 0, false})] == 0.0);
  CHECK(grad[coord_to_flat(shape, {0, 1, 1, false})] == 0.0);

  // Zero upstream kills everything.
  std::vector<double> theta2(shape.param_count(), 0.3);
  auto grad2 = backward(shape, theta2, x, std::vector<double>{0.0});
  for (double g : grad2) CHECK(g == 0.0);
}

TEST_CASE("backward matches central finite differences away from kinks") {
  Rng rng(11);
  int checked = 0;
  int trials = 0;
  while (checked < 100 && trials < 2000) {
    ++trials;
    Rng trial_rng = rng.split(static_cast<std::uint64_t>(trials));
    NetworkShape shape = random_shape(trial_rng);
    const std::size_t h = shape.param_count();
    std::vector<double> theta(h);
    for (double& t : theta) t = trial_rng.uniform(-1.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(shape.input_dim));
    for (double& v : x) v = trial_rng.uniform(-1.0, 1.0);
    if (min_abs_preactivation(shape, theta, x) < 1e-3) continue;

    const std::vector<double> upstream{trial_rng.uniform(0.5, 1.5)};
    auto grad = backward(shape, theta, x, upstream);
    for (int probe = 0; probe < 5; ++probe) {
      const std::size_t coord = static_cast<std::size_t>(trial_rng.uniform01() * static_cast<double>(h));
      const double fd = fd_grad(shape, theta, x, upstream, coord, 1e-5);
      const double denom = std::max({std::abs(fd), std::abs(grad[coord]), 1e-8});
      CHECK(std::abs(grad[coord] - fd) / denom <= 1e-6);
    }
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("forward is piecewise linear along fixed-activation segments") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    Rng trial_rng = rng.split(static_cast<std::uint64_t>(trial));
    NetworkShape shape = random_shape(trial_rng);
    std::vector<double> theta(shape.param_count());
    for (double& t : theta) t = trial_rng.uniform(-1.0, 1.0);
    std::vector<double> x0(static_cast<std::size_t>(shape.input_dim));
    std::vector<double> dir(static_cast<std::size_t>(shape.input_dim));
    for (double& v : x0) v = trial_rng.uniform(-1.0, 1.0);
    for (double& v : dir) v = trial_rng.uniform(-1.0, 1.0);

    // Shrink the segment until the activation pattern is constant across it.
    auto pattern = [&](double t) {
      std::vector<double> x = x0;
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += t * dir[i];
      MlpTrace trace;
      forward_trace(shape, theta, x, trace);
      std::vector<bool> bits;
      for (std::size_t l = 1; l + 1 < trace.act.size(); ++l) {
        for (double a : trace.act[l]) bits.push_back(a > 0.0);
      }
      return bits;
    };
    double half = 1e-3;
    while (half > 1e-9 && !(pattern(-half) == pattern(0.0) && pattern(half) == pattern(0.0))) {
      half *= 0.5;
    }
    REQUIRE(half > 1e-9);

    auto eval = [&](double t) {
      std::vector<double> x = x0;
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += t * dir[i];
      return forward(shape, theta, x)[0];
    };
    const double mid = eval(0.0), lo = eval(-half), hi = eval(half);
    CHECK(std::abs(mid - 0.5 * (lo + hi)) <= 1e-9 * std::max(1.0, std::abs(mid)));
  }
}

TEST_CASE("masked coordinates match a structurally pruned evaluation") {
  // Zeroing theta entries must equal dropping those edges from an
  // independent adjacency-list evaluation.
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    Rng trial_rng = rng.split(static_cast<std::uint64_t>(trial));
    NetworkShape shape = random_shape(trial_rng);
    const std::size_t h = shape.param_count();
    std::vector<double> theta(h);
    for (double& t : theta) t = trial_rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < h; ++i) {
      if (trial_rng.uniform01() < 0.5) theta[i] = 0.0;
    }
    std::vector<double> x(static_cast<std::size_t>(shape.input_dim));
    for (double& v : x) v = trial_rng.uniform(-1.0, 1.0);

    // Pruned evaluation: only walk surviving edges.
    std::vector<double> act(x.begin(), x.end());
    std::size_t off = 0;
    for (int l = 0; l < shape.layer_count(); ++l) {
      const int in = shape.layer_in(l);
      const int out = shape.layer_out(l);
      std::vector<double> next(static_cast<std::size_t>(out), 0.0);
      for (int o = 0; o < out; ++o) {
        const double b = theta[off + static_cast<std::size_t>(in) * static_cast<std::size_t>(out) +
                               static_cast<std::size_t>(o)];
        // bias edge survives only if nonzero, identical either way
        double acc = (l < shape.layer_count() - 1) ? -b : b;
        for (int i = 0; i < in; ++i) {
          const double w = theta[off + static_cast<std::size_t>(o) * static_cast<std::size_t>(in) +
                                 static_cast<std::size_t>(i)];
          if (w != 0.0) acc += w * act[static_cast<std::size_t>(i)];
        }
        next[static_cast<std::size_t>(o)] = (l < shape.layer_count() - 1 && acc < 0.0) ? 0.0 : acc;
      }
      act = std::move(next);
      off += (static_cast<std::size_t>(in) + 1) * static_cast<std::size_t>(out);
    }
    CHECK(forward(shape, theta, x)[0] == doctest::Approx(act[0]).epsilon(1e-12));
  }
}

TEST_CASE("gaussian_log_lik closed forms") {
  // -0.5 log(2 pi) at the mode with unit noise.
  CHECK(gaussian_log_lik(1.0, 1.0, 1.0) == doctest::Approx(-0.9189385332046727).epsilon(1e-12));
  // One-sigma residual subtracts exactly 0.5.
  const double sigma = 0.7;
  CHECK(gaussian_log_lik(0.0, sigma, sigma) ==
        doctest::Approx(-0.5 * std::log(2.0 * 3.141592653589793 * sigma * sigma) - 0.5).epsilon(1e-12));
  // Monotone decay in |residual|.
  double prev = gaussian_log_lik(0.0, 0.0, 1.0);
  for (double r = 1.0; r < 60.0; r *= 2.0) {
    const double cur = gaussian_log_lik(r, 0.0, 1.0);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK_THROWS_AS(gaussian_log_lik(0.0, 0.0, 0.0), std::invalid_argument);
}
