#pragma once

// Calculators for the theoretical rate quantities reported as diagnostics:
// the variational error r_n, the estimation rate eps_n, and the Holder
// structure prescription with its sup-norm approximation bound. Unspecified
// absolute constants are exposed as configuration with default 1 (slab
// bound defaults to 2); the calculators report rate shapes, not certified
// bounds.

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace asvi {

struct RateInputs {
  int depth = 1;             // L
  int width_multiplier = 1;  // N
  double sparsity = 1.0;     // s
  std::int64_t n = 1;        // sample size
  int input_dim = 1;         // p
  double slab_bound = 2.0;   // B
  double delta = 1.0;        // log exponent
  double rate_constant = 1.0;  // M

  void validate() const {
    if (depth < 1) throw std::invalid_argument("RateInputs: depth must be >= 1");
    if (width_multiplier < 1) throw std::invalid_argument("RateInputs: width multiplier must be >= 1");
    if (!(sparsity >= 1.0)) throw std::invalid_argument("RateInputs: sparsity must be >= 1");
    if (n < 1) throw std::invalid_argument("RateInputs: n must be >= 1");
    if (input_dim < 1) throw std::invalid_argument("RateInputs: input_dim must be >= 1");
    if (!(slab_bound > 0.0)) throw std::invalid_argument("RateInputs: slab bound must be > 0");
    if (!(delta >= 1.0)) throw std::invalid_argument("RateInputs: delta must be >= 1");
    if (!(rate_constant > 0.0)) throw std::invalid_argument("RateInputs: rate constant must be > 0");
  }
};

// r_n = (L s / n) log(12 B p N) + (s / n) log(n L / s)
inline double variational_error(const RateInputs& in) {
  in.validate();
  const double l = static_cast<double>(in.depth);
  const double s = in.sparsity;
  const double n = static_cast<double>(in.n);
  const double p = static_cast<double>(in.input_dim);
  const double width = static_cast<double>(in.width_multiplier);
  if (!(n * l / s > 1.0)) throw std::invalid_argument("variational_error: requires nL/s > 1");
  return (l * s / n) * std::log(12.0 * in.slab_bound * p * width) + (s / n) * std::log(n * l / s);
}

// eps_n = M sqrt((s log(nL/s) + L s log(pN)) / n) log^delta(n)
inline double estimation_rate(const RateInputs& in) {
  in.validate();
  const double l = static_cast<double>(in.depth);
  const double s = in.sparsity;
  const double n = static_cast<double>(in.n);
  const double p = static_cast<double>(in.input_dim);
  const double width = static_cast<double>(in.width_multiplier);
  if (!(n * l / s > 1.0)) throw std::invalid_argument("estimation_rate: requires nL/s > 1");
  if (!(p * width > 1.0)) throw std::invalid_argument("estimation_rate: requires pN > 1");
  const double inner = (s * std::log(n * l / s) + l * s * std::log(p * width)) / n;
  return in.rate_constant * std::sqrt(inner) * std::pow(std::log(n), in.delta);
}

struct HolderStructure {
  long depth = 0;              // L, exact integer arithmetic
  double sparsity_bound = 0.0;  // upper bound on s
  double width_multiplier = 0.0;  // N = C_N * floor(n^(p/(2a+p)) / log n)
};

namespace detail {

inline int floor_log2(std::int64_t n) {
  int k = -1;
  while (n > 0) {
    n >>= 1;
    ++k;
  }
  return k;
}

inline int ceil_log2(std::int64_t n) {
  const int fl = floor_log2(n);
  return (std::int64_t{1} << fl) == n ? fl : fl + 1;
}

}  // namespace detail

// Structure prescription for an alpha-Holder target:
//   L = 8 + (floor(log2 n) + 5)(1 + ceil(log2 p))
//   s <= 94 p^2 (alpha+1)^(2p) N (L + ceil(log2 p))
//   N = C_N floor(n^(p/(2 alpha + p)) / log n)
inline HolderStructure holder_structure(double alpha, int input_dim, std::int64_t n, double c_n) {
  if (!(alpha > 0.0)) throw std::invalid_argument("holder_structure: alpha must be > 0");
  if (input_dim < 1) throw std::invalid_argument("holder_structure: input_dim must be >= 1");
  if (n < 2) throw std::invalid_argument("holder_structure: n must be >= 2");
  if (!(c_n > 0.0)) throw std::invalid_argument("holder_structure: C_N must be > 0");
  const double p = static_cast<double>(input_dim);
  const int clog2p = detail::ceil_log2(input_dim);

  HolderStructure out;
  out.depth = 8 + static_cast<long>(detail::floor_log2(n) + 5) * static_cast<long>(1 + clog2p);
  out.width_multiplier =
      c_n * std::floor(std::pow(static_cast<double>(n), p / (2.0 * alpha + p)) /
                       std::log(static_cast<double>(n)));
  out.sparsity_bound = 94.0 * p * p * std::pow(alpha + 1.0, 2.0 * p) * out.width_multiplier *
                       (static_cast<double>(out.depth) + static_cast<double>(clog2p));
  return out;
}

// Sup-norm approximation bound:
//   (2 ||f0||_H^alpha + 1) 3^(p+1) (N/n) + ||f0||_H^alpha 2^alpha N^(-alpha/p)
inline double holder_approx_bound(double alpha, int input_dim, std::int64_t n,
                                  std::int64_t width_multiplier, double f_norm) {
  if (!(alpha > 0.0)) throw std::invalid_argument("holder_approx_bound: alpha must be > 0");
  if (input_dim < 1) throw std::invalid_argument("holder_approx_bound: input_dim must be >= 1");
  if (n < 1) throw std::invalid_argument("holder_approx_bound: n must be >= 1");
  if (width_multiplier < 1) throw std::invalid_argument("holder_approx_bound: N must be >= 1");
  if (!(f_norm >= 0.0)) throw std::invalid_argument("holder_approx_bound: f_norm must be >= 0");
  const double p = static_cast<double>(input_dim);
  const double nn = static_cast<double>(n);
  const double width = static_cast<double>(width_multiplier);
  return (2.0 * f_norm + 1.0) * std::pow(3.0, p + 1.0) * (width / nn) +
         f_norm * std::pow(2.0, alpha) * std::pow(width, -alpha / p);
}

}  // namespace asvi
