#pragma once

// Deterministic sparse ReLU multilayer perceptron: forward evaluation and
// reverse-mode gradients with respect to the flattened parameter vector.
// Hidden layer l computes ReLU(W_l x - b_l): the bias enters as a firing
// threshold, subtracted inside the activation. The final layer is linear
// with an ordinary additive bias, W_L x + b_L.
//
// Flat parameter layout (canonical order): for each layer l = 0..L-1, the
// weight matrix W_l in row-major order (entry (o, i) at offset o*in + i,
// o indexing output units), followed by the bias vector b_l. Layer l maps
// width layer_in(l) to width layer_out(l).

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace asvi {

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NetworkShape {
  int input_dim = 1;
  std::vector<int> hidden_widths;
  int output_dim = 1;

  // Number of affine layers L (hidden count + 1).
  int layer_count() const { return static_cast<int>(hidden_widths.size()) + 1; }

  int layer_in(int layer) const {
    return layer == 0 ? input_dim : hidden_widths[static_cast<std::size_t>(layer) - 1];
  }

  int layer_out(int layer) const {
    return layer == layer_count() - 1 ? output_dim
                                      : hidden_widths[static_cast<std::size_t>(layer)];
  }

  // H = sum over layers of (in + 1) * out.
  std::size_t param_count() const {
    std::size_t total = 0;
    for (int l = 0; l < layer_count(); ++l) {
      total += (static_cast<std::size_t>(layer_in(l)) + 1) * static_cast<std::size_t>(layer_out(l));
    }
    return total;
  }

  void validate() const {
    if (input_dim < 1) throw ShapeError("NetworkShape: input_dim must be positive");
    if (output_dim < 1) throw ShapeError("NetworkShape: output_dim must be positive");
    for (int w : hidden_widths) {
      if (w < 1) throw ShapeError("NetworkShape: hidden widths must be positive");
    }
  }

  bool operator==(const NetworkShape&) const = default;
};

inline std::size_t param_count(const NetworkShape& shape) { return shape.param_count(); }

// Coordinates of one flat parameter. For biases, col is ignored and row is
// the output unit; for weights, row is the output unit and col the input.
struct ParamCoord {
  int layer = 0;
  int row = 0;
  int col = 0;
  bool is_bias = false;
};

inline std::size_t coord_to_flat(const NetworkShape& shape, const ParamCoord& c) {
  if (c.layer < 0 || c.layer >= shape.layer_count()) throw ShapeError("coord_to_flat: layer out of range");
  std::size_t off = 0;
  for (int l = 0; l < c.layer; ++l) {
    off += (static_cast<std::size_t>(shape.layer_in(l)) + 1) * static_cast<std::size_t>(shape.layer_out(l));
  }
  const int in = shape.layer_in(c.layer);
  const int out = shape.layer_out(c.layer);
  if (c.row < 0 || c.row >= out) throw ShapeError("coord_to_flat: row out of range");
  if (c.is_bias) {
    return off + static_cast<std::size_t>(in) * static_cast<std::size_t>(out) +
           static_cast<std::size_t>(c.row);
  }
  if (c.col < 0 || c.col >= in) throw ShapeError("coord_to_flat: col out of range");
  return off + static_cast<std::size_t>(c.row) * static_cast<std::size_t>(in) +
         static_cast<std::size_t>(c.col);
}

inline ParamCoord flat_to_coord(const NetworkShape& shape, std::size_t flat) {
  if (flat >= shape.param_count()) throw ShapeError("flat_to_coord: index out of range");
  for (int l = 0; l < shape.layer_count(); ++l) {
    const std::size_t in = static_cast<std::size_t>(shape.layer_in(l));
    const std::size_t out = static_cast<std::size_t>(shape.layer_out(l));
    const std::size_t w_count = in * out;
    if (flat < w_count) {
      return {l, static_cast<int>(flat / in), static_cast<int>(flat % in), false};
    }
    flat -= w_count;
    if (flat < out) {
      return {l, static_cast<int>(flat), 0, true};
    }
    flat -= out;
  }
  throw ShapeError("flat_to_coord: unreachable");  // guarded by the range check
}

// Per-layer activations retained for reverse mode. act[0] is the input,
// act[l] the output of layer l-1; reused across calls to avoid allocation.
struct MlpTrace {
  std::vector<std::vector<double>> act;
};

namespace detail {

inline void check_forward_args(const NetworkShape& shape, std::span<const double> theta,
                               std::span<const double> x) {
  if (theta.size() != shape.param_count()) {
    throw ShapeError("forward: theta length " + std::to_string(theta.size()) +
                     " does not match parameter count " + std::to_string(shape.param_count()));
  }
  if (x.size() != static_cast<std::size_t>(shape.input_dim)) {
    throw ShapeError("forward: input length " + std::to_string(x.size()) +
                     " does not match input_dim " + std::to_string(shape.input_dim));
  }
}

}  // namespace detail

// Forward pass recording activations of every layer.
inline std::span<const double> forward_trace(const NetworkShape& shape,
                                             std::span<const double> theta,
                                             std::span<const double> x, MlpTrace& trace) {
  detail::check_forward_args(shape, theta, x);
  const int layers = shape.layer_count();
  trace.act.resize(static_cast<std::size_t>(layers) + 1);
  trace.act[0].assign(x.begin(), x.end());

  std::size_t off = 0;
  for (int l = 0; l < layers; ++l) {
    const int in = shape.layer_in(l);
    const int out = shape.layer_out(l);
    const double* w = theta.data() + off;
    const double* b = w + static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
    const std::vector<double>& prev = trace.act[static_cast<std::size_t>(l)];
    std::vector<double>& cur = trace.act[static_cast<std::size_t>(l) + 1];
    cur.resize(static_cast<std::size_t>(out));
    const bool is_output = (l == layers - 1);
    for (int o = 0; o < out; ++o) {
      const double* wrow = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
      double acc = is_output ? b[o] : -b[o];
      for (int i = 0; i < in; ++i) acc += wrow[i] * prev[static_cast<std::size_t>(i)];
      // ReLU on hidden layers; subgradient at 0 is fixed to 0 downstream.
      cur[static_cast<std::size_t>(o)] = (is_output || acc > 0.0) ? acc : 0.0;
    }
    off += (static_cast<std::size_t>(in) + 1) * static_cast<std::size_t>(out);
  }
  return trace.act.back();
}

inline std::vector<double> forward(const NetworkShape& shape, std::span<const double> theta,
                                   std::span<const double> x) {
  MlpTrace trace;
  auto out = forward_trace(shape, theta, x, trace);
  return std::vector<double>(out.begin(), out.end());
}

// Accumulates d(upstream . f_theta(x)) / d theta into grad, which must be
// sized param_count and is not zeroed here. The trace must come from
// forward_trace on the same (shape, theta, x).
inline void backward_accumulate(const NetworkShape& shape, std::span<const double> theta,
                                const MlpTrace& trace, std::span<const double> upstream,
                                std::span<double> grad, std::vector<double>& delta_buf,
                                std::vector<double>& delta_prev_buf) {
  if (upstream.size() != static_cast<std::size_t>(shape.output_dim)) {
    throw ShapeError("backward: upstream length does not match output_dim");
  }
  if (grad.size() != shape.param_count()) {
    throw ShapeError("backward: gradient length does not match parameter count");
  }
  const int layers = shape.layer_count();

  std::vector<std::size_t> offsets(static_cast<std::size_t>(layers));
  std::size_t off = 0;
  for (int l = 0; l < layers; ++l) {
    offsets[static_cast<std::size_t>(l)] = off;
    off += (static_cast<std::size_t>(shape.layer_in(l)) + 1) *
           static_cast<std::size_t>(shape.layer_out(l));
  }

  std::vector<double>& delta = delta_buf;
  std::vector<double>& delta_prev = delta_prev_buf;
  delta.assign(upstream.begin(), upstream.end());

  for (int l = layers - 1; l >= 0; --l) {
    const int in = shape.layer_in(l);
    const int out = shape.layer_out(l);
    const double* w = theta.data() + offsets[static_cast<std::size_t>(l)];
    double* gw = grad.data() + offsets[static_cast<std::size_t>(l)];
    double* gb = gw + static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
    const std::vector<double>& prev = trace.act[static_cast<std::size_t>(l)];

    const bool is_output = (l == layers - 1);
    delta_prev.assign(static_cast<std::size_t>(in), 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      if (d == 0.0) continue;
      const double* wrow = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
      double* grow = gw + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
      gb[o] += is_output ? d : -d;  // hidden biases enter as thresholds
      for (int i = 0; i < in; ++i) {
        grow[i] += d * prev[static_cast<std::size_t>(i)];
        delta_prev[static_cast<std::size_t>(i)] += d * wrow[i];
      }
    }
    if (l > 0) {
      // Gate by ReLU activity of the feeding layer; act == 0 covers both the
      // dead region and the kink, giving ReLU'(0) = 0.
      for (int i = 0; i < in; ++i) {
        if (prev[static_cast<std::size_t>(i)] <= 0.0) {
          delta_prev[static_cast<std::size_t>(i)] = 0.0;
        }
      }
    }
    delta.swap(delta_prev);
  }
}

inline std::vector<double> backward(const NetworkShape& shape, std::span<const double> theta,
                                    std::span<const double> x, std::span<const double> upstream) {
  MlpTrace trace;
  forward_trace(shape, theta, x, trace);
  std::vector<double> grad(shape.param_count(), 0.0);
  std::vector<double> buf_a, buf_b;
  backward_accumulate(shape, theta, trace, upstream, grad, buf_a, buf_b);
  return grad;
}

// log N(y; y_pred, sigma_eps^2)
inline double gaussian_log_lik(double y_pred, double y, double sigma_eps) {
  if (!(sigma_eps > 0.0)) throw std::invalid_argument("gaussian_log_lik: sigma_eps must be > 0");
  const double r = y - y_pred;
  return -0.5 * std::log(6.283185307179586476925287 * sigma_eps * sigma_eps) -
         r * r / (2.0 * sigma_eps * sigma_eps);
}

}  // namespace asvi
