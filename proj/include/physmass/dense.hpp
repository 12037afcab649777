#pragma once

#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "physmass/rng.hpp"
#include "physmass/tensor.hpp"

namespace physmass {

enum class Activation { identity, relu, softplus, sigmoid, tanh };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

// ln(1 + e^x) without overflow.
inline double softplus(double x) {
  return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double activate(Activation a, double pre) {
  switch (a) {
    case Activation::identity: return pre;
    case Activation::relu: return pre > 0.0 ? pre : 0.0;
    case Activation::softplus: return softplus(pre);
    case Activation::sigmoid: return sigmoid(pre);
    case Activation::tanh: return std::tanh(pre);
  }
  return pre;
}

// Derivative with respect to the pre-activation. ReLU uses subgradient 0 at 0.
double activate_derivative(Activation a, double pre);

/// Fully connected layer: activation(W x + b), W is out x in.
struct DenseLayer {
  Tensor2 weight;
  Vec bias;
  Activation activation = Activation::identity;

  DenseLayer() = default;
  DenseLayer(Tensor2 w, Vec b, Activation act);

  std::size_t in_dim() const { return weight.cols; }
  std::size_t out_dim() const { return weight.rows; }

  // Glorot-uniform weights, zero bias.
  static DenseLayer glorot(std::size_t in, std::size_t out, Activation act, Rng& rng);

  void validate() const;
};

Vec dense_forward(const DenseLayer& layer, std::span<const double> x);
// Pre-activation W x + b only.
Vec dense_preactivation(const DenseLayer& layer, std::span<const double> x);

struct DenseGradients {
  Vec grad_x;
  Tensor2 grad_w;
  Vec grad_b;
};

DenseGradients dense_backward(const DenseLayer& layer, std::span<const double> x,
                              std::span<const double> grad_out);

/// Parameter-shaped gradient accumulator for one DenseLayer.
struct LayerGrad {
  Tensor2 w;
  Vec b;

  LayerGrad() = default;
  explicit LayerGrad(const DenseLayer& layer)
      : w(layer.weight.rows, layer.weight.cols), b(layer.bias.size(), 0.0) {}
  void zero();
};

// Accumulates parameter gradients into acc and returns grad wrt x. `pre` is the
// cached pre-activation from the forward pass.
Vec dense_backward_accumulate(const DenseLayer& layer, std::span<const double> x,
                              std::span<const double> pre, std::span<const double> grad_out,
                              LayerGrad& acc);

/// Stack of dense layers with the per-layer trace needed for backprop.
struct Mlp {
  std::vector<DenseLayer> layers;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }
};

struct MlpTrace {
  std::vector<Vec> inputs;  // input to each layer
  std::vector<Vec> pre;     // pre-activation of each layer
  Vec output;
};

struct MlpGrad {
  std::vector<LayerGrad> layers;

  MlpGrad() = default;
  explicit MlpGrad(const Mlp& mlp);
  void zero();
};

Vec mlp_forward(const Mlp& mlp, std::span<const double> x, MlpTrace* trace = nullptr);
Vec mlp_backward(const Mlp& mlp, const MlpTrace& trace, std::span<const double> grad_out,
                 MlpGrad& acc);

// Builds in -> widths[0] -> ... -> widths.back() with `hidden` activations and
// `last` on the final layer.
Mlp make_mlp(std::size_t in, const std::vector<std::size_t>& widths, Activation hidden,
             Activation last, Rng& rng);

}  // namespace physmass
