#pragma once

#include <span>

#include "physmass/tensor.hpp"

namespace physmass {

struct LayerNormParams {
  Vec gain;
  Vec shift;
  double epsilon = 1e-5;

  LayerNormParams() = default;
  // gain = 1, shift = 0.
  explicit LayerNormParams(std::size_t dim, double eps = 1e-5);

  std::size_t dim() const { return gain.size(); }
  void validate() const;
};

// Population variance, epsilon inside the square root.
Vec layernorm_forward(const LayerNormParams& p, std::span<const double> x);

struct LayerNormGradients {
  Vec grad_x;
  Vec grad_gain;
  Vec grad_shift;
};

LayerNormGradients layernorm_backward(const LayerNormParams& p, std::span<const double> x,
                                      std::span<const double> grad_out);

}  // namespace physmass
