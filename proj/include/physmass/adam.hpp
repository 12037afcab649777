#pragma once

#include <cstdint>
#include <span>

#include "physmass/params.hpp"
#include "physmass/tensor.hpp"

namespace physmass {

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  Vec m;
  Vec v;

  AdamState() = default;
  AdamState(std::size_t n, double learning_rate) : lr(learning_rate), m(n, 0.0), v(n, 0.0) {}

  void validate() const;
};

/// One bias-corrected Adam update on a flat parameter vector. Increments the
/// step counter. Throws NumericError naming the index of a non-finite grad.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

/// Adam over every trainable entry of a registry, sharing one step counter.
class AdamOptimizer {
 public:
  AdamOptimizer(const ParamRegistry& registry, double lr);

  void step(ParamRegistry& registry);
  const AdamState& state() const { return state_; }

 private:
  AdamState state_;
};

}  // namespace physmass
