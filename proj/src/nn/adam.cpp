#include "physmass/adam.hpp"

#include <cmath>
#include <string>

#include "physmass/errors.hpp"

namespace physmass {

void AdamState::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("adam: learning rate must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam: betas must lie in (0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("adam: eps must be positive");
  if (m.size() != v.size()) throw DimensionError("adam: moment buffers differ in size");
}

namespace {

void update_slice(AdamState& s, std::size_t offset, std::span<double> params,
                  std::span<const double> grads) {
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  const double step = s.lr / bc1;
  const double inv_sqrt_bc2 = 1.0 / std::sqrt(bc2);
  const double b1 = s.beta1, b2 = s.beta2;
  double* m = s.m.data() + offset;
  double* v = s.v.data() + offset;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    params[i] -= step * m[i] / (std::sqrt(v[i]) * inv_sqrt_bc2 + s.eps);
  }
}

void check_finite(std::span<const double> grads, std::size_t offset) {
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("adam: non-finite gradient at parameter index " +
                         std::to_string(offset + i));
    }
  }
}

}  // namespace

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  state.validate();
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw DimensionError("adam_step: params " + std::to_string(params.size()) + ", grads " +
                         std::to_string(grads.size()) + ", state " +
                         std::to_string(state.m.size()));
  }
  check_finite(grads, 0);
  ++state.step;
  update_slice(state, 0, params, grads);
}

AdamOptimizer::AdamOptimizer(const ParamRegistry& registry, double lr)
    : state_(registry.trainable_size(), lr) {
  state_.validate();
}

void AdamOptimizer::step(ParamRegistry& registry) {
  if (registry.trainable_size() != state_.m.size()) {
    throw DimensionError("adam: registry changed size since optimizer construction");
  }
  std::size_t offset = 0;
  for (const auto& e : registry.entries()) {
    if (e.frozen) continue;
    check_finite(e.grad, offset);
    offset += e.value.size();
  }
  ++state_.step;
  offset = 0;
  for (auto& e : registry.entries()) {
    if (e.frozen) continue;
    update_slice(state_, offset, e.value, e.grad);
    offset += e.value.size();
  }
}

}  // namespace physmass
