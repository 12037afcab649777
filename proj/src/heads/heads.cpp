#include "physmass/heads.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "physmass/errors.hpp"

namespace physmass {

void DensityActivationConfig::validate() const {
  if (!(rho_min > 0.0) || !(rho_min < rho_max) || !std::isfinite(rho_max)) {
    throw ConfigError("density activation: need 0 < rho_min < rho_max");
  }
}

double volume_activation(double pre) {
  const double r = pre > 0.0 ? pre : 0.0;
  return std::max(r, kVolumeFloor);
}

double volume_activation_derivative(double pre) { return pre > kVolumeFloor ? 1.0 : 0.0; }

double density_activation(const DensityActivationConfig& cfg, double pre) {
  const double lo = std::log(cfg.rho_min);
  const double hi = std::log(cfg.rho_max);
  const double rho = std::exp(lo + sigmoid(pre) * (hi - lo));
  return std::clamp(rho, cfg.rho_min, cfg.rho_max);
}

double density_activation_derivative(const DensityActivationConfig& cfg, double pre) {
  const double span = std::log(cfg.rho_max) - std::log(cfg.rho_min);
  const double s = sigmoid(pre);
  return density_activation(cfg, pre) * span * s * (1.0 - s);
}

Mlp make_head(std::size_t in, std::size_t hidden, Rng& rng) {
  return make_mlp(in, {hidden, 1}, Activation::tanh, Activation::identity, rng);
}

namespace {

void check_head(const Mlp& head, std::span<const double> fused) {
  if (head.layers.empty() || head.out_dim() != 1) throw DimensionError("head must output a scalar");
  if (fused.size() != head.in_dim()) {
    throw DimensionError("head expects " + std::to_string(head.in_dim()) + " inputs, got " +
                         std::to_string(fused.size()));
  }
}

}  // namespace

double volume_head(const Mlp& head, std::span<const double> fused, MlpTrace* trace,
                   double output_scale) {
  check_head(head, fused);
  if (!(output_scale > 0.0)) throw DomainError("volume head: output scale must be positive");
  return volume_activation(output_scale * mlp_forward(head, fused, trace)[0]);
}

double density_head(const Mlp& head, const DensityActivationConfig& cfg,
                    std::span<const double> fused, MlpTrace* trace) {
  cfg.validate();
  check_head(head, fused);
  return density_activation(cfg, mlp_forward(head, fused, trace)[0]);
}

Vec volume_head_backward(const Mlp& head, const MlpTrace& trace, double grad_volume, MlpGrad& acc,
                         double output_scale) {
  const double g =
      grad_volume * output_scale * volume_activation_derivative(output_scale * trace.output[0]);
  const double go[1] = {g};
  return mlp_backward(head, trace, go, acc);
}

Vec density_head_backward(const Mlp& head, const DensityActivationConfig& cfg,
                          const MlpTrace& trace, double grad_density, MlpGrad& acc) {
  const double g = grad_density * density_activation_derivative(cfg, trace.output[0]);
  const double go[1] = {g};
  return mlp_backward(head, trace, go, acc);
}

MassPrediction compose_mass(double volume_factor, double density_factor,
                            const DensityActivationConfig& cfg) {
  if (!(volume_factor >= kVolumeFloor) || !std::isfinite(volume_factor)) {
    throw ContractError("compose_mass: volume factor " + std::to_string(volume_factor) +
                        " below floor");
  }
  if (!(density_factor >= cfg.rho_min && density_factor <= cfg.rho_max)) {
    throw ContractError("compose_mass: density factor " + std::to_string(density_factor) +
                        " outside [" + std::to_string(cfg.rho_min) + ", " +
                        std::to_string(cfg.rho_max) + "]");
  }
  return {volume_factor, density_factor, volume_factor * density_factor, std::nullopt};
}

LossValue alde_loss(double m, double m_hat) {
  if (!(m > 0.0) || !(m_hat > 0.0) || !std::isfinite(m) || !std::isfinite(m_hat)) {
    throw DomainError("alde_loss: masses must be positive and finite");
  }
  const double diff = std::log(m_hat) - std::log(m);
  const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  return {std::fabs(diff), sign / m_hat};
}

}  // namespace physmass
