#pragma once

#include <array>
#include <optional>
#include <span>

#include "physmass/dense.hpp"
#include "physmass/rng.hpp"

namespace physmass {

inline constexpr double kVolumeFloor = 1e-6;

struct DensityActivationConfig {
  double rho_min = 50.0;
  double rho_max = 20000.0;

  void validate() const;
};

struct MassPrediction {
  double volume_factor = 0.0;
  double density_factor = 0.0;
  double mass = 0.0;
  std::optional<std::array<double, 3>> gate_weights;
};

// max(relu(pre), floor) and its derivative (0 below the floor).
double volume_activation(double pre);
double volume_activation_derivative(double pre);

// exp(ln rho_min + sigmoid(pre) * (ln rho_max - ln rho_min)), clamped to the range.
double density_activation(const DensityActivationConfig& cfg, double pre);
double density_activation_derivative(const DensityActivationConfig& cfg, double pre);

/// in -> hidden (tanh) -> 1. Both heads share this shape.
Mlp make_head(std::size_t in, std::size_t hidden, Rng& rng);

// output_scale multiplies the MLP output before the activation; it sets the
// unit the MLP works in (1e-3 = liters for a volume factor in m^3).
double volume_head(const Mlp& head, std::span<const double> fused, MlpTrace* trace = nullptr,
                   double output_scale = 1.0);
double density_head(const Mlp& head, const DensityActivationConfig& cfg,
                    std::span<const double> fused, MlpTrace* trace = nullptr);

// Backprop d(loss)/d(output) through a head; returns d/d(fused).
Vec volume_head_backward(const Mlp& head, const MlpTrace& trace, double grad_volume, MlpGrad& acc,
                         double output_scale = 1.0);
Vec density_head_backward(const Mlp& head, const DensityActivationConfig& cfg,
                          const MlpTrace& trace, double grad_density, MlpGrad& acc);

// Throws ContractError when a factor is outside its admissible range.
MassPrediction compose_mass(double volume_factor, double density_factor,
                            const DensityActivationConfig& cfg = {});

struct LossValue {
  double loss = 0.0;
  double grad = 0.0;  // d loss / d m_hat
};

/// |ln m - ln m_hat| with subgradient 0 at equality.
LossValue alde_loss(double m, double m_hat);

}  // namespace physmass
