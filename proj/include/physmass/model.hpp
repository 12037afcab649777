#pragma once

#include <cstdint>
#include <string>

#include "physmass/checkpoint.hpp"
#include "physmass/fusion.hpp"
#include "physmass/geometry.hpp"
#include "physmass/heads.hpp"
#include "physmass/params.hpp"
#include "physmass/semantics.hpp"

namespace physmass {

/// Which evidence streams feed the fusion. density = material text,
/// volume = geometry.
struct CueMask {
  bool image = true;
  bool density = true;
  bool volume = true;

  std::size_t count() const { return std::size_t{image} + density + volume; }
  // e.g. "image+density+volume"
  std::string label() const;
  static CueMask from_label(const std::string& label);
  bool operator==(const CueMask&) const = default;
};

struct ModelConfig {
  std::size_t feature_dim = 64;
  FusionKind fusion = FusionKind::gated;
  CueMask cues{};
  std::size_t num_points = 1024;
  DensityActivationConfig density{};
  std::size_t head_hidden = 64;
  std::uint64_t seed = 0;
  std::size_t appearance_dim = 6;
  std::size_t image_hidden = 64;
  std::size_t point_hidden = 64;
  // Unit of the volume MLP output in m^3, and its initial bias in that unit.
  double volume_unit = 1e-3;
  double volume_bias_init = 3.0;
  // Training only: a floored volume factor still receives the loss gradient
  // when that gradient asks for more volume.
  bool revive_floored_volume = true;

  void validate() const;
};

/// Everything the model may read from one sample. Fields of disabled cues are
/// ignored.
struct ModelInput {
  Vec appearance;
  PointCloud points;
  MaterialId material = 0;
};

/// Encoders, fusion and both heads. Parameters are plain members; the
/// registry built by registry() views them in place.
class MassModel {
 public:
  MassModel(const ModelConfig& cfg, std::size_t material_rows);

  const ModelConfig& config() const { return cfg_; }
  std::size_t material_rows() const { return embedding_.table.rows; }

  // Throws InputError when an enabled cue is missing or malformed.
  MassPrediction predict(const ModelInput& in) const;
  FusedFeature fused_feature(const ModelInput& in) const;

  // Forward and backward on one sample; adds the ALDE gradient to the grad
  // buffers and returns the loss.
  double accumulate(const ModelInput& in, double mass);

  ParamRegistry registry();
  std::uint64_t embedding_checksum() const;

  Checkpoint to_checkpoint() const;
  static MassModel from_checkpoint(const Checkpoint& ckpt);

 private:
  struct Trace;
  MassPrediction forward(const ModelInput& in, Trace* trace) const;
  void check_input(const ModelInput& in) const;

  ModelConfig cfg_;
  Mlp image_mlp_;
  LayerNormParams image_norm_;
  PointEncoderParams points_;
  MaterialEmbedding embedding_;
  LayerNormParams text_norm_;
  FusionParams fusion_;
  Mlp volume_head_;
  Mlp density_head_;

  MlpGrad g_image_mlp_;
  Vec g_image_gain_, g_image_shift_;
  PointEncoderGrad g_points_;
  Vec g_text_gain_, g_text_shift_;
  FusionGrad g_fusion_;
  MlpGrad g_volume_, g_density_;
};

/// Appearance-only direct regressor: A -> 64 relu -> 64 relu -> 1 softplus.
class DirectRegressor {
 public:
  DirectRegressor(std::size_t appearance_dim, std::size_t hidden, std::uint64_t seed);

  // Softplus output, never below kMassFloor.
  double predict(const ModelInput& in) const;
  double accumulate(const ModelInput& in, double mass);
  ParamRegistry registry();

  Checkpoint to_checkpoint() const;
  static DirectRegressor from_checkpoint(const Checkpoint& ckpt);

  const Mlp& mlp() const { return mlp_; }
  std::uint64_t seed() const { return seed_; }

  static constexpr double kMassFloor = 1e-12;

 private:
  Mlp mlp_;
  MlpGrad grad_;
  std::uint64_t seed_ = 0;
};

// "factored" or "direct", read from a checkpoint header.
std::string checkpoint_model_kind(const Checkpoint& ckpt);

}  // namespace physmass
