#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "physmass/dense.hpp"
#include "physmass/rng.hpp"
#include "physmass/tensor.hpp"

namespace physmass {

enum class Modality : int { image = 0, geometry = 1, text = 2 };
inline constexpr std::size_t kNumModalities = 3;

/// Per-modality encoder outputs. A missing entry is a disabled cue.
struct ModalFeatures {
  std::optional<Vec> image;
  std::optional<Vec> geometry;
  std::optional<Vec> text;

  const std::optional<Vec>& get(Modality m) const;
  std::optional<Vec>& get(Modality m);

  // Present tokens in fixed order image, geometry, text.
  std::vector<Modality> present() const;
  // Common width; DimensionError when present features disagree or none exist.
  std::size_t dim() const;
};

struct FusedFeature {
  Vec vector;
  std::optional<std::array<double, 3>> gate_weights;  // (image, geometry, text)
};

enum class FusionKind { concat, self_attention, gated };

std::string_view to_string(FusionKind k);
FusionKind fusion_from_string(std::string_view s);

// Max-subtracted softmax.
Vec softmax(std::span<const double> logits);

struct SelfAttentionParams {
  DenseLayer query;
  DenseLayer key;
  DenseLayer value;

  static SelfAttentionParams init(std::size_t dim, Rng& rng);
};

struct GatedFusionParams {
  Mlp gate;  // (k*D) -> D tanh -> k logits

  static GatedFusionParams init(std::size_t dim, std::size_t num_tokens, Rng& rng);
};

/// Parameters for one fusion variant over a fixed number of present cues.
struct FusionParams {
  FusionKind kind = FusionKind::gated;
  std::size_t dim = 0;
  std::size_t num_tokens = 3;
  SelfAttentionParams attention;  // used by self_attention
  GatedFusionParams gated;        // used by gated

  static FusionParams init(FusionKind kind, std::size_t dim, std::size_t num_tokens, Rng& rng);
  std::size_t output_dim() const { return kind == FusionKind::concat ? dim * num_tokens : dim; }
};

struct FusionGrad {
  LayerGrad query, key, value;
  MlpGrad gate;

  FusionGrad() = default;
  explicit FusionGrad(const FusionParams& p);
  void zero();
};

struct FusionTrace {
  std::vector<Modality> modalities;
  std::vector<Vec> tokens;
  // self-attention
  std::vector<Vec> q, k, v;
  std::vector<Vec> q_pre, k_pre, v_pre;
  std::vector<Vec> attn;  // row i: weights of token i over tokens j
  // gated
  MlpTrace gate;
  Vec weights;
};

FusedFeature fuse(const FusionParams& params, const ModalFeatures& f, FusionTrace* trace = nullptr);

// Gradient with respect to each present token, in trace.modalities order.
std::vector<Vec> fuse_backward(const FusionParams& params, const FusionTrace& trace,
                               std::span<const double> grad_out, FusionGrad& acc);

FusedFeature fuse_concat(const ModalFeatures& f);
FusedFeature fuse_self_attention(const SelfAttentionParams& params, const ModalFeatures& f);
FusedFeature fuse_gated(const GatedFusionParams& params, const ModalFeatures& f);

}  // namespace physmass
