#include "physmass/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "physmass/errors.hpp"

namespace physmass {

const std::optional<Vec>& ModalFeatures::get(Modality m) const {
  switch (m) {
    case Modality::image: return image;
    case Modality::geometry: return geometry;
    case Modality::text: return text;
  }
  return image;
}

std::optional<Vec>& ModalFeatures::get(Modality m) {
  return const_cast<std::optional<Vec>&>(std::as_const(*this).get(m));
}

std::vector<Modality> ModalFeatures::present() const {
  std::vector<Modality> out;
  for (Modality m : {Modality::image, Modality::geometry, Modality::text}) {
    if (get(m)) out.push_back(m);
  }
  return out;
}

std::size_t ModalFeatures::dim() const {
  std::size_t d = 0;
  for (Modality m : present()) {
    const auto n = get(m)->size();
    if (d == 0) {
      d = n;
    } else if (n != d) {
      throw DimensionError("modal features disagree on width: " + std::to_string(d) + " vs " +
                           std::to_string(n));
    }
  }
  if (d == 0) throw DimensionError("modal features: no present cue");
  return d;
}

std::string_view to_string(FusionKind k) {
  switch (k) {
    case FusionKind::concat: return "concat";
    case FusionKind::self_attention: return "self_attn";
    case FusionKind::gated: return "gated";
  }
  return "gated";
}

FusionKind fusion_from_string(std::string_view s) {
  if (s == "concat") return FusionKind::concat;
  if (s == "self_attn" || s == "self_attention") return FusionKind::self_attention;
  if (s == "gated") return FusionKind::gated;
  throw ConfigError("unknown fusion variant '" + std::string(s) + "'");
}

Vec softmax(std::span<const double> logits) {
  if (logits.empty()) throw DimensionError("softmax of an empty vector");
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vec w(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    w[i] = std::exp(logits[i] - mx);
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

SelfAttentionParams SelfAttentionParams::init(std::size_t dim, Rng& rng) {
  return {DenseLayer::glorot(dim, dim, Activation::identity, rng),
          DenseLayer::glorot(dim, dim, Activation::identity, rng),
          DenseLayer::glorot(dim, dim, Activation::identity, rng)};
}

GatedFusionParams GatedFusionParams::init(std::size_t dim, std::size_t num_tokens, Rng& rng) {
  return {make_mlp(dim * num_tokens, {dim, num_tokens}, Activation::tanh, Activation::identity, rng)};
}

FusionParams FusionParams::init(FusionKind kind, std::size_t dim, std::size_t num_tokens, Rng& rng) {
  if (dim < 2) throw DimensionError("fusion: feature dim must be at least 2");
  if (num_tokens < 1 || num_tokens > kNumModalities) {
    throw DimensionError("fusion: between 1 and 3 cues required");
  }
  FusionParams p;
  p.kind = kind;
  p.dim = dim;
  p.num_tokens = num_tokens;
  if (kind == FusionKind::self_attention) p.attention = SelfAttentionParams::init(dim, rng);
  if (kind == FusionKind::gated) p.gated = GatedFusionParams::init(dim, num_tokens, rng);
  return p;
}

FusionGrad::FusionGrad(const FusionParams& p) {
  if (p.kind == FusionKind::self_attention) {
    query = LayerGrad(p.attention.query);
    key = LayerGrad(p.attention.key);
    value = LayerGrad(p.attention.value);
  }
  if (p.kind == FusionKind::gated) gate = MlpGrad(p.gated.gate);
}

void FusionGrad::zero() {
  query.zero();
  key.zero();
  value.zero();
  gate.zero();
}

namespace {

void check_tokens(const FusionParams& p, const ModalFeatures& f, std::vector<Modality>& mods,
                  std::vector<Vec>& tokens) {
  mods = f.present();
  const std::size_t d = f.dim();
  if (d != p.dim) {
    throw DimensionError("fusion: features have width " + std::to_string(d) + ", expected " +
                         std::to_string(p.dim));
  }
  if (mods.size() != p.num_tokens) {
    throw DimensionError("fusion: configured for " + std::to_string(p.num_tokens) + " cues, got " +
                         std::to_string(mods.size()));
  }
  tokens.clear();
  for (Modality m : mods) tokens.push_back(*f.get(m));
}

FusedFeature concat_forward(const std::vector<Vec>& tokens) {
  FusedFeature out;
  for (const auto& t : tokens) out.vector.insert(out.vector.end(), t.begin(), t.end());
  return out;
}

FusedFeature attention_forward(const SelfAttentionParams& p, const std::vector<Vec>& tokens,
                               FusionTrace& tr) {
  const std::size_t k = tokens.size();
  const std::size_t d = tokens.front().size();
  tr.q.clear(), tr.k.clear(), tr.v.clear(), tr.q_pre.clear(), tr.k_pre.clear(), tr.v_pre.clear();
  tr.attn.assign(k, Vec(k, 0.0));
  for (const auto& x : tokens) {
    tr.q_pre.push_back(dense_preactivation(p.query, x));
    tr.k_pre.push_back(dense_preactivation(p.key, x));
    tr.v_pre.push_back(dense_preactivation(p.value, x));
    tr.q.push_back(dense_forward(p.query, x));
    tr.k.push_back(dense_forward(p.key, x));
    tr.v.push_back(dense_forward(p.value, x));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  FusedFeature out;
  out.vector.assign(d, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    Vec s(k);
    for (std::size_t j = 0; j < k; ++j) s[j] = dot(tr.q[i], tr.k[j]) * scale;
    tr.attn[i] = softmax(s);
    for (std::size_t j = 0; j < k; ++j) {
      const double a = tr.attn[i][j] / static_cast<double>(k);
      for (std::size_t c = 0; c < d; ++c) out.vector[c] += a * tr.v[j][c];
    }
  }
  return out;
}

FusedFeature gated_forward(const GatedFusionParams& p, const std::vector<Modality>& mods,
                           const std::vector<Vec>& tokens, FusionTrace& tr) {
  Vec z;
  for (const auto& t : tokens) z.insert(z.end(), t.begin(), t.end());
  const Vec logits = mlp_forward(p.gate, z, &tr.gate);
  tr.weights = softmax(logits);
  FusedFeature out;
  out.vector.assign(tokens.front().size(), 0.0);
  std::array<double, 3> w3{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    w3[static_cast<int>(mods[i])] = tr.weights[i];
    for (std::size_t c = 0; c < out.vector.size(); ++c) out.vector[c] += tr.weights[i] * tokens[i][c];
  }
  out.gate_weights = w3;
  return out;
}

}  // namespace

FusedFeature fuse(const FusionParams& params, const ModalFeatures& f, FusionTrace* trace) {
  FusionTrace local;
  FusionTrace& tr = trace ? *trace : local;
  check_tokens(params, f, tr.modalities, tr.tokens);
  switch (params.kind) {
    case FusionKind::concat: return concat_forward(tr.tokens);
    case FusionKind::self_attention: return attention_forward(params.attention, tr.tokens, tr);
    case FusionKind::gated: return gated_forward(params.gated, tr.modalities, tr.tokens, tr);
  }
  return {};
}

std::vector<Vec> fuse_backward(const FusionParams& params, const FusionTrace& tr,
                               std::span<const double> grad_out, FusionGrad& acc) {
  const std::size_t k = tr.tokens.size();
  const std::size_t d = params.dim;
  if (grad_out.size() != params.output_dim()) throw DimensionError("fuse_backward: grad_out length");
  std::vector<Vec> grads(k, Vec(d, 0.0));

  if (params.kind == FusionKind::concat) {
    for (std::size_t i = 0; i < k; ++i) {
      std::copy_n(grad_out.begin() + static_cast<std::ptrdiff_t>(i * d), d, grads[i].begin());
    }
    return grads;
  }

  if (params.kind == FusionKind::gated) {
    Vec dw(k);
    for (std::size_t i = 0; i < k; ++i) dw[i] = dot(grad_out, tr.tokens[i]);
    double wdw = 0.0;
    for (std::size_t i = 0; i < k; ++i) wdw += tr.weights[i] * dw[i];
    Vec dlogits(k);
    for (std::size_t i = 0; i < k; ++i) dlogits[i] = tr.weights[i] * (dw[i] - wdw);
    const Vec dz = mlp_backward(params.gated.gate, tr.gate, dlogits, acc.gate);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t c = 0; c < d; ++c) grads[i][c] = tr.weights[i] * grad_out[c] + dz[i * d + c];
    }
    return grads;
  }

  // self-attention
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const double inv_k = 1.0 / static_cast<double>(k);
  std::vector<Vec> dq(k, Vec(d, 0.0)), dkey(k, Vec(d, 0.0)), dv(k, Vec(d, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    Vec da(k);
    for (std::size_t j = 0; j < k; ++j) da[j] = dot(grad_out, tr.v[j]) * inv_k;
    double ada = 0.0;
    for (std::size_t j = 0; j < k; ++j) ada += tr.attn[i][j] * da[j];
    for (std::size_t j = 0; j < k; ++j) {
      const double a = tr.attn[i][j];
      for (std::size_t c = 0; c < d; ++c) dv[j][c] += a * grad_out[c] * inv_k;
      const double ds = a * (da[j] - ada) * scale;
      for (std::size_t c = 0; c < d; ++c) {
        dq[i][c] += ds * tr.k[j][c];
        dkey[j][c] += ds * tr.q[i][c];
      }
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    const Vec gq = dense_backward_accumulate(params.attention.query, tr.tokens[i], tr.q_pre[i], dq[i], acc.query);
    const Vec gk = dense_backward_accumulate(params.attention.key, tr.tokens[i], tr.k_pre[i], dkey[i], acc.key);
    const Vec gv = dense_backward_accumulate(params.attention.value, tr.tokens[i], tr.v_pre[i], dv[i], acc.value);
    for (std::size_t c = 0; c < d; ++c) grads[i][c] = gq[c] + gk[c] + gv[c];
  }
  return grads;
}

FusedFeature fuse_concat(const ModalFeatures& f) {
  FusionParams p;
  p.kind = FusionKind::concat;
  p.dim = f.dim();
  p.num_tokens = f.present().size();
  return fuse(p, f);
}

FusedFeature fuse_self_attention(const SelfAttentionParams& params, const ModalFeatures& f) {
  FusionParams p;
  p.kind = FusionKind::self_attention;
  p.dim = params.query.in_dim();
  p.num_tokens = f.present().size();
  p.attention = params;
  return fuse(p, f);
}

FusedFeature fuse_gated(const GatedFusionParams& params, const ModalFeatures& f) {
  FusionParams p;
  p.kind = FusionKind::gated;
  p.dim = f.dim();
  p.num_tokens = params.gate.out_dim();
  p.gated = params;
  return fuse(p, f);
}

}  // namespace physmass
