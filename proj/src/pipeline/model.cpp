#include "physmass/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "physmass/errors.hpp"
#include "physmass/layernorm.hpp"

namespace physmass {

std::string CueMask::label() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(image, "image");
  add(density, "density");
  add(volume, "volume");
  return out.empty() ? "none" : out;
}

CueMask CueMask::from_label(const std::string& label) {
  CueMask m{false, false, false};
  std::stringstream ss(label);
  std::string part;
  while (std::getline(ss, part, '+')) {
    if (part == "image") {
      m.image = true;
    } else if (part == "density" || part == "text") {
      m.density = true;
    } else if (part == "volume" || part == "geometry") {
      m.volume = true;
    } else {
      throw ConfigError("unknown cue '" + part + "'");
    }
  }
  if (m.count() == 0) throw ConfigError("at least one cue must be enabled");
  return m;
}

void ModelConfig::validate() const {
  if (cues.count() == 0) throw ConfigError("model: at least one cue must be enabled");
  if (feature_dim < 2) throw ConfigError("model: feature dim must be at least 2");
  if (num_points < 1) throw ConfigError("model: num_points must be at least 1");
  if (head_hidden < 1 || image_hidden < 1 || point_hidden < 1) {
    throw ConfigError("model: hidden widths must be at least 1");
  }
  if (appearance_dim < 1) throw ConfigError("model: appearance dim must be at least 1");
  if (!(volume_unit > 0.0) || !std::isfinite(volume_unit)) {
    throw ConfigError("model: volume unit must be positive");
  }
  if (!std::isfinite(volume_bias_init)) throw ConfigError("model: volume bias init must be finite");
  density.validate();
}

namespace {

// Init stream ids; each component draws from its own stream so that toggling
// a cue leaves every other component's initial weights unchanged.
enum Stream : std::uint64_t { kImage = 1, kPoints, kEmbedding, kFusion, kVolume, kDensity, kDirect };

Rng stream_rng(std::uint64_t seed, Stream s) { return Rng(Rng::derive(seed, s)); }

void add_ln_grad(Vec& acc, const Vec& g) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

}  // namespace

struct MassModel::Trace {
  MlpTrace image_mlp;
  PointEncoderTrace points;
  FusionTrace fusion;
  FusedFeature fused;
  MlpTrace volume;
  MlpTrace density;
};

MassModel::MassModel(const ModelConfig& cfg, std::size_t material_rows) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d = cfg_.feature_dim;
  if (material_rows < 1) throw ConfigError("model: embedding table needs at least one row");

  auto r_img = stream_rng(cfg_.seed, kImage);
  image_mlp_ = make_mlp(cfg_.appearance_dim, {cfg_.image_hidden, d}, Activation::tanh,
                        Activation::identity, r_img);
  image_norm_ = LayerNormParams(d);

  auto r_pts = stream_rng(cfg_.seed, kPoints);
  points_ = PointEncoderParams::init(cfg_.num_points, cfg_.point_hidden, d, r_pts);

  auto r_emb = stream_rng(cfg_.seed, kEmbedding);
  embedding_ = MaterialEmbedding::init(material_rows, d, r_emb);
  text_norm_ = LayerNormParams(d);

  auto r_fus = stream_rng(cfg_.seed, kFusion);
  fusion_ = FusionParams::init(cfg_.fusion, d, cfg_.cues.count(), r_fus);

  const std::size_t fused_dim = fusion_.output_dim();
  auto r_vol = stream_rng(cfg_.seed, kVolume);
  volume_head_ = make_head(fused_dim, cfg_.head_hidden, r_vol);
  volume_head_.layers.back().bias[0] = cfg_.volume_bias_init;
  auto r_den = stream_rng(cfg_.seed, kDensity);
  density_head_ = make_head(fused_dim, cfg_.head_hidden, r_den);

  g_image_mlp_ = MlpGrad(image_mlp_);
  g_image_gain_.assign(d, 0.0);
  g_image_shift_.assign(d, 0.0);
  g_points_ = PointEncoderGrad(points_);
  g_text_gain_.assign(d, 0.0);
  g_text_shift_.assign(d, 0.0);
  g_fusion_ = FusionGrad(fusion_);
  g_volume_ = MlpGrad(volume_head_);
  g_density_ = MlpGrad(density_head_);
}

void MassModel::check_input(const ModelInput& in) const {
  if (cfg_.cues.image) {
    if (in.appearance.size() != cfg_.appearance_dim) {
      throw InputError("appearance vector has " + std::to_string(in.appearance.size()) +
                       " entries, model expects " + std::to_string(cfg_.appearance_dim));
    }
    if (!all_finite(in.appearance)) throw InputError("appearance vector is not finite");
  }
  if (cfg_.cues.volume && in.points.size() != cfg_.num_points) {
    throw InputError("point cloud has " + std::to_string(in.points.size()) +
                     " points, model expects " + std::to_string(cfg_.num_points));
  }
  if (cfg_.cues.density && in.material >= embedding_.table.rows) {
    throw InputError("material id " + std::to_string(in.material) + " outside the embedding table");
  }
}

MassPrediction MassModel::forward(const ModelInput& in, Trace* tr) const {
  check_input(in);
  ModalFeatures f;
  if (cfg_.cues.image) {
    Vec h = mlp_forward(image_mlp_, in.appearance, tr ? &tr->image_mlp : nullptr);
    f.image = layernorm_forward(image_norm_, h);
  }
  if (cfg_.cues.volume) f.geometry = encode_points(points_, in.points, tr ? &tr->points : nullptr);
  if (cfg_.cues.density) f.text = embed_material(embedding_, in.material, text_norm_);

  FusedFeature fused = fuse(fusion_, f, tr ? &tr->fusion : nullptr);
  const double v =
      volume_head(volume_head_, fused.vector, tr ? &tr->volume : nullptr, cfg_.volume_unit);
  const double rho = density_head(density_head_, cfg_.density, fused.vector, tr ? &tr->density : nullptr);
  MassPrediction p = compose_mass(v, rho, cfg_.density);
  p.gate_weights = fused.gate_weights;
  if (tr) tr->fused = std::move(fused);
  return p;
}

MassPrediction MassModel::predict(const ModelInput& in) const { return forward(in, nullptr); }

FusedFeature MassModel::fused_feature(const ModelInput& in) const {
  Trace tr;
  forward(in, &tr);
  return tr.fused;
}

double MassModel::accumulate(const ModelInput& in, double mass) {
  Trace tr;
  const MassPrediction p = forward(in, &tr);
  const LossValue lv = alde_loss(mass, p.mass);
  if (!std::isfinite(lv.loss)) return lv.loss;

  const double g_volume = lv.grad * p.density_factor;
  Vec g_fused;
  if (cfg_.revive_floored_volume && p.volume_factor <= kVolumeFloor && g_volume < 0.0) {
    // Floored and the loss wants more volume: pass the gradient as if on the
    // linear branch so the sample can climb back above the floor.
    const double go[1] = {g_volume * cfg_.volume_unit};
    g_fused = mlp_backward(volume_head_, tr.volume, go, g_volume_);
  } else {
    g_fused = volume_head_backward(volume_head_, tr.volume, g_volume, g_volume_, cfg_.volume_unit);
  }
  const Vec g_den = density_head_backward(density_head_, cfg_.density, tr.density,
                                          lv.grad * p.volume_factor, g_density_);
  for (std::size_t i = 0; i < g_fused.size(); ++i) g_fused[i] += g_den[i];

  const std::vector<Vec> g_tokens = fuse_backward(fusion_, tr.fusion, g_fused, g_fusion_);
  for (std::size_t t = 0; t < g_tokens.size(); ++t) {
    switch (tr.fusion.modalities[t]) {
      case Modality::image: {
        const Vec& h = tr.image_mlp.output;
        const auto ln = layernorm_backward(image_norm_, h, g_tokens[t]);
        add_ln_grad(g_image_gain_, ln.grad_gain);
        add_ln_grad(g_image_shift_, ln.grad_shift);
        mlp_backward(image_mlp_, tr.image_mlp, ln.grad_x, g_image_mlp_);
        break;
      }
      case Modality::geometry:
        encode_points_backward(points_, in.points, tr.points, g_tokens[t], g_points_);
        break;
      case Modality::text: {
        const auto ln = layernorm_backward(text_norm_, embedding_.table.row(in.material), g_tokens[t]);
        add_ln_grad(g_text_gain_, ln.grad_gain);
        add_ln_grad(g_text_shift_, ln.grad_shift);
        break;
      }
    }
  }
  return lv.loss;
}

ParamRegistry MassModel::registry() {
  ParamRegistry r;
  if (cfg_.cues.image) {
    r.add_mlp("image.mlp", image_mlp_, g_image_mlp_);
    r.add_layernorm("image.norm", image_norm_, g_image_gain_, g_image_shift_);
  }
  if (cfg_.cues.volume) {
    r.add_mlp("geometry.point_mlp", points_.point_mlp, g_points_.point_mlp);
    r.add_mlp("geometry.post_mlp", points_.post_mlp, g_points_.post_mlp);
    r.add_layernorm("geometry.norm", points_.norm, g_points_.norm_gain, g_points_.norm_shift);
  }
  if (cfg_.cues.density) {
    r.add_frozen("text.embedding", embedding_.table.data);
    r.add_layernorm("text.norm", text_norm_, g_text_gain_, g_text_shift_);
  }
  if (fusion_.kind == FusionKind::self_attention) {
    r.add_dense("fusion.query", fusion_.attention.query, g_fusion_.query);
    r.add_dense("fusion.key", fusion_.attention.key, g_fusion_.key);
    r.add_dense("fusion.value", fusion_.attention.value, g_fusion_.value);
  } else if (fusion_.kind == FusionKind::gated) {
    r.add_mlp("fusion.gate", fusion_.gated.gate, g_fusion_.gate);
  }
  r.add_mlp("head.volume", volume_head_, g_volume_);
  r.add_mlp("head.density", density_head_, g_density_);
  return r;
}

std::uint64_t MassModel::embedding_checksum() const { return checksum(embedding_.table.data); }

Checkpoint MassModel::to_checkpoint() const {
  Checkpoint c;
  auto& h = c.header;
  h.dims = {{"model_kind", 0},
            {"feature_dim", cfg_.feature_dim},
            {"num_points", cfg_.num_points},
            {"head_hidden", cfg_.head_hidden},
            {"appearance_dim", cfg_.appearance_dim},
            {"image_hidden", cfg_.image_hidden},
            {"point_hidden", cfg_.point_hidden},
            {"material_rows", embedding_.table.rows},
            {"cue_image", cfg_.cues.image},
            {"cue_density", cfg_.cues.density},
            {"cue_volume", cfg_.cues.volume}};
  h.reals = {{"rho_min", cfg_.density.rho_min},
             {"rho_max", cfg_.density.rho_max},
             {"volume_unit", cfg_.volume_unit},
             {"revive_floored_volume", cfg_.revive_floored_volume ? 1.0 : 0.0},
             {"volume_bias_init", cfg_.volume_bias_init}};
  h.fusion = std::string(to_string(cfg_.fusion));
  h.seed = cfg_.seed;
  // The registry only views the parameters; nothing is written through it.
  auto& self = const_cast<MassModel&>(*this);
  const ParamRegistry reg = self.registry();
  for (const auto& e : reg.entries()) {
    c.arrays.push_back({e.name, Vec(e.value.begin(), e.value.end())});
  }
  return c;
}

namespace {

void load_arrays(ParamRegistry reg, const Checkpoint& ckpt) {
  for (auto& e : reg.entries()) {
    const auto& a = ckpt.array(e.name);
    if (a.data.size() != e.value.size()) {
      throw FormatError("checkpoint array '" + e.name + "' has " + std::to_string(a.data.size()) +
                        " values, expected " + std::to_string(e.value.size()));
    }
    std::copy(a.data.begin(), a.data.end(), e.value.begin());
  }
  if (ckpt.arrays.size() != reg.entries().size()) {
    throw FormatError("checkpoint holds arrays the model does not use");
  }
}

}  // namespace

MassModel MassModel::from_checkpoint(const Checkpoint& ckpt) {
  if (checkpoint_model_kind(ckpt) != "factored") throw FormatError("checkpoint is not a factored model");
  const auto& h = ckpt.header;
  ModelConfig cfg;
  cfg.feature_dim = h.dim("feature_dim");
  cfg.num_points = h.dim("num_points");
  cfg.head_hidden = h.dim("head_hidden");
  cfg.appearance_dim = h.dim("appearance_dim");
  cfg.image_hidden = h.dim("image_hidden");
  cfg.point_hidden = h.dim("point_hidden");
  cfg.cues = {h.dim("cue_image") != 0, h.dim("cue_density") != 0, h.dim("cue_volume") != 0};
  cfg.density = {h.real("rho_min"), h.real("rho_max")};
  cfg.volume_unit = h.real("volume_unit");
  cfg.revive_floored_volume = h.real("revive_floored_volume") != 0.0;
  cfg.volume_bias_init = h.real("volume_bias_init");
  cfg.fusion = fusion_from_string(h.fusion);
  cfg.seed = h.seed;
  MassModel m(cfg, h.dim("material_rows"));
  load_arrays(m.registry(), ckpt);
  return m;
}

DirectRegressor::DirectRegressor(std::size_t appearance_dim, std::size_t hidden, std::uint64_t seed)
    : seed_(seed) {
  if (appearance_dim < 1 || hidden < 1) throw ConfigError("direct baseline: dims must be at least 1");
  auto rng = stream_rng(seed, kDirect);
  mlp_ = make_mlp(appearance_dim, {hidden, hidden, 1}, Activation::relu, Activation::softplus, rng);
  grad_ = MlpGrad(mlp_);
}

double DirectRegressor::predict(const ModelInput& in) const {
  if (in.appearance.size() != mlp_.in_dim()) throw InputError("direct baseline: appearance length");
  return std::max(mlp_forward(mlp_, in.appearance)[0], kMassFloor);
}

double DirectRegressor::accumulate(const ModelInput& in, double mass) {
  if (in.appearance.size() != mlp_.in_dim()) throw InputError("direct baseline: appearance length");
  MlpTrace tr;
  const double raw = mlp_forward(mlp_, in.appearance, &tr)[0];
  const double m_hat = std::max(raw, kMassFloor);
  const LossValue lv = alde_loss(mass, m_hat);
  if (!std::isfinite(lv.loss)) return lv.loss;
  const double g = raw > kMassFloor ? lv.grad : 0.0;
  const Vec go{g};
  mlp_backward(mlp_, tr, go, grad_);
  return lv.loss;
}

ParamRegistry DirectRegressor::registry() {
  ParamRegistry r;
  r.add_mlp("direct.mlp", mlp_, grad_);
  return r;
}

Checkpoint DirectRegressor::to_checkpoint() const {
  Checkpoint c;
  c.header.dims = {{"model_kind", 1}, {"appearance_dim", mlp_.in_dim()},
                   {"hidden", mlp_.layers.front().out_dim()}};
  c.header.fusion = "none";
  c.header.seed = seed_;
  auto& self = const_cast<DirectRegressor&>(*this);
  const ParamRegistry reg = self.registry();
  for (const auto& e : reg.entries()) {
    c.arrays.push_back({e.name, Vec(e.value.begin(), e.value.end())});
  }
  return c;
}

DirectRegressor DirectRegressor::from_checkpoint(const Checkpoint& ckpt) {
  if (checkpoint_model_kind(ckpt) != "direct") throw FormatError("checkpoint is not a direct baseline");
  DirectRegressor d(ckpt.header.dim("appearance_dim"), ckpt.header.dim("hidden"), ckpt.header.seed);
  load_arrays(d.registry(), ckpt);
  return d;
}

std::string checkpoint_model_kind(const Checkpoint& ckpt) {
  const auto k = ckpt.header.dim("model_kind");
  if (k == 0) return "factored";
  if (k == 1) return "direct";
  throw FormatError("unknown model kind " + std::to_string(k));
}

}  // namespace physmass
