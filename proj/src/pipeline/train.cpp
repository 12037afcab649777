#include "physmass/train.hpp"

#include <chrono>
#include <cmath>
#include <json.hpp>

#include "physmass/adam.hpp"
#include "physmass/errors.hpp"

namespace physmass {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be at least 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train: learning rate must be >= 0");
  if (batch_size < 1) throw ConfigError("train: batch size must be at least 1");
}

std::vector<std::size_t> PreparedData::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == s) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> PreparedData::test_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split != Split::train) out.push_back(i);
  }
  return out;
}

PointCloud geometry_cue(const DepthMap& depth, double footprint, std::size_t num_points,
                        std::uint64_t seed) {
  const DepthMap nd = normalize_depth(depth, mask_bbox(depth));
  const PointCloud full = unproject(nd, OrthographicCamera{footprint}, true);
  return sample_points(full, num_points, seed);
}

PreparedData prepare_data(const Dataset& ds, std::size_t num_points, std::uint64_t seed) {
  if (num_points < 1) throw ConfigError("prepare_data: num_points must be at least 1");
  PreparedData out;
  out.vocab = ds.vocab;
  out.num_points = num_points;
  out.samples.reserve(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const Sample& s = ds.samples[i];
    PreparedSample p;
    p.id = s.id;
    p.category = s.category;
    p.split = s.split;
    p.mass = s.mass;
    p.input.appearance = s.appearance;
    p.input.points = geometry_cue(s.depth, s.footprint, num_points, Rng::derive(seed, i));
    p.input.material = parse_material(s.material_text, ds.vocab);
    p.volume_proxy = cloud_volume_proxy(unproject(s.depth, OrthographicCamera{s.footprint}, false),
                                        s.footprint);
    out.samples.push_back(std::move(p));
  }
  return out;
}

std::vector<PredictionRecord> predict_samples(const MassModel& model, const PreparedData& data,
                                              const std::vector<std::size_t>& indices) {
  std::vector<PredictionRecord> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto& s = data.samples.at(i);
    const MassPrediction p = model.predict(s.input);
    out.push_back({s.id, s.category, s.split, s.mass, p.volume_factor, p.density_factor, p.mass,
                   p.gate_weights});
  }
  return out;
}

std::vector<PredictionRecord> predict_samples(const DirectRegressor& model, const PreparedData& data,
                                              const std::vector<std::size_t>& indices) {
  std::vector<PredictionRecord> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto& s = data.samples.at(i);
    out.push_back({s.id, s.category, s.split, s.mass, 0.0, 0.0, model.predict(s.input), std::nullopt});
  }
  return out;
}

std::vector<EvalPair> to_pairs(const std::vector<PredictionRecord>& records) {
  std::vector<EvalPair> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back({r.id, r.mass, r.mass_hat, r.category, r.split != Split::test_unseen});
  }
  return out;
}

namespace {

template <class Model>
std::vector<double> fit_impl(Model& model, const PreparedData& data, const TrainConfig& tc) {
  tc.validate();
  std::vector<std::size_t> order = data.train_indices();
  if (order.empty()) throw InputError("train: empty train split");
  ParamRegistry reg = model.registry();
  AdamOptimizer opt(reg, tc.lr);
  reg.zero_grad();

  std::vector<double> epoch_loss;
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    Rng rng(Rng::derive(tc.shuffle_seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double total = 0.0;
    std::size_t pending = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& s = data.samples[order[k]];
      double loss = 0.0;
      try {
        loss = model.accumulate(s.input, s.mass);
      } catch (const ContractError& err) {
        // Bounded activations only leave their range on NaN.
        throw NumericError("non-finite prediction at epoch " + std::to_string(epoch) + ", sample " +
                           s.id + ": " + err.what());
      }
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", sample " + s.id);
      }
      total += loss;
      if (++pending == tc.batch_size || k + 1 == order.size()) {
        if (pending > 1) {
          const double inv = 1.0 / static_cast<double>(pending);
          for (auto& e : reg.entries()) {
            for (double& g : e.grad) g *= inv;
          }
        }
        try {
          opt.step(reg);
        } catch (const NumericError& err) {
          throw NumericError(std::string(err.what()) + " at epoch " + std::to_string(epoch) +
                             ", sample " + s.id);
        }
        reg.zero_grad();
        pending = 0;
      }
    }
    epoch_loss.push_back(total / static_cast<double>(order.size()));
  }
  return epoch_loss;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<double> fit(MassModel& model, const PreparedData& data, const TrainConfig& tc) {
  return fit_impl(model, data, tc);
}

std::vector<double> fit(DirectRegressor& model, const PreparedData& data, const TrainConfig& tc) {
  return fit_impl(model, data, tc);
}

std::string config_json(const ModelConfig& mc, const TrainConfig& tc) {
  nlohmann::ordered_json j;
  j["model"] = {{"feature_dim", mc.feature_dim},
                {"fusion", std::string(to_string(mc.fusion))},
                {"cues", mc.cues.label()},
                {"num_points", mc.num_points},
                {"rho_min", mc.density.rho_min},
                {"rho_max", mc.density.rho_max},
                {"head_hidden", mc.head_hidden},
                {"appearance_dim", mc.appearance_dim},
                {"image_hidden", mc.image_hidden},
                {"point_hidden", mc.point_hidden},
                {"volume_unit", mc.volume_unit},
                {"volume_bias_init", mc.volume_bias_init},
                {"revive_floored_volume", mc.revive_floored_volume},
                {"seed", mc.seed}};
  j["train"] = {{"epochs", tc.epochs},
                {"lr", tc.lr},
                {"batch_size", tc.batch_size},
                {"shuffle_seed", tc.shuffle_seed}};
  return j.dump();
}

RunRecord train(MassModel& model, const PreparedData& data, const TrainConfig& tc) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord r;
  r.name = model.config().cues.label();
  r.config_json = config_json(model.config(), tc);
  r.epoch_loss = fit(model, data, tc);
  r.train_report = aggregate(to_pairs(predict_samples(model, data, data.train_indices())));
  r.test_predictions = predict_samples(model, data, data.test_indices());
  r.test_report = aggregate(to_pairs(r.test_predictions), Stratify::seen_unseen);
  r.wall_clock_s = seconds_since(t0);
  return r;
}

RunRecord run_baseline_direct(const PreparedData& data, const TrainConfig& tc, std::uint64_t seed,
                              DirectRegressor* out_model) {
  const auto t0 = std::chrono::steady_clock::now();
  if (data.samples.empty()) throw InputError("direct baseline: no samples");
  const std::size_t a = data.samples.front().input.appearance.size();
  DirectRegressor model(a, 64, seed);
  RunRecord r;
  r.name = "direct";
  nlohmann::ordered_json j;
  j["model"] = {{"kind", "direct"}, {"appearance_dim", a}, {"hidden", 64}, {"seed", seed}};
  j["train"] = nlohmann::ordered_json::parse(config_json(ModelConfig{}, tc))["train"];
  r.config_json = j.dump();
  r.epoch_loss = fit(model, data, tc);
  r.train_report = aggregate(to_pairs(predict_samples(model, data, data.train_indices())));
  r.test_predictions = predict_samples(model, data, data.test_indices());
  r.test_report = aggregate(to_pairs(r.test_predictions), Stratify::seen_unseen);
  r.wall_clock_s = seconds_since(t0);
  if (out_model) *out_model = std::move(model);
  return r;
}

}  // namespace physmass
