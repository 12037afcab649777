#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>
#include <set>
#include <sstream>

#include "physmass/config.hpp"
#include "physmass/errors.hpp"
#include "physmass/experiments.hpp"
#include "physmass/reports.hpp"
#include "physmass/train.hpp"
#include "support/gradient_cases.hpp"

using namespace physmass;

namespace {

GeneratorConfig tiny_generator() {
  GeneratorConfig g;
  g.train_count = 24;
  g.test_count = 12;
  g.render.resolution = 32;
  g.render.footprint = 0.5 / 32.0 * 1.05;
  return g;
}

const PreparedData& tiny_data() {
  static const PreparedData data = [] {
    const auto ds = generate_dataset(tiny_generator(), MaterialVocab::default_vocab(), 1);
    return prepare_data(ds, 16, 1);
  }();
  return data;
}

ModelConfig tiny_model(CueMask cues = {}, FusionKind kind = FusionKind::gated) {
  ModelConfig mc;
  mc.feature_dim = 8;
  mc.num_points = 16;
  mc.head_hidden = 8;
  mc.image_hidden = 8;
  mc.point_hidden = 8;
  mc.cues = cues;
  mc.fusion = kind;
  return mc;
}

std::vector<double> snapshot(ParamRegistry reg) {
  std::vector<double> out;
  for (const auto& e : reg.entries()) out.insert(out.end(), e.value.begin(), e.value.end());
  return out;
}

PreparedSample rule_sample(const std::string& id, MaterialId material, double proxy, double mass) {
  PreparedSample s;
  s.id = id;
  s.category = "box/x";
  s.split = Split::test_seen;
  s.mass = mass;
  s.input.material = material;
  s.volume_proxy = proxy;
  return s;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("mass is the product of the two factors") {
  const auto& data = tiny_data();
  MassModel model(tiny_model(), data.vocab.embedding_rows());
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto p = model.predict(data.samples[i].input);
    CHECK(p.mass == p.volume_factor * p.density_factor);
    CHECK(p.volume_factor >= kVolumeFloor);
    CHECK(p.density_factor >= 50.0);
    CHECK(p.density_factor <= 20000.0);
    REQUIRE(p.gate_weights.has_value());
    CHECK(std::fabs((*p.gate_weights)[0] + (*p.gate_weights)[1] + (*p.gate_weights)[2] - 1.0) < 1e-9);
  }
  // Initial volume sits at bias_init * unit before any training.
  const auto p0 = model.predict(data.samples[0].input);
  CHECK(p0.volume_factor > 0.0);
}

TEST_CASE("single-cue models pass the cue feature straight through") {
  const auto& data = tiny_data();
  const CueMask geometry_only{false, false, true};
  const auto& in = data.samples[0].input;
  MassModel gated(tiny_model(geometry_only, FusionKind::gated), data.vocab.embedding_rows());
  const auto fg = gated.fused_feature(in);
  CHECK(fg.vector.size() == 8);
  REQUIRE(fg.gate_weights.has_value());
  CHECK(*fg.gate_weights == std::array<double, 3>{0.0, 1.0, 0.0});

  // The point encoder is built before fusion, so with the same seed both
  // fusion kinds see the same geometry feature and return it unchanged.
  MassModel concat(tiny_model(geometry_only, FusionKind::concat), data.vocab.embedding_rows());
  CHECK(concat.fused_feature(in).vector == fg.vector);
  CHECK(std::fabs(std::accumulate(fg.vector.begin(), fg.vector.end(), 0.0)) < 1e-9);
}

TEST_CASE("prediction validates its input") {
  const auto& data = tiny_data();
  MassModel model(tiny_model(), data.vocab.embedding_rows());
  ModelInput in = data.samples[0].input;
  in.points.points.pop_back();
  CHECK_THROWS_AS(model.predict(in), InputError);
  in = data.samples[0].input;
  in.appearance.push_back(1.0);
  CHECK_THROWS_AS(model.predict(in), InputError);
  in = data.samples[0].input;
  in.appearance[0] = std::nan("");
  CHECK_THROWS_AS(model.predict(in), InputError);
  in = data.samples[0].input;
  in.material = data.vocab.embedding_rows();
  CHECK_THROWS_AS(model.predict(in), InputError);

  // Disabled cues are ignored.
  MassModel text_only(tiny_model({false, true, false}), data.vocab.embedding_rows());
  ModelInput bare;
  bare.material = data.samples[0].input.material;
  CHECK_NOTHROW(text_only.predict(bare));
  CHECK_THROWS_AS((MassModel(tiny_model({false, false, false}), 5)), ConfigError);
}

TEST_CASE("predictions are deterministic in the seed") {
  const auto& data = tiny_data();
  MassModel a(tiny_model(), data.vocab.embedding_rows()), b(tiny_model(), data.vocab.embedding_rows());
  auto cfg = tiny_model();
  cfg.seed = 9;
  MassModel c(cfg, data.vocab.embedding_rows());
  const auto& in = data.samples[3].input;
  CHECK(a.predict(in).mass == b.predict(in).mass);
  CHECK(a.predict(in).mass != c.predict(in).mass);
  CHECK(a.embedding_checksum() == b.embedding_checksum());
}

TEST_CASE("checkpoint round trip reproduces predictions bit for bit") {
  const auto& data = tiny_data();
  MassModel model(tiny_model(), data.vocab.embedding_rows());
  TrainConfig tc;
  tc.epochs = 1;
  tc.lr = 1e-3;
  fit(model, data, tc);
  const auto ck = model.to_checkpoint();
  CHECK(checkpoint_model_kind(ck) == "factored");
  std::stringstream buf;
  write_checkpoint(buf, ck);
  const auto back = MassModel::from_checkpoint(read_checkpoint(buf));
  CHECK(back.config().cues == model.config().cues);
  CHECK(back.embedding_checksum() == model.embedding_checksum());
  for (const auto& s : data.samples) {
    const auto p = model.predict(s.input), q = back.predict(s.input);
    CHECK(std::memcmp(&p.mass, &q.mass, sizeof(double)) == 0);
  }

  DirectRegressor direct(kAppearanceDim, 8, 4);
  fit(direct, data, tc);
  const auto dck = direct.to_checkpoint();
  CHECK(checkpoint_model_kind(dck) == "direct");
  const auto dback = DirectRegressor::from_checkpoint(dck);
  for (const auto& s : data.samples) CHECK(direct.predict(s.input) == dback.predict(s.input));
  CHECK_THROWS_AS(MassModel::from_checkpoint(dck), FormatError);
}

TEST_CASE("end-to-end gradients match finite differences") {
  for (auto kind : {FusionKind::gated, FusionKind::self_attention, FusionKind::concat})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      CAPTURE(to_string(kind));
      CAPTURE(seed);
      CHECK(physmass::testing::model_case(seed, kind) < 1e-4);
    }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    CHECK(physmass::testing::direct_case(seed) < 1e-4);
  }
}

TEST_CASE("direct regressor output stays positive") {
  const auto& data = tiny_data();
  DirectRegressor d(kAppearanceDim, 8, 0);
  for (const auto& s : data.samples) CHECK(d.predict(s.input) >= DirectRegressor::kMassFloor);
  auto reg = d.registry();
  for (auto& e : reg.entries())
    if (e.name.ends_with("bias")) std::fill(e.value.begin(), e.value.end(), -1e3);
  for (const auto& s : data.samples) CHECK(d.predict(s.input) == DirectRegressor::kMassFloor);
}

TEST_CASE("training with a zero learning rate changes nothing") {
  const auto& data = tiny_data();
  MassModel model(tiny_model(), data.vocab.embedding_rows());
  const auto before = snapshot(model.registry());
  const auto checksum = model.embedding_checksum();
  TrainConfig tc;
  tc.epochs = 2;
  tc.lr = 0.0;
  const auto losses = fit(model, data, tc);
  CHECK(snapshot(model.registry()) == before);
  CHECK(model.embedding_checksum() == checksum);
  REQUIRE(losses.size() == 2);
  CHECK(losses[0] == doctest::Approx(losses[1]).epsilon(1e-12));
}

TEST_CASE("training lowers the loss and leaves the embedding frozen") {
  const auto& data = tiny_data();
  MassModel model(tiny_model(), data.vocab.embedding_rows());
  const auto checksum = model.embedding_checksum();
  TrainConfig tc;
  tc.epochs = 6;
  tc.lr = 3e-3;
  const auto losses = fit(model, data, tc);
  REQUIRE(losses.size() == 6);
  CHECK(losses.back() < losses.front());
  CHECK(model.embedding_checksum() == checksum);

  auto reg = model.registry();
  bool frozen = false;
  for (const auto& e : reg.entries()) frozen = frozen || e.frozen;
  CHECK(frozen);
}

TEST_CASE("training config validation and non-finite losses") {
  const auto& data = tiny_data();
  TrainConfig tc;
  tc.epochs = 0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = TrainConfig{};
  tc.lr = -1.0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);

  MassModel model(tiny_model(), data.vocab.embedding_rows());
  auto reg = model.registry();
  for (auto& e : reg.entries())
    if (!e.frozen) e.value[0] = std::nan("");
  tc = TrainConfig{};
  tc.epochs = 1;
  try {
    fit(model, data, tc);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 0") != std::string::npos);
    CHECK(msg.find("sample s0") != std::string::npos);
  }
}

TEST_CASE("rule-based baseline") {
  const auto vocab = MaterialVocab::default_vocab();
  PreparedData data;
  data.vocab = vocab;
  const MaterialId steel = vocab.id_of("steel");
  const double mid = 0.5 * (vocab.entry(steel).rho_lo + vocab.entry(steel).rho_hi);
  data.samples.push_back(rule_sample("a", steel, 0.01, 0.01 * mid));
  data.samples.push_back(rule_sample("b", steel, 0.01, 0.3 * 0.01 * mid));
  data.samples.push_back(rule_sample("c", vocab.unknown_id(), 0.01, 1.0));
  const auto r = run_baseline_rulebased(data);
  CHECK(r.unknown_excluded == 1);
  CHECK(r.volume_source == "oracle");
  REQUIRE(r.predictions.size() == 2);
  CHECK(r.predictions[0].mass_hat == doctest::Approx(r.predictions[0].mass).epsilon(1e-14));
  // A fill ratio of 0.3 is invisible to the proxy, so the estimate runs 1/0.3 high.
  CHECK(r.predictions[1].mass_hat / r.predictions[1].mass == doctest::Approx(1.0 / 0.3).epsilon(1e-12));
  CHECK(r.report.count == 2);
  CHECK(r.report.alde == doctest::Approx(0.5 * std::log(1.0 / 0.3)).epsilon(1e-12));

  MassModel image_only(tiny_model({true, false, false}), vocab.embedding_rows());
  CHECK_THROWS_AS(run_baseline_rulebased(data, &image_only), ConfigError);
}

TEST_CASE("density floor oracle") {
  CHECK(density_floor_oracle({{0, 1.0}, {0, std::exp(2.0)}}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(density_floor_oracle({{0, 3.0}, {0, 3.0}, {1, 7.0}}) == 0.0);
  CHECK_THROWS_AS(density_floor_oracle(std::vector<MaterialMass>{}), DomainError);
  // Odd count: the median sample contributes zero.
  const double expect = (std::log(4.0) + std::log(4.0)) / 3.0;
  CHECK(density_floor_oracle({{2, 1.0}, {2, 4.0}, {2, 16.0}}) == doctest::Approx(expect).epsilon(1e-14));
  // No per-material constant does better than the oracle.
  Rng rng(3);
  std::vector<MaterialMass> ms;
  for (int i = 0; i < 40; ++i) ms.push_back({static_cast<MaterialId>(rng.below(3)), rng.log_uniform(0.1, 10.0)});
  const double floor = density_floor_oracle(ms);
  for (int trial = 0; trial < 100; ++trial) {
    const double c[3] = {rng.log_uniform(0.1, 10.0), rng.log_uniform(0.1, 10.0), rng.log_uniform(0.1, 10.0)};
    double s = 0.0;
    for (const auto& m : ms) s += std::fabs(std::log(m.mass) - std::log(c[m.material]));
    CHECK(s / static_cast<double>(ms.size()) >= floor - 1e-12);
  }
}

TEST_CASE("ablation grid") {
  const auto subsets = ablation_subsets();
  REQUIRE(subsets.size() == 7);
  CHECK(subsets.back() == CueMask{});
  for (std::size_t i = 0; i < 3; ++i) CHECK(subsets[i].count() == 1);
  std::set<std::string> labels;
  for (const auto& s : subsets) labels.insert(s.label());
  CHECK(labels.size() == 7);
  for (const auto& s : subsets) CHECK(CueMask::from_label(s.label()) == s);

  TrainConfig tc;
  tc.epochs = 1;
  const auto cells = run_ablation_grid(tiny_data(), tiny_model(), tc);
  REQUIRE(cells.size() == 7);
  std::ostringstream csv;
  write_ablation_csv(csv, cells);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "image,density,volume,ALDE,APE,MnRE,Q");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 7);
  CHECK_FALSE(ablation_footnotes().empty());
}

TEST_CASE("config parsing") {
  std::istringstream ok("# comment\n\nepochs = 3\nfusion=concat\n  lr = 0.5  \ncues = image+volume\n");
  RunConfig cfg;
  apply_settings(cfg, parse_key_values(ok));
  CHECK(cfg.train.epochs == 3);
  CHECK(cfg.model.fusion == FusionKind::concat);
  CHECK(cfg.train.lr == 0.5);
  CHECK(cfg.model.cues == CueMask{true, false, true});

  std::istringstream bad_line("epochs 3\n");
  CHECK_THROWS_AS(parse_key_values(bad_line), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "epoch", "3"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "epochs", "three"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "epochs", "-1"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "lr", "0.1x"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "fusion", "sum"), ConfigError);
  CHECK_THROWS_AS(split_assignment("seed"), ConfigError);
  CHECK(split_assignment("seed=4") == std::pair<std::string, std::string>{"seed", "4"});
  CHECK_THROWS_AS(load_key_values("/nonexistent/physmass.cfg"), InputError);
  for (const auto& k : config_keys()) CHECK_FALSE(k.empty());

  RunConfig seeds;
  seeds.seed = 7;
  CHECK(seeds.resolved().model.seed == 7);
  CHECK(seeds.resolved().train.shuffle_seed == 7);
  seeds.model_seed = 2;
  CHECK(seeds.resolved().model.seed == 2);
}

TEST_CASE("prediction CSV round trip") {
  std::vector<PredictionRecord> recs;
  recs.push_back({"s1", "box/steel", Split::test_seen, 1.25, 1e-4, 7900.0, 0.79, std::array<double, 3>{0.1, 0.2, 0.7}});
  recs.push_back({"s2", "sphere/glass", Split::test_unseen, 0.1 + 0.2, 0.0, 0.0, 1.0 / 3.0, std::nullopt});
  std::stringstream buf;
  write_predictions_csv(buf, recs);
  const auto back = read_predictions_csv(buf);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].id == recs[i].id);
    CHECK(back[i].split == recs[i].split);
    CHECK(back[i].category == recs[i].category);
    CHECK(back[i].mass == recs[i].mass);
    CHECK(back[i].mass_hat == recs[i].mass_hat);
    CHECK(back[i].volume_factor == recs[i].volume_factor);
    CHECK(back[i].gate_weights == recs[i].gate_weights);
  }
  std::istringstream junk("not,a,header\n");
  CHECK_THROWS_AS(read_predictions_csv(junk), FormatError);
}

TEST_CASE("gate weight summaries") {
  CHECK(format_gate_weights({0.13, 0.49, 0.38}) == "image: 0.13, geometry: 0.49, text: 0.38");
  std::vector<PredictionRecord> recs(2);
  CHECK_FALSE(mean_gate_weights(recs).has_value());
  recs[0].gate_weights = std::array<double, 3>{0.2, 0.5, 0.3};
  recs[1].gate_weights = std::array<double, 3>{0.4, 0.3, 0.3};
  const auto m = mean_gate_weights(recs);
  REQUIRE(m.has_value());
  CHECK((*m)[0] == doctest::Approx(0.3));
  CHECK((*m)[1] == doctest::Approx(0.4));
  CHECK((*m)[2] == doctest::Approx(0.3));
}

TEST_CASE("prepared data") {
  const auto& data = tiny_data();
  CHECK(data.samples.size() == 36);
  CHECK(data.train_indices().size() == 24);
  CHECK(data.test_indices().size() == 12);
  for (const auto& s : data.samples) {
    CHECK(s.input.points.size() == 16);
    CHECK(s.volume_proxy > 0.0);
    // Centered before the draw, so every point lies within half a frame.
    for (const auto& q : s.input.points.points) {
      CHECK(std::fabs(q[0]) <= 0.5 * 32 * tiny_generator().render.footprint);
      CHECK(std::fabs(q[1]) <= 0.5 * 32 * tiny_generator().render.footprint);
    }
  }
  const auto ds = generate_dataset(tiny_generator(), MaterialVocab::default_vocab(), 1);
  const auto again = prepare_data(ds, 16, 1);
  for (std::size_t i = 0; i < data.samples.size(); ++i)
    CHECK(again.samples[i].input.points.points == data.samples[i].input.points.points);
}

}  // TEST_SUITE
