#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "physmass/metrics.hpp"
#include "physmass/model.hpp"
#include "physmass/synthbench.hpp"

namespace physmass {

struct TrainConfig {
  std::size_t epochs = 25;
  double lr = 1e-4;
  std::size_t batch_size = 1;
  std::uint64_t shuffle_seed = 0;

  // lr = 0 is accepted so a run can be replayed without moving parameters.
  void validate() const;
};

/// Model-ready view of one sample.
struct PreparedSample {
  std::string id;
  std::string category;
  Split split = Split::train;
  double mass = 0.0;
  ModelInput input;        // material parsed from the sample's text
  double volume_proxy = 0.0;
};

struct PreparedData {
  std::vector<PreparedSample> samples;
  MaterialVocab vocab;
  std::size_t num_points = 0;

  std::vector<std::size_t> indices(Split s) const;
  std::vector<std::size_t> train_indices() const { return indices(Split::train); }
  std::vector<std::size_t> test_indices() const;
};

/// Depth map to model point cloud: box-diagonal depth normalization,
/// orthographic unprojection with the metric footprint, centering, then a
/// seeded draw of exactly num_points points.
PointCloud geometry_cue(const DepthMap& depth, double footprint, std::size_t num_points,
                        std::uint64_t seed);

// Point draws use Rng::derive(seed, sample index).
PreparedData prepare_data(const Dataset& ds, std::size_t num_points, std::uint64_t seed);

struct PredictionRecord {
  std::string id;
  std::string category;
  Split split = Split::train;
  double mass = 0.0;
  double volume_factor = 0.0;  // 0 for models without factors
  double density_factor = 0.0;
  double mass_hat = 0.0;
  std::optional<std::array<double, 3>> gate_weights;
};

std::vector<PredictionRecord> predict_samples(const MassModel& model, const PreparedData& data,
                                              const std::vector<std::size_t>& indices);
std::vector<PredictionRecord> predict_samples(const DirectRegressor& model, const PreparedData& data,
                                              const std::vector<std::size_t>& indices);
std::vector<EvalPair> to_pairs(const std::vector<PredictionRecord>& records);

struct RunRecord {
  std::string name;
  std::string config_json;  // snapshot of every setting that shaped the run
  std::vector<double> epoch_loss;  // mean train ALDE per epoch
  MetricsReport train_report;
  MetricsReport test_report;  // stratified seen / unseen
  std::vector<PredictionRecord> test_predictions;
  std::string checkpoint_path;
  double wall_clock_s = 0.0;
};

// Per-sample Adam on ALDE. Returns the mean loss of each epoch. Throws
// NumericError naming the epoch and sample on a non-finite loss.
std::vector<double> fit(MassModel& model, const PreparedData& data, const TrainConfig& tc);
std::vector<double> fit(DirectRegressor& model, const PreparedData& data, const TrainConfig& tc);

std::string config_json(const ModelConfig& mc, const TrainConfig& tc);

// fit, then evaluate on the train and test splits.
RunRecord train(MassModel& model, const PreparedData& data, const TrainConfig& tc);
RunRecord run_baseline_direct(const PreparedData& data, const TrainConfig& tc, std::uint64_t seed,
                              DirectRegressor* out_model = nullptr);

}  // namespace physmass
