#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "physmass/train.hpp"

namespace physmass {

struct RuleBasedResult {
  MetricsReport report;  // stratified seen / unseen
  std::size_t unknown_excluded = 0;
  std::vector<PredictionRecord> predictions;
  std::string volume_source;  // "geometry_head" or "oracle"
};

/// m_hat = V_hat * midpoint density of the parsed material, on the test
/// split. V_hat comes from the geometry model's volume factor, or from the
/// depth-map volume proxy when geometry_model is null. Samples whose text
/// names no known material are excluded and counted.
RuleBasedResult run_baseline_rulebased(const PreparedData& data,
                                       const MassModel* geometry_model = nullptr);

struct AblationCell {
  CueMask cues;
  RunRecord run;
};

// The seven non-empty cue subsets, single cues first, full model last.
std::vector<CueMask> ablation_subsets();

/// Trains one model per subset with everything else held fixed.
std::vector<AblationCell> run_ablation_grid(const PreparedData& data, const ModelConfig& base,
                                            const TrainConfig& tc);

// Header image,density,volume,ALDE,APE,MnRE,Q then one row per cell.
void write_ablation_csv(std::ostream& out, const std::vector<AblationCell>& cells);
// Reference values from the original real-image study, for context only.
std::string ablation_footnotes();

struct MaterialMass {
  MaterialId material = 0;
  double mass = 0.0;
};

/// Best mean ALDE reachable by any predictor that sees only the material:
/// one constant per material at the median of ln m.
double density_floor_oracle(const std::vector<MaterialMass>& samples);
// Over the test split, keyed by the parsed material id.
double density_floor_oracle(const PreparedData& data);

// Mean (image, geometry, text) gate weights; nullopt when no record has gates.
std::optional<std::array<double, 3>> mean_gate_weights(const std::vector<PredictionRecord>& records);
// "image: 0.13, geometry: 0.49, text: 0.36"
std::string format_gate_weights(const std::array<double, 3>& w);

}  // namespace physmass
