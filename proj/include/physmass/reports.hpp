#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "physmass/train.hpp"

namespace physmass {

// id,split,category,m,V_hat,rho_hat,m_hat,gate_image,gate_geometry,gate_text
// Gate columns are empty for models without gates. Reals use %.17g.
void write_predictions_csv(std::ostream& out, const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> read_predictions_csv(std::istream& in);

std::string run_record_json(const RunRecord& r);

/// Writes record.json, metrics.csv, metrics.json and predictions.csv into dir.
/// wall_clock_s in record.json is the only field that varies between reruns.
void write_run(const std::string& dir, const RunRecord& r);

// Human-readable table of a stratified report plus mean gate weights.
std::string format_report(const MetricsReport& report, const std::vector<PredictionRecord>& records);

}  // namespace physmass
