#include "physmass/reports.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "physmass/errors.hpp"
#include "physmass/experiments.hpp"

namespace physmass {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw FormatError("predictions: bad number '" + s + "'");
  }
  if (used != s.size()) throw FormatError("predictions: bad number '" + s + "'");
  return v;
}

constexpr const char* kPredHeader =
    "id,split,category,m,V_hat,rho_hat,m_hat,gate_image,gate_geometry,gate_text";

nlohmann::ordered_json report_json(const MetricsReport& r) {
  nlohmann::ordered_json j = {{"label", r.label}, {"count", r.count}, {"ALDE", r.alde},
                              {"APE", r.ape},     {"MnRE", r.mnre},   {"Q", r.q_rate},
                              {"ADE", r.ade}};
  if (!r.strata.empty()) {
    j["strata"] = nlohmann::ordered_json::array();
    for (const auto& s : r.strata) j["strata"].push_back(report_json(s));
  }
  return j;
}

}  // namespace

void write_predictions_csv(std::ostream& out, const std::vector<PredictionRecord>& records) {
  out << kPredHeader << '\n';
  for (const auto& r : records) {
    if (r.id.find(',') != std::string::npos || r.category.find(',') != std::string::npos) {
      throw FormatError("predictions: id or category contains a comma");
    }
    out << r.id << ',' << to_string(r.split) << ',' << r.category << ',' << fmt17(r.mass) << ','
        << fmt17(r.volume_factor) << ',' << fmt17(r.density_factor) << ',' << fmt17(r.mass_hat);
    if (r.gate_weights) {
      for (double w : *r.gate_weights) out << ',' << fmt17(w);
    } else {
      out << ",,,";
    }
    out << '\n';
  }
}

std::vector<PredictionRecord> read_predictions_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kPredHeader) throw FormatError("predictions: missing header");
  std::vector<PredictionRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 10) throw FormatError("predictions: expected 10 fields in '" + line + "'");
    PredictionRecord r;
    r.id = f[0];
    r.split = split_from_string(f[1]);
    r.category = f[2];
    r.mass = to_real(f[3]);
    r.volume_factor = to_real(f[4]);
    r.density_factor = to_real(f[5]);
    r.mass_hat = to_real(f[6]);
    if (!f[7].empty()) r.gate_weights = std::array<double, 3>{to_real(f[7]), to_real(f[8]), to_real(f[9])};
    out.push_back(std::move(r));
  }
  return out;
}

std::string run_record_json(const RunRecord& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["config"] = r.config_json.empty() ? nlohmann::ordered_json::object()
                                      : nlohmann::ordered_json::parse(r.config_json);
  j["epochs"] = r.epoch_loss.size();
  j["epoch_loss"] = r.epoch_loss;
  j["train"] = report_json(r.train_report);
  j["test"] = report_json(r.test_report);
  if (auto g = mean_gate_weights(r.test_predictions)) {
    j["mean_gate_weights"] = {{"image", (*g)[0]}, {"geometry", (*g)[1]}, {"text", (*g)[2]}};
  }
  j["checkpoint"] = r.checkpoint_path;
  j["wall_clock_s"] = r.wall_clock_s;
  return j.dump(2) + "\n";
}

void write_run(const std::string& dir, const RunRecord& r) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
    if (!f) throw InputError("cannot write " + dir + "/" + name);
    return f;
  };
  {
    auto f = open("record.json");
    f << run_record_json(r);
  }
  {
    auto f = open("metrics.csv");
    write_metrics_csv(f, r.test_report);
  }
  {
    auto f = open("metrics.json");
    f << metrics_json(r.test_report) << '\n';
  }
  {
    auto f = open("predictions.csv");
    write_predictions_csv(f, r.test_predictions);
  }
}

std::string format_report(const MetricsReport& report, const std::vector<PredictionRecord>& records) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %6s %8s %8s %8s %8s %10s\n", "stratum", "count", "ALDE",
                "APE", "MnRE", "Q", "ADE");
  out += buf;
  auto row = [&](const MetricsReport& m) {
    std::snprintf(buf, sizeof(buf), "%-12s %6zu %8.4f %8.4f %8.4f %8.4f %10.4f\n", m.label.c_str(),
                  m.count, m.alde, m.ape, m.mnre, m.q_rate, m.ade);
    out += buf;
  };
  for (const auto& s : report.strata) row(s);
  row(report);
  if (auto g = mean_gate_weights(records)) out += "mean gate weights: " + format_gate_weights(*g) + "\n";
  return out;
}

}  // namespace physmass
