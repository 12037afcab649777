#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace physmass {

double alde(double m, double m_hat);
double ape(double m, double m_hat);
double mnre(double m, double m_hat);
// Strictly within a factor of two.
bool q_hit(double m, double m_hat);
double ade(double m, double m_hat);

struct EvalPair {
  std::string id;
  double m = 0.0;
  double m_hat = 0.0;
  std::string category;
  bool seen = true;
};

enum class Stratify { none, seen_unseen, category };

struct MetricsReport {
  std::string label = "Total";
  std::size_t count = 0;
  double alde = 0.0;
  double ape = 0.0;
  double mnre = 0.0;
  double q_rate = 0.0;
  double ade = 0.0;
  std::vector<MetricsReport> strata;
};

/// Arithmetic means over pairs. Strata (when requested) are computed by
/// filtering and recursing; the returned top-level report is the Total.
MetricsReport aggregate(const std::vector<EvalPair>& pairs, Stratify stratify = Stratify::none);

// One row per stratum then Total: stratum,count,ALDE,APE,MnRE,Q,ADE.
void write_metrics_csv(std::ostream& out, const MetricsReport& report);
std::string metrics_json(const MetricsReport& report);

}  // namespace physmass
