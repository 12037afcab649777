#include "physmass/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include <json.hpp>

#include "physmass/errors.hpp"

namespace physmass {

namespace {

void require_positive(double m, double m_hat, const char* what) {
  if (!(m > 0.0) || !(m_hat > 0.0) || !std::isfinite(m) || !std::isfinite(m_hat)) {
    throw DomainError(std::string(what) + ": masses must be positive and finite");
  }
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j = {{"label", r.label}, {"count", r.count}, {"ALDE", r.alde}, {"APE", r.ape},
                      {"MnRE", r.mnre},   {"Q", r.q_rate},    {"ADE", r.ade}};
  if (!r.strata.empty()) {
    j["strata"] = nlohmann::json::array();
    for (const auto& s : r.strata) j["strata"].push_back(to_json(s));
  }
  return j;
}

}  // namespace

double alde(double m, double m_hat) {
  require_positive(m, m_hat, "alde");
  return std::fabs(std::log(m) - std::log(m_hat));
}

double ape(double m, double m_hat) {
  if (!(m > 0.0) || !std::isfinite(m) || !std::isfinite(m_hat)) {
    throw DomainError("ape: ground-truth mass must be positive");
  }
  return std::fabs(m - m_hat) / m;
}

double mnre(double m, double m_hat) {
  require_positive(m, m_hat, "mnre");
  return std::min(m_hat / m, m / m_hat);
}

bool q_hit(double m, double m_hat) {
  require_positive(m, m_hat, "q_hit");
  return std::max(m_hat / m, m / m_hat) < 2.0;
}

double ade(double m, double m_hat) {
  if (!std::isfinite(m) || !std::isfinite(m_hat)) throw DomainError("ade: non-finite input");
  return std::fabs(m - m_hat);
}

MetricsReport aggregate(const std::vector<EvalPair>& pairs, Stratify stratify) {
  if (pairs.empty()) throw DomainError("aggregate: no pairs");
  MetricsReport r;
  r.count = pairs.size();
  std::size_t hits = 0;
  for (const auto& p : pairs) {
    r.alde += alde(p.m, p.m_hat);
    r.ape += ape(p.m, p.m_hat);
    r.mnre += mnre(p.m, p.m_hat);
    r.ade += ade(p.m, p.m_hat);
    hits += q_hit(p.m, p.m_hat) ? 1 : 0;
  }
  const double n = static_cast<double>(pairs.size());
  r.alde /= n;
  r.ape /= n;
  r.mnre /= n;
  r.ade /= n;
  r.q_rate = static_cast<double>(hits) / n;

  if (stratify == Stratify::seen_unseen) {
    std::vector<EvalPair> seen, unseen;
    for (const auto& p : pairs) (p.seen ? seen : unseen).push_back(p);
    if (!seen.empty()) {
      r.strata.push_back(aggregate(seen));
      r.strata.back().label = "Seen";
    }
    if (!unseen.empty()) {
      r.strata.push_back(aggregate(unseen));
      r.strata.back().label = "Unseen";
    }
  } else if (stratify == Stratify::category) {
    std::map<std::string, std::vector<EvalPair>> by_cat;
    for (const auto& p : pairs) by_cat[p.category].push_back(p);
    for (const auto& [cat, ps] : by_cat) {
      r.strata.push_back(aggregate(ps));
      r.strata.back().label = cat;
    }
  }
  return r;
}

void write_metrics_csv(std::ostream& out, const MetricsReport& report) {
  out << "stratum,count,ALDE,APE,MnRE,Q,ADE\n";
  auto row = [&](const MetricsReport& r) {
    out << r.label << ',' << r.count << ',' << fmt17(r.alde) << ',' << fmt17(r.ape) << ','
        << fmt17(r.mnre) << ',' << fmt17(r.q_rate) << ',' << fmt17(r.ade) << '\n';
  };
  for (const auto& s : report.strata) row(s);
  row(report);
}

std::string metrics_json(const MetricsReport& report) { return to_json(report).dump(2); }

}  // namespace physmass
