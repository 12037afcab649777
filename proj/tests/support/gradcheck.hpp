#pragma once

// Central finite-difference oracle. Independent of every backward pass in the
// library: it only ever calls forward functions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "physmass/params.hpp"

namespace physmass::testing {

inline constexpr double kFdStep = 1e-5;

// d f / d x_i by (f(x + h e_i) - f(x - h e_i)) / 2h. x is restored exactly.
inline std::vector<double> numeric_gradient(const std::function<double()>& f, std::span<double> x,
                                            double h = kFdStep) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f();
    x[i] = saved - h;
    const double down = f();
    x[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - n|| / max(||a||, ||n||). Two all-zero gradients agree exactly.
inline double relative_error(std::span<const double> a, std::span<const double> n) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nn));
  if (scale == 0.0) return 0.0;
  return std::sqrt(diff) / scale;
}

// Accumulates a (analytic, numeric) pair list so several parameter groups are
// judged by one norm-wise error.
struct GradientComparison {
  std::vector<double> analytic;
  std::vector<double> numeric;

  void add(std::span<const double> a, std::span<const double> n) {
    analytic.insert(analytic.end(), a.begin(), a.end());
    numeric.insert(numeric.end(), n.begin(), n.end());
  }
  void add_numeric_of(const std::function<double()>& f, std::span<double> x,
                      std::span<const double> analytic_grad) {
    const auto n = numeric_gradient(f, x);
    add(analytic_grad, n);
  }
  double error() const { return relative_error(analytic, numeric); }
};

// Every trainable registry entry against finite differences of f. The grad
// buffers must already hold the analytic gradient of f.
inline void compare_registry(GradientComparison& cmp, ParamRegistry& reg,
                             const std::function<double()>& f) {
  for (auto& e : reg.entries()) {
    if (e.frozen) continue;
    const std::vector<double> analytic(e.grad.begin(), e.grad.end());
    cmp.add_numeric_of(f, e.value, analytic);
  }
}

}  // namespace physmass::testing
