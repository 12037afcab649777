#include "physmass/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "physmass/errors.hpp"

namespace physmass {

Tensor2 Tensor2::identity(std::size_t n) {
  Tensor2 t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

bool Tensor2::all_finite() const { return physmass::all_finite(data); }

void Tensor2::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: length " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  return dot_kernel(a.data(), b.data(), a.size());
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vec matvec(const Tensor2& w, std::span<const double> x) {
  if (x.size() != w.cols) {
    throw DimensionError("matvec: matrix has " + std::to_string(w.cols) + " columns, input has " +
                         std::to_string(x.size()));
  }
  Vec y(w.rows, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = w.data.data() + r * w.cols;
    y[r] = dot_kernel(wr, x.data(), w.cols);
  }
  return y;
}

Vec matvec_transposed(const Tensor2& w, std::span<const double> g) {
  if (g.size() != w.rows) {
    throw DimensionError("matvec_transposed: matrix has " + std::to_string(w.rows) +
                         " rows, input has " + std::to_string(g.size()));
  }
  Vec y(w.cols, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    const double* wr = w.data.data() + r * w.cols;
    for (std::size_t c = 0; c < w.cols; ++c) y[c] += wr[c] * gr;
  }
  return y;
}

}  // namespace physmass
