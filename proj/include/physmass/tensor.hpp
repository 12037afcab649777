#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace physmass {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles.
struct Tensor2 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  static Tensor2 zeros(std::size_t r, std::size_t c) { return Tensor2(r, c); }
  static Tensor2 identity(std::size_t n);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  std::size_t size() const { return data.size(); }
  bool all_finite() const;
  void fill(double v);

  bool operator==(const Tensor2&) const = default;
};

bool all_finite(std::span<const double> v);

// Four interleaved partial sums combined as (s0 + s1) + (s2 + s3); every dot
// product in the library goes through this so results agree bit-exactly.
inline double dot_kernel(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}
double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// y = W x (no bias). Throws DimensionError on mismatch.
Vec matvec(const Tensor2& w, std::span<const double> x);
// y = W^T g.
Vec matvec_transposed(const Tensor2& w, std::span<const double> g);

}  // namespace physmass
