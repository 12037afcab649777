#include "physmass/layernorm.hpp"

#include <cmath>
#include <string>

#include "physmass/errors.hpp"

namespace physmass {

LayerNormParams::LayerNormParams(std::size_t dim, double eps)
    : gain(dim, 1.0), shift(dim, 0.0), epsilon(eps) {}

void LayerNormParams::validate() const {
  if (gain.size() != shift.size()) throw DimensionError("layernorm: gain/shift length mismatch");
  if (gain.size() < 2) throw DimensionError("layernorm: dimension must be at least 2");
  if (!(epsilon > 0.0)) throw DomainError("layernorm: epsilon must be positive");
}

namespace {

struct Moments {
  double mean;
  double inv_std;
};

Moments moments(const LayerNormParams& p, std::span<const double> x) {
  p.validate();
  if (x.size() != p.dim()) {
    throw DimensionError("layernorm: input length " + std::to_string(x.size()) + " vs " +
                         std::to_string(p.dim()));
  }
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  return {mean, 1.0 / std::sqrt(var + p.epsilon)};
}

}  // namespace

Vec layernorm_forward(const LayerNormParams& p, std::span<const double> x) {
  const Moments mo = moments(p, x);
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = (x[i] - mo.mean) * mo.inv_std * p.gain[i] + p.shift[i];
  }
  return y;
}

LayerNormGradients layernorm_backward(const LayerNormParams& p, std::span<const double> x,
                                      std::span<const double> grad_out) {
  const Moments mo = moments(p, x);
  if (grad_out.size() != x.size()) throw DimensionError("layernorm_backward: grad_out length");
  const std::size_t n = x.size();
  LayerNormGradients g{Vec(n, 0.0), Vec(n, 0.0), Vec(n, 0.0)};
  double mean_dnorm = 0.0;
  double mean_dnorm_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = (x[i] - mo.mean) * mo.inv_std;
    const double dnorm = grad_out[i] * p.gain[i];
    g.grad_gain[i] = grad_out[i] * norm;
    g.grad_shift[i] = grad_out[i];
    mean_dnorm += dnorm;
    mean_dnorm_norm += dnorm * norm;
  }
  mean_dnorm /= static_cast<double>(n);
  mean_dnorm_norm /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = (x[i] - mo.mean) * mo.inv_std;
    const double dnorm = grad_out[i] * p.gain[i];
    g.grad_x[i] = (dnorm - mean_dnorm - norm * mean_dnorm_norm) * mo.inv_std;
  }
  return g;
}

}  // namespace physmass
