#include "physmass/params.hpp"

#include <algorithm>
#include <cstring>

#include "physmass/errors.hpp"

namespace physmass {

void ParamRegistry::add(std::string name, std::span<double> value, std::span<double> grad) {
  if (value.size() != grad.size()) {
    throw DimensionError("param '" + name + "': value/grad size mismatch");
  }
  for (const auto& e : entries_) {
    if (e.name == name) throw ConfigError("duplicate parameter name '" + name + "'");
  }
  entries_.push_back({std::move(name), value, grad, false});
}

void ParamRegistry::add_frozen(std::string name, std::span<double> value) {
  for (const auto& e : entries_) {
    if (e.name == name) throw ConfigError("duplicate parameter name '" + name + "'");
  }
  entries_.push_back({std::move(name), value, {}, true});
}

void ParamRegistry::add_dense(const std::string& prefix, DenseLayer& layer, LayerGrad& grad) {
  add(prefix + ".weight", layer.weight.data, grad.w.data);
  add(prefix + ".bias", layer.bias, grad.b);
}

void ParamRegistry::add_mlp(const std::string& prefix, Mlp& mlp, MlpGrad& grad) {
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    add_dense(prefix + ".l" + std::to_string(i), mlp.layers[i], grad.layers[i]);
  }
}

void ParamRegistry::add_layernorm(const std::string& prefix, LayerNormParams& p, Vec& grad_gain,
                                  Vec& grad_shift) {
  add(prefix + ".gain", p.gain, grad_gain);
  add(prefix + ".shift", p.shift, grad_shift);
}

std::size_t ParamRegistry::trainable_size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (!e.frozen) n += e.value.size();
  }
  return n;
}

void ParamRegistry::zero_grad() {
  for (auto& e : entries_) std::fill(e.grad.begin(), e.grad.end(), 0.0);
}

std::uint64_t checksum(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace physmass
