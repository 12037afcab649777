#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "physmass/dense.hpp"
#include "physmass/layernorm.hpp"

namespace physmass {

/// A named view over one parameter array and its gradient buffer.
struct ParamEntry {
  std::string name;
  std::span<double> value;
  std::span<double> grad;  // empty for frozen entries
  bool frozen = false;
};

class ParamRegistry {
 public:
  void add(std::string name, std::span<double> value, std::span<double> grad);
  void add_frozen(std::string name, std::span<double> value);
  void add_dense(const std::string& prefix, DenseLayer& layer, LayerGrad& grad);
  void add_mlp(const std::string& prefix, Mlp& mlp, MlpGrad& grad);
  void add_layernorm(const std::string& prefix, LayerNormParams& p, Vec& grad_gain,
                     Vec& grad_shift);

  const std::vector<ParamEntry>& entries() const { return entries_; }
  std::vector<ParamEntry>& entries() { return entries_; }

  std::size_t trainable_size() const;
  void zero_grad();

 private:
  std::vector<ParamEntry> entries_;
};

// FNV-1a over the raw bytes of the values; used to prove frozen tables stay put.
std::uint64_t checksum(std::span<const double> values);

}  // namespace physmass
