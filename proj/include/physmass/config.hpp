#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "physmass/model.hpp"
#include "physmass/synthbench.hpp"
#include "physmass/train.hpp"

namespace physmass {

/// All knobs of a run. `seed` drives data generation and, unless overridden
/// by model_seed / shuffle_seed, model init, point sampling and shuffling.
struct RunConfig {
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> model_seed;
  std::optional<std::uint64_t> shuffle_seed;
  GeneratorConfig gen{};
  ModelConfig model{};
  TrainConfig train{};

  // Copies the resolved seeds into model / train.
  RunConfig resolved() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines; blank lines and lines starting with '#' are skipped.
/// Throws ConfigError naming the line for anything else.
KeyValues parse_key_values(std::istream& in);
KeyValues load_key_values(const std::string& path);

// Throws ConfigError for unknown keys or unparsable values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
void apply_settings(RunConfig& cfg, const KeyValues& kv);
// "key=value" as given on the command line.
std::pair<std::string, std::string> split_assignment(const std::string& s);

// Keys accepted by apply_setting, for usage text.
std::vector<std::string> config_keys();

// $PHYSMASS_DATA when set, else "data/synth".
std::string default_data_dir();

}  // namespace physmass
