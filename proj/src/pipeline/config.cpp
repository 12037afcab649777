#include "physmass/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <string_view>

#include "physmass/errors.hpp"

namespace physmass {

RunConfig RunConfig::resolved() const {
  RunConfig r = *this;
  r.model.seed = model_seed.value_or(seed);
  r.train.shuffle_seed = shuffle_seed.value_or(seed);
  return r;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError(key + ": integer out of range '" + v + "'");
  }
}

double to_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = to_u64(k, v); }},
      {"model_seed", [](RunConfig& c, auto& k, auto& v) { c.model_seed = to_u64(k, v); }},
      {"shuffle_seed", [](RunConfig& c, auto& k, auto& v) { c.shuffle_seed = to_u64(k, v); }},
      {"train_count", [](RunConfig& c, auto& k, auto& v) { c.gen.train_count = to_u64(k, v); }},
      {"test_count", [](RunConfig& c, auto& k, auto& v) { c.gen.test_count = to_u64(k, v); }},
      {"unseen_fraction", [](RunConfig& c, auto& k, auto& v) { c.gen.unseen_fraction = to_real(k, v); }},
      {"resolution", [](RunConfig& c, auto& k, auto& v) { c.gen.render.resolution = to_u64(k, v); }},
      {"footprint", [](RunConfig& c, auto& k, auto& v) { c.gen.render.footprint = to_real(k, v); }},
      {"camera_distance",
       [](RunConfig& c, auto& k, auto& v) { c.gen.render.camera_distance = to_real(k, v); }},
      {"appearance_noise",
       [](RunConfig& c, auto& k, auto& v) { c.gen.appearance_noise = to_real(k, v); }},
      {"scale_jitter", [](RunConfig& c, auto& k, auto& v) { c.gen.scale_jitter = to_real(k, v); }},
      {"fill_min", [](RunConfig& c, auto& k, auto& v) { c.gen.fill_min = to_real(k, v); }},
      {"fill_max", [](RunConfig& c, auto& k, auto& v) { c.gen.fill_max = to_real(k, v); }},
      {"dim_min", [](RunConfig& c, auto& k, auto& v) { c.gen.dim_min = to_real(k, v); }},
      {"dim_max", [](RunConfig& c, auto& k, auto& v) { c.gen.dim_max = to_real(k, v); }},
      {"feature_dim", [](RunConfig& c, auto& k, auto& v) { c.model.feature_dim = to_u64(k, v); }},
      {"fusion", [](RunConfig& c, auto&, auto& v) { c.model.fusion = fusion_from_string(v); }},
      {"cues", [](RunConfig& c, auto&, auto& v) { c.model.cues = CueMask::from_label(v); }},
      {"num_points", [](RunConfig& c, auto& k, auto& v) { c.model.num_points = to_u64(k, v); }},
      {"rho_min", [](RunConfig& c, auto& k, auto& v) { c.model.density.rho_min = to_real(k, v); }},
      {"rho_max", [](RunConfig& c, auto& k, auto& v) { c.model.density.rho_max = to_real(k, v); }},
      {"head_hidden", [](RunConfig& c, auto& k, auto& v) { c.model.head_hidden = to_u64(k, v); }},
      {"image_hidden", [](RunConfig& c, auto& k, auto& v) { c.model.image_hidden = to_u64(k, v); }},
      {"point_hidden", [](RunConfig& c, auto& k, auto& v) { c.model.point_hidden = to_u64(k, v); }},
      {"volume_unit", [](RunConfig& c, auto& k, auto& v) { c.model.volume_unit = to_real(k, v); }},
      {"volume_bias_init",
       [](RunConfig& c, auto& k, auto& v) { c.model.volume_bias_init = to_real(k, v); }},
      {"revive_floored_volume",
       [](RunConfig& c, auto& k, auto& v) { c.model.revive_floored_volume = to_bool(k, v); }},
      {"epochs", [](RunConfig& c, auto& k, auto& v) { c.train.epochs = to_u64(k, v); }},
      {"lr", [](RunConfig& c, auto& k, auto& v) { c.train.lr = to_real(k, v); }},
      {"batch_size", [](RunConfig& c, auto& k, auto& v) { c.train.batch_size = to_u64(k, v); }},
  };
  return table;
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path);
  return parse_key_values(in);
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

void apply_settings(RunConfig& cfg, const KeyValues& kv) {
  for (const auto& [k, v] : kv) apply_setting(cfg, k, v);
}

std::pair<std::string, std::string> split_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + s + "'");
  return {trim(std::string_view(s).substr(0, eq)), trim(std::string_view(s).substr(eq + 1))};
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, v] : setters()) out.push_back(k);
  return out;
}

std::string default_data_dir() {
  if (const char* env = std::getenv("PHYSMASS_DATA"); env && *env) return env;
  return "data/synth";
}

}  // namespace physmass
