#include "physmass/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <string>

#include "physmass/errors.hpp"

namespace physmass {

std::string_view to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::box: return "box";
    case ShapeKind::cylinder: return "cylinder";
    case ShapeKind::sphere: return "sphere";
  }
  return "box";
}

ShapeKind shape_kind_from_string(std::string_view s) {
  if (s == "box") return ShapeKind::box;
  if (s == "cylinder") return ShapeKind::cylinder;
  if (s == "sphere") return ShapeKind::sphere;
  throw FormatError("unknown shape kind '" + std::string(s) + "'");
}

ShapeSpec ShapeSpec::box(double w, double h, double d, double fill) {
  ShapeSpec s{ShapeKind::box, {w, h, d}, fill};
  s.validate();
  return s;
}

ShapeSpec ShapeSpec::cylinder(double r, double h, double fill) {
  ShapeSpec s{ShapeKind::cylinder, {r, h, 0.0}, fill};
  s.validate();
  return s;
}

ShapeSpec ShapeSpec::sphere(double r, double fill) {
  ShapeSpec s{ShapeKind::sphere, {r, 0.0, 0.0}, fill};
  s.validate();
  return s;
}

void ShapeSpec::validate() const {
  const int used = kind == ShapeKind::box ? 3 : (kind == ShapeKind::cylinder ? 2 : 1);
  for (int i = 0; i < used; ++i) {
    if (!(dims[i] > 0.0) || !std::isfinite(dims[i])) throw DomainError("shape dims must be > 0");
  }
  if (!(fill_ratio > 0.0 && fill_ratio <= 1.0)) throw DomainError("fill ratio must lie in (0, 1]");
}

std::array<double, 3> ShapeSpec::extents() const {
  switch (kind) {
    case ShapeKind::box: return dims;
    case ShapeKind::cylinder: return {2.0 * dims[0], dims[1], 2.0 * dims[0]};
    case ShapeKind::sphere: return {2.0 * dims[0], 2.0 * dims[0], 2.0 * dims[0]};
  }
  return dims;
}

ShapeSpec ShapeSpec::scaled(double s) const {
  ShapeSpec out = *this;
  for (double& d : out.dims) d *= s;
  return out;
}

double geometric_volume(const ShapeSpec& s) {
  s.validate();
  const auto& d = s.dims;
  switch (s.kind) {
    case ShapeKind::box: return d[0] * d[1] * d[2];
    case ShapeKind::cylinder: return std::numbers::pi * d[0] * d[0] * d[1];
    case ShapeKind::sphere: return 4.0 / 3.0 * std::numbers::pi * d[0] * d[0] * d[0];
  }
  return 0.0;
}

double analytic_volume(const ShapeSpec& s) { return geometric_volume(s) * s.fill_ratio; }

double silhouette_fill(const ShapeSpec& s) {
  return s.kind == ShapeKind::sphere ? std::numbers::pi / 4.0 : 1.0;
}

DepthMap render_depth(const ShapeSpec& s, const RenderConfig& cfg) {
  s.validate();
  if (cfg.resolution < 16) throw DimensionError("render_depth: resolution must be at least 16");
  if (!(cfg.footprint > 0.0)) throw DomainError("render_depth: footprint must be positive");
  const std::size_t n = cfg.resolution;
  DepthMap d(n, n);
  const double half = 0.5 * static_cast<double>(n);
  const double z0 = cfg.camera_distance;
  for (std::size_t v = 0; v < n; ++v) {
    const double y = (static_cast<double>(v) + 0.5 - half) * cfg.footprint;
    for (std::size_t u = 0; u < n; ++u) {
      const double x = (static_cast<double>(u) + 0.5 - half) * cfg.footprint;
      double z = -1.0;
      switch (s.kind) {
        case ShapeKind::box:
          if (std::fabs(x) <= 0.5 * s.dims[0] && std::fabs(y) <= 0.5 * s.dims[1]) {
            z = z0 - 0.5 * s.dims[2];
          }
          break;
        case ShapeKind::cylinder: {
          const double r = s.dims[0];
          if (std::fabs(x) <= r && std::fabs(y) <= 0.5 * s.dims[1]) z = z0 - std::sqrt(r * r - x * x);
          break;
        }
        case ShapeKind::sphere: {
          const double r2 = s.dims[0] * s.dims[0] - x * x - y * y;
          if (r2 >= 0.0) z = z0 - std::sqrt(r2);
          break;
        }
      }
      if (z > 0.0) {
        d.depth[d.index(u, v)] = z;
        d.mask[d.index(u, v)] = 1;
      }
    }
  }
  if (d.masked_count() < 3) {
    throw DegenerateInputError("render_depth: shape covers fewer than 3 pixels");
  }
  return d;
}

std::array<double, 3> material_color(std::string_view name) {
  if (name == "plastic") return {0.80, 0.30, 0.30};
  if (name == "steel") return {0.60, 0.62, 0.65};
  if (name == "aluminum") return {0.68, 0.70, 0.72};
  if (name == "pine wood") return {0.75, 0.60, 0.40};
  if (name == "hardwood") return {0.55, 0.38, 0.22};
  if (name == "glass") return {0.70, 0.85, 0.90};
  if (name == "ceramic") return {0.90, 0.88, 0.85};
  if (name == "rubber") return {0.15, 0.15, 0.15};
  if (name == "fabric") return {0.40, 0.45, 0.70};
  if (name == "cardboard") return {0.70, 0.55, 0.35};
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : name) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  Rng rng(h);
  return {rng.uniform(), rng.uniform(), rng.uniform()};
}

Vec synth_appearance(const ShapeSpec& s, std::string_view material_name, std::uint64_t noise_seed,
                     double sigma) {
  s.validate();
  const auto ext = s.extents();
  const auto color = material_color(material_name);
  Vec a{ext[0] / 0.5, ext[1] / 0.5, silhouette_fill(s), color[0], color[1], color[2]};
  if (sigma > 0.0) {
    Rng rng(noise_seed);
    for (double& v : a) v += sigma * rng.normal();
  }
  return a;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test_seen: return "test_seen";
    case Split::test_unseen: return "test_unseen";
  }
  return "train";
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test_seen") return Split::test_seen;
  if (s == "test_unseen") return Split::test_unseen;
  throw FormatError("unknown split '" + std::string(s) + "'");
}

void GeneratorConfig::validate() const {
  if (train_count < 1 || test_count < 1) throw ConfigError("generator: split sizes must be >= 1");
  if (!(unseen_fraction >= 0.0 && unseen_fraction < 1.0)) {
    throw ConfigError("generator: unseen fraction must lie in [0, 1)");
  }
  if (!(fill_min > 0.0 && fill_min <= fill_max && fill_max <= 1.0)) {
    throw ConfigError("generator: fill range must lie in (0, 1]");
  }
  if (!(dim_min > 0.0 && dim_min < dim_max)) throw ConfigError("generator: bad dimension range");
  if (!(appearance_noise >= 0.0) || !(scale_jitter >= 0.0)) {
    throw ConfigError("generator: noise levels must be >= 0");
  }
  const double frame = render.footprint * static_cast<double>(render.resolution);
  if (dim_max > frame) throw ConfigError("generator: largest shape does not fit the frame");
}

std::vector<const Sample*> Dataset::split(Split s) const {
  std::vector<const Sample*> out;
  for (const auto& x : samples) {
    if (x.split == s) out.push_back(&x);
  }
  return out;
}

std::vector<const Sample*> Dataset::test() const {
  std::vector<const Sample*> out;
  for (const auto& x : samples) {
    if (x.split != Split::train) out.push_back(&x);
  }
  return out;
}

std::string material_phrase(const MaterialEntry& e, Rng& rng) {
  static const char* kTemplates[] = {"%s", "It is primarily made of %s.", "mostly %s",
                                     "The object appears to be %s.", "%s, smooth finish"};
  std::vector<std::string> names{e.name};
  names.insert(names.end(), e.aliases.begin(), e.aliases.end());
  const std::string& word = names[rng.below(names.size())];
  std::string t = kTemplates[rng.below(std::size(kTemplates))];
  t.replace(t.find("%s"), 2, word);
  return t;
}

namespace {

ShapeSpec draw_shape(ShapeKind kind, const GeneratorConfig& cfg, Rng& rng) {
  const double fill = rng.uniform(cfg.fill_min, cfg.fill_max);
  const double rmin = 0.5 * cfg.dim_min;
  const double rmax = 0.5 * cfg.dim_max;
  switch (kind) {
    case ShapeKind::box: {
      const double w = rng.log_uniform(cfg.dim_min, cfg.dim_max);
      const double h = rng.log_uniform(cfg.dim_min, cfg.dim_max);
      const double d = std::sqrt(w * h) * rng.log_uniform(0.6, 1.6);
      return ShapeSpec::box(w, h, d, fill);
    }
    case ShapeKind::cylinder: {
      const double r = rng.log_uniform(rmin, rmax);
      const double h = rng.log_uniform(cfg.dim_min, cfg.dim_max);
      return ShapeSpec::cylinder(r, h, fill);
    }
    case ShapeKind::sphere: return ShapeSpec::sphere(rng.log_uniform(rmin, rmax), fill);
  }
  return ShapeSpec::sphere(rmin, fill);
}

}  // namespace

Dataset generate_dataset(const GeneratorConfig& cfg, const MaterialVocab& vocab, std::uint64_t seed) {
  cfg.validate();
  if (vocab.empty()) throw ConfigError("generate_dataset: empty vocabulary");
  const ShapeKind kinds[] = {ShapeKind::box, ShapeKind::cylinder, ShapeKind::sphere};

  struct Category {
    ShapeKind kind;
    MaterialId material;
    std::string name;
  };
  std::vector<Category> cats;
  for (ShapeKind k : kinds) {
    for (MaterialId m = 0; m < vocab.size(); ++m) {
      cats.push_back({k, m, std::string(to_string(k)) + "/" + vocab.entry(m).name});
    }
  }
  if (cats.size() < 2) throw ConfigError("generate_dataset: need at least 2 categories");
  const auto n_unseen = static_cast<std::size_t>(std::lround(cfg.unseen_fraction * static_cast<double>(cats.size())));
  if (n_unseen >= cats.size() || (cfg.unseen_fraction > 0.0 && n_unseen == 0)) {
    throw ConfigError("generate_dataset: too few categories for the requested hold-out");
  }

  Dataset ds;
  ds.vocab = vocab;
  for (const auto& c : cats) ds.categories.push_back(c.name);

  // Hold out categories, keeping at least one seen category per material.
  Rng split_rng(Rng::derive(seed, 0xC47));
  std::vector<std::size_t> order(cats.size());
  std::vector<bool> unseen(cats.size(), false);
  for (int attempt = 0;; ++attempt) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[split_rng.below(i)]);
    std::fill(unseen.begin(), unseen.end(), false);
    for (std::size_t i = 0; i < n_unseen; ++i) unseen[order[i]] = true;
    std::vector<int> seen_per_material(vocab.size(), 0);
    for (std::size_t i = 0; i < cats.size(); ++i) {
      if (!unseen[i]) ++seen_per_material[cats[i].material];
    }
    if (std::all_of(seen_per_material.begin(), seen_per_material.end(), [](int c) { return c > 0; })) break;
    if (attempt > 1000) throw ConfigError("generate_dataset: cannot keep every material seen");
  }
  std::vector<std::size_t> seen_idx;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    if (unseen[i]) {
      ds.unseen_categories.push_back(cats[i].name);
    } else {
      seen_idx.push_back(i);
    }
  }
  std::sort(ds.unseen_categories.begin(), ds.unseen_categories.end());

  const std::size_t total = cfg.train_count + cfg.test_count;
  ds.samples.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    Rng rng(Rng::derive(seed, i + 1));
    const bool is_train = i < cfg.train_count;
    const std::size_t ci = is_train ? seen_idx[rng.below(seen_idx.size())] : rng.below(cats.size());
    const auto& cat = cats[ci];
    const auto& entry = vocab.entry(cat.material);

    Sample s;
    char id[32];
    std::snprintf(id, sizeof(id), "s%06zu", i);
    s.id = id;
    s.shape = draw_shape(cat.kind, cfg, rng);
    s.material = cat.material;
    s.material_name = entry.name;
    s.density = rng.uniform(entry.rho_lo, entry.rho_hi);
    s.volume = analytic_volume(s.shape);
    s.mass = s.volume * s.density;
    s.footprint = cfg.render.footprint;
    RenderConfig rc = cfg.render;
    if (cfg.scale_jitter > 0.0) rc.footprint /= std::exp(cfg.scale_jitter * rng.normal());
    s.depth = render_depth(s.shape, rc);
    s.appearance = synth_appearance(s.shape, entry.name, rng.next(), cfg.appearance_noise);
    s.material_text = material_phrase(entry, rng);
    s.category = cat.name;
    s.split = is_train ? Split::train : (unseen[ci] ? Split::test_unseen : Split::test_seen);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace physmass
