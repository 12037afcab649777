#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "physmass/geometry.hpp"
#include "physmass/semantics.hpp"
#include "physmass/tensor.hpp"

namespace physmass {

enum class ShapeKind { box, cylinder, sphere };

std::string_view to_string(ShapeKind k);
ShapeKind shape_kind_from_string(std::string_view s);

/// Primitive solid in meters. dims: box (w, h, d); cylinder (r, h, -);
/// sphere (r, -, -). Cylinders stand with their axis along image y.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::box;
  std::array<double, 3> dims{0.0, 0.0, 0.0};
  double fill_ratio = 1.0;

  static ShapeSpec box(double w, double h, double d, double fill = 1.0);
  static ShapeSpec cylinder(double r, double h, double fill = 1.0);
  static ShapeSpec sphere(double r, double fill = 1.0);

  void validate() const;
  // Image-plane extents (width, height) and depth extent.
  std::array<double, 3> extents() const;
  ShapeSpec scaled(double s) const;
};

double geometric_volume(const ShapeSpec& s);
// Geometric volume times fill ratio.
double analytic_volume(const ShapeSpec& s);
// Silhouette area over its bounding-rectangle area (scale free).
double silhouette_fill(const ShapeSpec& s);

struct RenderConfig {
  std::size_t resolution = 64;
  double footprint = 0.01;         // meters per pixel
  double camera_distance = 1.5;    // distance to the shape center
};

/// Orthographic front view, shape centered in frame. Pixel (u, v) samples
/// the point at its center.
DepthMap render_depth(const ShapeSpec& s, const RenderConfig& cfg);

// Nominal RGB code per material name; unknown names hash to a color.
std::array<double, 3> material_color(std::string_view material_name);

inline constexpr std::size_t kAppearanceDim = 6;

/// Image-plane extents / 0.5 m, silhouette fill, RGB code, each plus
/// N(0, sigma) noise drawn from noise_seed. Depth extent is not visible.
Vec synth_appearance(const ShapeSpec& s, std::string_view material_name, std::uint64_t noise_seed,
                     double sigma = 0.1);

enum class Split { train, test_seen, test_unseen };
std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

struct Sample {
  std::string id;
  ShapeSpec shape;
  MaterialId material = 0;
  std::string material_name;
  double volume = 0.0;   // effective (fill-weighted) volume, m^3
  double density = 0.0;  // kg/m^3
  double mass = 0.0;     // kg
  double footprint = 0.0;
  DepthMap depth;
  Vec appearance;
  std::string material_text;
  std::string category;
  Split split = Split::train;
};

struct GeneratorConfig {
  std::size_t train_count = 2000;
  std::size_t test_count = 500;
  double unseen_fraction = 0.25;
  RenderConfig render{};
  double appearance_noise = 0.1;
  double scale_jitter = 0.0;  // log-normal sigma on apparent size; 0 = off
  double fill_min = 0.3;
  double fill_max = 1.0;
  double dim_min = 0.04;  // box side / cylinder height, meters
  double dim_max = 0.5;

  void validate() const;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> categories;         // all (kind/material) pairs
  std::vector<std::string> unseen_categories;  // held out of train
  MaterialVocab vocab;

  std::vector<const Sample*> split(Split s) const;
  std::vector<const Sample*> test() const;
};

Dataset generate_dataset(const GeneratorConfig& cfg, const MaterialVocab& vocab, std::uint64_t seed);

// Free text naming the material the way a captioner would.
std::string material_phrase(const MaterialEntry& e, Rng& rng);

}  // namespace physmass
