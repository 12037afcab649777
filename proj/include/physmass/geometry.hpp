#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "physmass/dense.hpp"
#include "physmass/layernorm.hpp"
#include "physmass/rng.hpp"
#include "physmass/tensor.hpp"

namespace physmass {

/// Per-pixel depth in meters with an object mask. Index = v * width + u.
struct DepthMap {
  std::size_t width = 0;
  std::size_t height = 0;
  Vec depth;
  std::vector<std::uint8_t> mask;

  DepthMap() = default;
  DepthMap(std::size_t w, std::size_t h) : width(w), height(h), depth(w * h, 0.0), mask(w * h, 0) {}

  std::size_t index(std::size_t u, std::size_t v) const { return v * width + u; }
  std::size_t masked_count() const;
  // Throws DimensionError / DegenerateInputError when the invariants fail.
  void validate() const;

  bool operator==(const DepthMap&) const = default;
};

/// Pixel-space box; x_max / y_max are exclusive edges.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
};

// Tight box around the masked-in pixels.
BBox mask_bbox(const DepthMap& d);

struct PointCloud {
  std::vector<std::array<double, 3>> points;

  std::size_t size() const { return points.size(); }
  bool operator==(const PointCloud&) const = default;
};

struct OrthographicCamera {
  double scale = 1.0;  // meters per pixel
};

struct PinholeCamera {
  double focal_px = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

using Camera = std::variant<OrthographicCamera, PinholeCamera>;

double bbox_diagonal(const BBox& b);

// Masked-in depths divided by the box diagonal; mask untouched.
DepthMap normalize_depth(const DepthMap& d, const BBox& b);

// One point per masked-in pixel, then centroid-centered unless `center` is false.
PointCloud unproject(const DepthMap& d, const Camera& camera, bool center = true);

// Exactly n points: without replacement when the cloud is large enough.
PointCloud sample_points(const PointCloud& pc, std::size_t n, std::uint64_t seed);

PointCloud center_cloud(PointCloud pc);
std::array<double, 3> cloud_centroid(const PointCloud& pc);
// max - min of one coordinate.
double cloud_extent(const PointCloud& pc, int axis);

/// Volume estimate from an uncentered orthographic cloud (one point per masked
/// pixel). Each pixel contributes footprint^2 times twice its relief above the
/// farthest visible point, which is exact for shapes symmetric about their
/// silhouette plane. Flat clouds fall back to area * sqrt(area).
double cloud_volume_proxy(const PointCloud& pc, double footprint);

/// Shared per-point MLP, coordinate-wise max-pool, post-pool MLP, LayerNorm.
struct PointEncoderParams {
  Mlp point_mlp;  // 3 -> ... -> D
  Mlp post_mlp;   // D -> ... -> D
  LayerNormParams norm;
  std::size_t num_points = 1024;

  std::size_t output_dim() const { return norm.dim(); }
  void validate() const;

  static PointEncoderParams init(std::size_t num_points, std::size_t point_hidden, std::size_t dim,
                                 Rng& rng);
};

struct PointEncoderTrace {
  std::vector<std::size_t> argmax;  // winning point per pooled channel
  Vec pooled;
  MlpTrace post;
  Vec normalized_input;  // input to the LayerNorm
};

struct PointEncoderGrad {
  MlpGrad point_mlp;
  MlpGrad post_mlp;
  Vec norm_gain;
  Vec norm_shift;

  PointEncoderGrad() = default;
  explicit PointEncoderGrad(const PointEncoderParams& p);
  void zero();
};

Vec encode_points(const PointEncoderParams& params, const PointCloud& pc,
                  PointEncoderTrace* trace = nullptr);

// Max-pool ties route to the lowest point index. Returns d/d(points) when
// grad_points is non-null.
void encode_points_backward(const PointEncoderParams& params, const PointCloud& pc,
                            const PointEncoderTrace& trace, std::span<const double> grad_out,
                            PointEncoderGrad& acc,
                            std::vector<std::array<double, 3>>* grad_points = nullptr);

}  // namespace physmass
