#include "physmass/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "physmass/errors.hpp"

namespace physmass {

std::size_t DepthMap::masked_count() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
}

void DepthMap::validate() const {
  if (depth.size() != width * height || mask.size() != width * height) {
    throw DimensionError("depth map storage does not match " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (mask[i] && !(std::isfinite(depth[i]) && depth[i] > 0.0)) {
      throw DomainError("depth map: masked-in depth must be finite and positive at pixel " +
                        std::to_string(i));
    }
  }
  if (masked_count() < 3) throw DegenerateInputError("depth map: fewer than 3 masked-in pixels");
}

BBox mask_bbox(const DepthMap& d) {
  std::size_t u0 = d.width, v0 = d.height, u1 = 0, v1 = 0;
  bool any = false;
  for (std::size_t v = 0; v < d.height; ++v) {
    for (std::size_t u = 0; u < d.width; ++u) {
      if (!d.mask[d.index(u, v)]) continue;
      any = true;
      u0 = std::min(u0, u);
      v0 = std::min(v0, v);
      u1 = std::max(u1, u);
      v1 = std::max(v1, v);
    }
  }
  if (!any) throw DegenerateInputError("mask_bbox: empty mask");
  return {static_cast<double>(u0), static_cast<double>(v0), static_cast<double>(u1 + 1),
          static_cast<double>(v1 + 1)};
}

double bbox_diagonal(const BBox& b) {
  const double w = b.x_max - b.x_min;
  const double h = b.y_max - b.y_min;
  if (!(w > 0.0) || !(h > 0.0)) {
    throw DimensionError("bbox_diagonal: degenerate box (" + std::to_string(w) + " x " +
                         std::to_string(h) + ")");
  }
  return std::sqrt(w * w + h * h);
}

DepthMap normalize_depth(const DepthMap& d, const BBox& b) {
  const double diag = bbox_diagonal(b);
  DepthMap out = d;
  for (std::size_t i = 0; i < out.depth.size(); ++i) {
    if (out.mask[i]) out.depth[i] = d.depth[i] / diag;
  }
  return out;
}

std::array<double, 3> cloud_centroid(const PointCloud& pc) {
  if (pc.points.empty()) throw DegenerateInputError("centroid of an empty cloud");
  std::array<double, 3> c{0.0, 0.0, 0.0};
  for (const auto& p : pc.points) {
    for (int k = 0; k < 3; ++k) c[k] += p[k];
  }
  for (double& v : c) v /= static_cast<double>(pc.points.size());
  return c;
}

PointCloud center_cloud(PointCloud pc) {
  const auto c = cloud_centroid(pc);
  for (auto& p : pc.points) {
    for (int k = 0; k < 3; ++k) p[k] -= c[k];
  }
  return pc;
}

PointCloud unproject(const DepthMap& d, const Camera& camera, bool center) {
  if (d.depth.size() != d.width * d.height || d.mask.size() != d.width * d.height) {
    throw DimensionError("unproject: depth map storage mismatch");
  }
  if (d.masked_count() < 3) throw DegenerateInputError("unproject: fewer than 3 masked-in pixels");
  PointCloud pc;
  pc.points.reserve(d.masked_count());
  for (std::size_t v = 0; v < d.height; ++v) {
    for (std::size_t u = 0; u < d.width; ++u) {
      const std::size_t i = d.index(u, v);
      if (!d.mask[i]) continue;
      const double z = d.depth[i];
      const double uu = static_cast<double>(u);
      const double vv = static_cast<double>(v);
      if (const auto* ortho = std::get_if<OrthographicCamera>(&camera)) {
        pc.points.push_back({uu * ortho->scale, vv * ortho->scale, z});
      } else {
        const auto& pin = std::get<PinholeCamera>(camera);
        pc.points.push_back({(uu - pin.cx) * z / pin.focal_px, (vv - pin.cy) * z / pin.focal_px, z});
      }
    }
  }
  return center ? center_cloud(std::move(pc)) : pc;
}

PointCloud sample_points(const PointCloud& pc, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DimensionError("sample_points: n must be positive");
  if (pc.points.empty()) throw DegenerateInputError("sample_points: empty cloud");
  Rng rng(seed);
  PointCloud out;
  out.points.reserve(n);
  if (pc.size() >= n) {
    std::vector<std::size_t> idx(pc.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
      std::swap(idx[i], idx[j]);
      out.points.push_back(pc.points[idx[i]]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out.points.push_back(pc.points[rng.below(pc.size())]);
  }
  return out;
}

double cloud_extent(const PointCloud& pc, int axis) {
  if (pc.points.empty()) throw DegenerateInputError("cloud_extent: empty cloud");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : pc.points) {
    lo = std::min(lo, p[axis]);
    hi = std::max(hi, p[axis]);
  }
  return hi - lo;
}

double cloud_volume_proxy(const PointCloud& pc, double footprint) {
  if (pc.points.empty()) throw DegenerateInputError("cloud_volume_proxy: empty cloud");
  const double pixel_area = footprint * footprint;
  double zmax = -std::numeric_limits<double>::infinity();
  for (const auto& p : pc.points) zmax = std::max(zmax, p[2]);
  double volume = 0.0;
  double max_relief = 0.0;
  for (const auto& p : pc.points) {
    const double relief = zmax - p[2];
    max_relief = std::max(max_relief, relief);
    volume += 2.0 * relief * pixel_area;
  }
  if (max_relief < 0.5 * footprint) {
    const double area = pixel_area * static_cast<double>(pc.size());
    return area * std::sqrt(area);
  }
  return volume;
}

// ---------------------------------------------------------------------------
// Point encoder

void PointEncoderParams::validate() const {
  if (point_mlp.layers.empty() || post_mlp.layers.empty()) {
    throw DimensionError("point encoder: empty MLP");
  }
  if (point_mlp.in_dim() != 3) throw DimensionError("point encoder: per-point input must be 3");
  if (point_mlp.out_dim() != post_mlp.in_dim() || post_mlp.out_dim() != norm.dim()) {
    throw DimensionError("point encoder: inconsistent feature widths");
  }
  if (num_points == 0) throw DimensionError("point encoder: num_points must be positive");
}

PointEncoderParams PointEncoderParams::init(std::size_t num_points, std::size_t point_hidden,
                                            std::size_t dim, Rng& rng) {
  PointEncoderParams p;
  p.point_mlp = make_mlp(3, {point_hidden, dim}, Activation::relu, Activation::relu, rng);
  p.post_mlp = make_mlp(dim, {dim}, Activation::identity, Activation::identity, rng);
  p.norm = LayerNormParams(dim);
  p.num_points = num_points;
  return p;
}

PointEncoderGrad::PointEncoderGrad(const PointEncoderParams& p)
    : point_mlp(p.point_mlp),
      post_mlp(p.post_mlp),
      norm_gain(p.norm.dim(), 0.0),
      norm_shift(p.norm.dim(), 0.0) {}

void PointEncoderGrad::zero() {
  point_mlp.zero();
  post_mlp.zero();
  std::fill(norm_gain.begin(), norm_gain.end(), 0.0);
  std::fill(norm_shift.begin(), norm_shift.end(), 0.0);
}

namespace {

// Per-point forward with reusable buffers; returns the final activation in `b`.
void point_forward(const Mlp& mlp, const std::array<double, 3>& p, Vec& a, Vec& b) {
  a.assign(p.begin(), p.end());
  for (const auto& layer : mlp.layers) {
    const std::size_t in = layer.in_dim();
    const std::size_t out = layer.out_dim();
    b.resize(out);
    const double* w = layer.weight.data.data();
    // Same summation order as dense_preactivation.
    for (std::size_t r = 0; r < out; ++r) {
      b[r] = activate(layer.activation, dot_kernel(w + r * in, a.data(), in) + layer.bias[r]);
    }
    std::swap(a, b);
  }
  std::swap(a, b);
}

}  // namespace

Vec encode_points(const PointEncoderParams& params, const PointCloud& pc, PointEncoderTrace* trace) {
  params.validate();
  if (pc.size() != params.num_points) {
    throw DimensionError("encode_points: expected " + std::to_string(params.num_points) +
                         " points, got " + std::to_string(pc.size()));
  }
  const std::size_t dim = params.point_mlp.out_dim();
  Vec pooled(dim, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> argmax(dim, 0);
  Vec a, b;
  for (std::size_t i = 0; i < pc.size(); ++i) {
    point_forward(params.point_mlp, pc.points[i], a, b);
    for (std::size_t c = 0; c < dim; ++c) {
      if (b[c] > pooled[c]) {  // strict: ties keep the lowest index
        pooled[c] = b[c];
        argmax[c] = i;
      }
    }
  }
  MlpTrace post_trace;
  Vec post = mlp_forward(params.post_mlp, pooled, trace ? &post_trace : nullptr);
  Vec out = layernorm_forward(params.norm, post);
  if (trace) {
    trace->argmax = std::move(argmax);
    trace->pooled = std::move(pooled);
    trace->post = std::move(post_trace);
    trace->normalized_input = std::move(post);
  }
  return out;
}

void encode_points_backward(const PointEncoderParams& params, const PointCloud& pc,
                            const PointEncoderTrace& trace, std::span<const double> grad_out,
                            PointEncoderGrad& acc,
                            std::vector<std::array<double, 3>>* grad_points) {
  const auto ln = layernorm_backward(params.norm, trace.normalized_input, grad_out);
  for (std::size_t i = 0; i < ln.grad_gain.size(); ++i) {
    acc.norm_gain[i] += ln.grad_gain[i];
    acc.norm_shift[i] += ln.grad_shift[i];
  }
  const Vec grad_pooled = mlp_backward(params.post_mlp, trace.post, ln.grad_x, acc.post_mlp);

  if (grad_points) grad_points->assign(pc.size(), {0.0, 0.0, 0.0});

  // Group pooled-channel gradients by their winning point.
  const std::size_t dim = grad_pooled.size();
  std::vector<std::size_t> order(dim);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return trace.argmax[x] < trace.argmax[y]; });
  Vec g(dim, 0.0);
  MlpTrace pt;
  std::size_t k = 0;
  while (k < dim) {
    const std::size_t point = trace.argmax[order[k]];
    std::fill(g.begin(), g.end(), 0.0);
    bool any = false;
    for (; k < dim && trace.argmax[order[k]] == point; ++k) {
      g[order[k]] = grad_pooled[order[k]];
      any = any || grad_pooled[order[k]] != 0.0;
    }
    if (!any) continue;
    const auto& p = pc.points[point];
    mlp_forward(params.point_mlp, std::span<const double>(p.data(), 3), &pt);
    const Vec gp = mlp_backward(params.point_mlp, pt, g, acc.point_mlp);
    if (grad_points) {
      for (int c = 0; c < 3; ++c) (*grad_points)[point][c] += gp[c];
    }
  }
}

}  // namespace physmass
