#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "physmass/errors.hpp"
#include "physmass/fusion.hpp"
#include "support/gradient_cases.hpp"

using namespace physmass;
using physmass::testing::normal_vec;

namespace {

ModalFeatures triple(Vec a, Vec b, Vec c) {
  ModalFeatures f;
  f.image = std::move(a);
  f.geometry = std::move(b);
  f.text = std::move(c);
  return f;
}

// Gate MLP whose logits are the given constants for every input.
GatedFusionParams constant_gate(std::size_t dim, const Vec& logits) {
  Rng rng(0);
  auto p = GatedFusionParams::init(dim, logits.size(), rng);
  p.gate.layers.back().weight.fill(0.0);
  p.gate.layers.back().bias = logits;
  return p;
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("fuse_concat examples") {
  const auto out = fuse_concat(triple({1, 2}, {3, 4}, {5, 6}));
  CHECK(out.vector == Vec{1, 2, 3, 4, 5, 6});
  CHECK_FALSE(out.gate_weights.has_value());

  Rng rng(1);
  const auto wide = fuse_concat(triple(normal_vec(rng, 512), normal_vec(rng, 512), normal_vec(rng, 512)));
  CHECK(wide.vector.size() == 1536);
  CHECK(fuse_concat(triple(Vec(3, 0.0), Vec(3, 0.0), Vec(3, 0.0))).vector == Vec(9, 0.0));
  CHECK_THROWS_AS(fuse_concat(triple({1, 2}, {3}, {5, 6})), DimensionError);
  CHECK_THROWS_AS(fuse_concat(ModalFeatures{}), DimensionError);

  ModalFeatures two;
  two.image = Vec{1, 2};
  two.text = Vec{5, 6};
  CHECK(fuse_concat(two).vector == Vec{1, 2, 5, 6});
}

TEST_CASE("fuse_concat is injective") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    auto a = triple(normal_vec(rng, 4), normal_vec(rng, 4), normal_vec(rng, 4));
    auto b = a;
    if (trial % 2 == 0) (*b.get(static_cast<Modality>(rng.below(3))))[rng.below(4)] += 1e-9;
    const bool same_in = a.image == b.image && a.geometry == b.geometry && a.text == b.text;
    CHECK((fuse_concat(a).vector == fuse_concat(b).vector) == same_in);
    // The blocks read back the inputs.
    const auto v = fuse_concat(a).vector;
    CHECK(Vec(v.begin() + 4, v.begin() + 8) == *a.geometry);
  }
}

TEST_CASE("self-attention with zero query and key averages the values") {
  Rng rng(3);
  auto p = SelfAttentionParams::init(5, rng);
  p.query.weight.fill(0.0);
  p.query.bias.assign(5, 0.0);
  p.key.weight.fill(0.0);
  p.key.bias.assign(5, 0.0);
  const auto f = triple(normal_vec(rng, 5), normal_vec(rng, 5), normal_vec(rng, 5));
  const auto out = fuse_self_attention(p, f);
  const auto v0 = dense_forward(p.value, *f.image), v1 = dense_forward(p.value, *f.geometry),
             v2 = dense_forward(p.value, *f.text);
  REQUIRE(out.vector.size() == 5);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(out.vector[i] == doctest::Approx((v0[i] + v1[i] + v2[i]) / 3.0).epsilon(1e-14));
  CHECK_FALSE(out.gate_weights.has_value());
}

TEST_CASE("self-attention over identical tokens returns that token's value") {
  Rng rng(4);
  const auto p = SelfAttentionParams::init(6, rng);
  const Vec t = normal_vec(rng, 6);
  const auto out = fuse_self_attention(p, triple(t, t, t));
  const auto v = dense_forward(p.value, t);
  for (std::size_t i = 0; i < 6; ++i) CHECK(out.vector[i] == doctest::Approx(v[i]).epsilon(1e-14));
}

TEST_CASE("fuse_gated examples") {
  const auto f = triple({1, -2, 3}, {4, 0.5, -6}, {7, 8, 9});
  const auto equal = fuse_gated(constant_gate(3, {0.7, 0.7, 0.7}), f);
  REQUIRE(equal.gate_weights.has_value());
  for (double w : *equal.gate_weights) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(equal.vector[i] ==
          doctest::Approx(((*f.image)[i] + (*f.geometry)[i] + (*f.text)[i]) / 3.0).epsilon(1e-14));

  // Approaching the one-hot limit.
  double prev = 1e300;
  for (double L : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const auto out = fuse_gated(constant_gate(3, {L, -L, -L}), f);
    double dist = 0.0;
    for (std::size_t i = 0; i < 3; ++i) dist = std::max(dist, std::fabs(out.vector[i] - (*f.image)[i]));
    CHECK(dist < prev);
    prev = dist;
  }
  CHECK(prev < 1e-5);
  const auto hard = fuse_gated(constant_gate(3, {0.0, -1e6, -1e6}), f);
  CHECK(hard.vector == *f.image);

  CHECK_THROWS_AS(fuse_gated(constant_gate(3, {0, 0, 0}), triple({1, 2}, {3, 4}, {5, 6})), DimensionError);
}

TEST_CASE("gate weights live on the simplex and outputs in the convex hull") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t dim = 2 + rng.below(8);
    std::size_t tokens = 0;
    const auto f = physmass::testing::random_features(rng, dim, tokens);
    auto p = FusionParams::init(FusionKind::gated, dim, tokens, rng);
    for (auto& w : p.gated.gate.layers.back().weight.data) w *= 1.0 + 10.0 * rng.uniform();
    const auto out = fuse(p, f);
    REQUIRE(out.gate_weights.has_value());
    double sum = 0.0;
    for (int m = 0; m < 3; ++m) {
      const double w = (*out.gate_weights)[m];
      CHECK(w >= 0.0);
      if (!f.get(static_cast<Modality>(m))) CHECK(w == 0.0);
      sum += w;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-9);
    for (std::size_t i = 0; i < dim; ++i) {
      double lo = 1e300, hi = -1e300;
      for (auto m : f.present()) {
        lo = std::min(lo, (*f.get(m))[i]);
        hi = std::max(hi, (*f.get(m))[i]);
      }
      CHECK(out.vector[i] >= lo - 1e-12);
      CHECK(out.vector[i] <= hi + 1e-12);
    }
  }
}

TEST_CASE("softmax is shift invariant") {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    // Logits on a 1/1024 grid and integer shifts add without rounding, so the
    // max-subtracted form must agree bit for bit.
    Vec l(3);
    for (auto& x : l) x = static_cast<double>(static_cast<int>(rng.below(8192)) - 4096) / 1024.0;
    const double c = static_cast<double>(static_cast<int>(rng.below(2001)) - 1000);
    Vec shifted = l;
    for (auto& x : shifted) x += c;
    const auto a = softmax(l), b = softmax(shifted);
    CHECK(std::memcmp(a.data(), b.data(), 3 * sizeof(double)) == 0);

    // Arbitrary reals: the shifted sum can round, so agreement is to a few ulps.
    Vec r = normal_vec(rng, 3, 5.0), rs = r;
    const double cr = rng.normal() * 100.0;
    for (auto& x : rs) x += cr;
    const auto ra = softmax(r), rb = softmax(rs);
    for (int k = 0; k < 3; ++k) CHECK(ra[k] == doctest::Approx(rb[k]).epsilon(1e-12));
  }
  const auto big = softmax(Vec{1000.0, 1000.0, -1000.0});
  CHECK(big[0] == 0.5);
  CHECK(big[2] == 0.0);
  CHECK_THROWS_AS(softmax(Vec{}), DimensionError);
}

TEST_CASE("gated output is unchanged by a common logit shift") {
  Rng rng(7);
  const auto f = triple(normal_vec(rng, 4), normal_vec(rng, 4), normal_vec(rng, 4));
  auto a = GatedFusionParams::init(4, 3, rng);
  auto b = a;
  for (auto& x : b.gate.layers.back().bias) x += 8.0;
  const auto oa = fuse_gated(a, f), ob = fuse_gated(b, f);
  for (int k = 0; k < 3; ++k) CHECK((*oa.gate_weights)[k] == doctest::Approx((*ob.gate_weights)[k]).epsilon(1e-12));
  for (std::size_t i = 0; i < 4; ++i) CHECK(oa.vector[i] == doctest::Approx(ob.vector[i]).epsilon(1e-12));
}

TEST_CASE("fuse dispatches and validates") {
  Rng rng(8);
  const auto f = triple(normal_vec(rng, 4), normal_vec(rng, 4), normal_vec(rng, 4));
  for (auto k : {FusionKind::concat, FusionKind::self_attention, FusionKind::gated}) {
    CHECK(fusion_from_string(to_string(k)) == k);
    const auto p = FusionParams::init(k, 4, 3, rng);
    const auto out = fuse(p, f);
    CHECK(out.vector.size() == p.output_dim());
    CHECK(out.gate_weights.has_value() == (k == FusionKind::gated));
    const auto two = FusionParams::init(k, 4, 2, rng);
    CHECK_THROWS_AS(fuse(two, f), DimensionError);
    const auto wide = FusionParams::init(k, 5, 3, rng);
    CHECK_THROWS_AS(fuse(wide, f), DimensionError);
  }
  Rng r1(10), r2(10);
  const auto gp = FusionParams::init(FusionKind::gated, 4, 3, r1);
  CHECK(fuse(gp, f).vector == fuse_gated(gp.gated, f).vector);
  const auto ap = FusionParams::init(FusionKind::self_attention, 4, 3, r2);
  CHECK(fuse(ap, f).vector == fuse_self_attention(ap.attention, f).vector);
  CHECK_THROWS_AS(fusion_from_string("sum"), ConfigError);
  CHECK_THROWS_AS(FusionParams::init(FusionKind::gated, 1, 3, rng), DimensionError);
  CHECK_THROWS_AS(FusionParams::init(FusionKind::gated, 4, 4, rng), DimensionError);
}

TEST_CASE("single present token") {
  Rng rng(9);
  ModalFeatures f;
  f.geometry = normal_vec(rng, 6);
  const auto g = FusionParams::init(FusionKind::gated, 6, 1, rng);
  const auto out = fuse(g, f);
  CHECK(out.vector == *f.geometry);
  CHECK(*out.gate_weights == std::array<double, 3>{0.0, 1.0, 0.0});
  CHECK(fuse(FusionParams::init(FusionKind::concat, 6, 1, rng), f).vector == *f.geometry);
}

TEST_CASE("fusion gradients match finite differences") {
  for (auto k : {FusionKind::self_attention, FusionKind::gated, FusionKind::concat})
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      CAPTURE(to_string(k));
      CAPTURE(seed);
      CHECK(physmass::testing::fusion_case(seed, k) < 1e-4);
    }
}

}  // TEST_SUITE
