#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "tumorsynth/core/rng.hpp"
#include "tumorsynth/texture/texture.hpp"

using namespace tumorsynth;
using namespace tumorsynth::texture;

namespace {

double binomial_pmf(int n, int k, double p) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                  (n - k) * std::log1p(-p));
}

std::pair<double, double> mean_std(std::span<const float> v) {
  double s = 0, s2 = 0;
  for (float x : v) s += x;
  const double m = s / double(v.size());
  for (float x : v) s2 += (x - m) * (x - m);
  return {m, std::sqrt(s2 / double(v.size()))};
}

}  // namespace

TEST(SaltNoise, Extremes) {
  const Volume3 none = salt_noise({8, 8, 8}, 0.0, 5.0, 1);
  const Volume3 all = salt_noise({8, 8, 8}, 1.0, 5.0, 1);
  for (float x : none.values()) ASSERT_EQ(x, 0.0f);
  for (float x : all.values()) ASSERT_EQ(x, 5.0f);
  EXPECT_THROW(salt_noise({2, 2, 2}, 1.5, 1.0, 1), Error);
}

TEST(SaltNoise, DensityWithinBinomialBound) {
  for (Seed s = 0; s < 10; ++s) {
    const Volume3 v = salt_noise({64, 64, 64}, 0.05, 1.0, s);
    std::size_t hits = 0;
    for (float x : v.values()) hits += x != 0.0f;
    const double frac = double(hits) / double(v.size());
    EXPECT_GE(frac, 0.0466);
    EXPECT_LE(frac, 0.0534);
  }
}

TEST(SaltNoise, CountsFollowBinomialChiSquare) {
  const int n = 16 * 16 * 16;
  const double p = 0.05;
  const int seeds = 400;
  // Eight bins with roughly equal binomial mass.
  std::vector<int> upper;  // inclusive upper count of each bin
  double acc = 0;
  for (int k = 0; k <= n && upper.size() < 7; ++k) {
    acc += binomial_pmf(n, k, p);
    if (acc >= double(upper.size() + 1) / 8.0) upper.push_back(k);
  }
  upper.push_back(n);
  std::vector<double> expected(upper.size(), 0.0);
  for (int k = 0, b = 0; k <= n; ++k) {
    while (k > upper[b]) ++b;
    expected[b] += binomial_pmf(n, k, p) * seeds;
  }
  std::vector<int> observed(upper.size(), 0);
  for (int s = 0; s < seeds; ++s) {
    const Volume3 v = salt_noise({16, 16, 16}, p, 1.0, derive_seed(123, "chi", s));
    int hits = 0;
    for (float x : v.values()) hits += x != 0.0f;
    std::size_t b = 0;
    while (hits > upper[b]) ++b;
    ++observed[b];
  }
  double chi2 = 0;
  for (std::size_t b = 0; b < upper.size(); ++b) chi2 += std::pow(observed[b] - expected[b], 2) / expected[b];
  EXPECT_LT(chi2, 18.475);  // chi-square, 7 dof, alpha = 0.01
}

TEST(TextureField, FlatFieldAtTargetMean) {
  TextureParams p;
  p.salt_density = 0.0;
  p.target_std_hu = 0.0;
  p.target_mean_hu = 42.0;
  const Volume3 flat = texture_field({10, 10, 10}, {1, 1, 1}, p, 3);
  for (float x : flat.values()) ASSERT_FLOAT_EQ(x, 42.0f);
}

TEST(TextureField, FlatTextureError) {
  TextureParams p;
  p.salt_density = 1.0;
  try {
    texture_field({6, 6, 6}, {1, 1, 1}, p, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("flat texture"), std::string::npos);
  }
}

TEST(TextureField, StatisticsAndClip) {
  TextureParams p;
  for (Seed s = 0; s < 10; ++s) {
    const Volume3 t = texture_field({32, 32, 32}, {1, 1, 1}, p, s);
    const auto [m, sd] = mean_std(t.values());
    EXPECT_NEAR(m, p.target_mean_hu, 5.0);
    EXPECT_NEAR(sd, p.target_std_hu, 0.2 * p.target_std_hu);
    for (float x : t.values()) {
      ASSERT_GE(x, p.clip_lo_hu);
      ASSERT_LE(x, p.clip_hi_hu);
    }
  }
}

TEST(TextureField, ClipIsExactUnderHeavyTails) {
  TextureParams p;
  p.target_mean_hu = 0;
  p.target_std_hu = 80;
  p.clip_lo_hu = -20;
  p.clip_hi_hu = 30;
  const Volume3 t = texture_field({20, 20, 20}, {0.7, 0.7, 2.0}, p, 4);
  bool hit_lo = false, hit_hi = false;
  for (float x : t.values()) {
    ASSERT_GE(x, -20.0f);
    ASSERT_LE(x, 30.0f);
    hit_lo |= x == -20.0f;
    hit_hi |= x == 30.0f;
  }
  EXPECT_TRUE(hit_lo && hit_hi);
}

TEST(TextureField, Deterministic) {
  TextureParams p;
  EXPECT_EQ(texture_field({12, 12, 12}, {1, 1, 1}, p, 5), texture_field({12, 12, 12}, {1, 1, 1}, p, 5));
  EXPECT_NE(texture_field({12, 12, 12}, {1, 1, 1}, p, 5), texture_field({12, 12, 12}, {1, 1, 1}, p, 6));
}

TEST(TextureParams, Validation) {
  TextureParams p;
  p.clip_lo_hu = 10;
  p.clip_hi_hu = 0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.target_mean_hu = 500;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.sigma_mm = -1;
  EXPECT_THROW(p.validate(), Error);
}

class BlendTest : public ::testing::Test {
 protected:
  Geometry host_g = tstest::make_geometry({10, 10, 10});
  CropBox box{{2, 3, 4}, {4, 4, 4}};
  Geometry local_g = tstest::make_geometry({4, 4, 4});
};

TEST_F(BlendTest, ZeroWeightIsHost) {
  Volume3 host(host_g);
  Rng r(1);
  for (auto& x : host.values()) x = float(r.uniform(-100, 100));
  const Volume3 tex(local_g, 500.0f);
  const SoftMask3 w(local_g, 0.0f);
  EXPECT_EQ(blend(host, tex, w, box), host);
}

TEST_F(BlendTest, UnitWeightIsTexture) {
  const Volume3 host(host_g, 100.0f);
  Volume3 tex(local_g);
  Rng r(2);
  for (auto& x : tex.values()) x = float(r.uniform(-50, 50));
  const Volume3 out = blend(host, tex, SoftMask3(local_g, 1.0f), box);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t i = 0; i < 4; ++i) ASSERT_EQ(out(i + 2, j + 3, k + 4), tex(i, j, k));
  EXPECT_EQ(out(0, 0, 0), 100.0f);
}

TEST_F(BlendTest, HalfWeight) {
  const Volume3 out = blend(Volume3(host_g, 100.0f), Volume3(local_g, 20.0f), SoftMask3(local_g, 0.5f), box);
  EXPECT_FLOAT_EQ(out(3, 4, 5), 60.0f);
}

TEST_F(BlendTest, LocalityAndMonotone) {
  Volume3 host(host_g), tex(local_g);
  SoftMask3 w(local_g);
  Rng r(3);
  for (auto& x : host.values()) x = float(r.uniform(-100, 100));
  for (auto& x : tex.values()) x = float(r.uniform(-100, 100));
  for (auto& x : w.values()) x = r.bernoulli(0.3) ? 0.0f : float(r.uniform());
  const Volume3 out = blend(host, tex, w, box);
  for (std::size_t idx = 0; idx < host.size(); ++idx) {
    const auto p = host_g.unravel(idx);
    const Index3 l{p[0] - 2, p[1] - 3, p[2] - 4};
    if (!local_g.contains(l) || w(std::size_t(l[0]), std::size_t(l[1]), std::size_t(l[2])) == 0.0f) {
      ASSERT_EQ(out[idx], host[idx]);
    } else {
      const float t = tex(std::size_t(l[0]), std::size_t(l[1]), std::size_t(l[2]));
      ASSERT_GE(out[idx], std::min(host[idx], t) - 1e-4f);
      ASSERT_LE(out[idx], std::max(host[idx], t) + 1e-4f);
    }
  }
}

TEST_F(BlendTest, GeometryErrors) {
  const Volume3 host(host_g, 0.0f);
  EXPECT_THROW(blend(host, Volume3(tstest::make_geometry({3, 4, 4})), SoftMask3(local_g), box), Error);
  EXPECT_THROW(blend(host, Volume3(local_g), SoftMask3(local_g), CropBox{{8, 8, 8}, {4, 4, 4}}), Error);
}
