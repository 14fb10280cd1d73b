#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "tumorsynth/core/components.hpp"
#include "tumorsynth/core/filters.hpp"
#include "tumorsynth/shape/shape.hpp"

using namespace tumorsynth;
using namespace tumorsynth::shape;

namespace {

double sphere_volume(double r) { return 4.0 / 3.0 * std::numbers::pi * r * r * r; }

}  // namespace

TEST(SizeClass, RangesAreContiguousFrom2To44) {
  EXPECT_DOUBLE_EQ(radius_range(SizeClass::Tiny).lo, 2.0);
  EXPECT_DOUBLE_EQ(radius_range(SizeClass::Large).hi, 44.0);
  for (int c = 0; c + 1 < 4; ++c) {
    EXPECT_DOUBLE_EQ(radius_range(kAllSizeClasses[c]).hi, radius_range(kAllSizeClasses[c + 1]).lo);
  }
  EXPECT_DOUBLE_EQ(radius_range(SizeClass::Small).hi, 10.0);
  for (auto c : kAllSizeClasses) EXPECT_EQ(parse_size_class(to_string(c)), c);
  EXPECT_FALSE(parse_size_class("huge"));
}

TEST(Ellipsoid, SphereVoxelCounts) {
  for (double r : {5.0, 8.0, 12.0}) {
    const Mask3 m = make_ellipsoid({r, r, r}, identity3(), {1, 1, 1});
    const double n = double(count_nonzero(m));
    EXPECT_NEAR(n, sphere_volume(r), 0.02 * sphere_volume(r)) << r;
    EXPECT_EQ(connected_components(m).size(), 1u);
  }
}

TEST(Ellipsoid, MatchesPointInEllipsoidOracle) {
  const Vec3 axes{6.0, 4.0, 3.0};
  const double c = std::cos(0.5), s = std::sin(0.5);
  const Mat3 rot{{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
  const Vec3 spacing{0.8, 0.8, 1.5};
  const Mask3 m = make_ellipsoid(axes, rot, spacing);
  const Index3 ctr = center_index(m.geometry());
  std::size_t expected = 0;
  for (std::size_t k = 0; k < m.dims()[2]; ++k)
    for (std::size_t j = 0; j < m.dims()[1]; ++j)
      for (std::size_t i = 0; i < m.dims()[0]; ++i) {
        const double p[3] = {(double(i) - double(ctr[0])) * spacing[0], (double(j) - double(ctr[1])) * spacing[1],
                             (double(k) - double(ctr[2])) * spacing[2]};
        double q = 0;
        for (int a = 0; a < 3; ++a) {
          // coordinate along principal axis a = column a of rot
          const double u = rot[0][a] * p[0] + rot[1][a] * p[1] + rot[2][a] * p[2];
          q += u * u / (axes[a] * axes[a]);
        }
        const bool inside = q <= 1.0 + 1e-9;
        expected += inside;
        ASSERT_EQ(m(i, j, k) != 0, inside) << i << "," << j << "," << k;
      }
  EXPECT_GT(expected, 0u);
  // Margin: no voxel on the crop border.
  const auto box = support_box(m);
  for (int a = 0; a < 3; ++a) {
    EXPECT_GE(box.offset[a], 1);
    EXPECT_LE(box.end()[a], std::int64_t(m.dims()[a]) - 1);
  }
}

TEST(Ellipsoid, RotatedSphereKeepsCount) {
  const std::size_t base = count_nonzero(make_ellipsoid({7, 7, 7}, identity3(), {1, 1, 1}));
  Rng r(3);
  for (int t = 0; t < 5; ++t) {
    EXPECT_EQ(count_nonzero(make_ellipsoid({7, 7, 7}, random_rotation(r), {1, 1, 1})), base);
  }
}

TEST(Ellipsoid, DegenerateAxis) {
  try {
    make_ellipsoid({0.3, 0.3, 0.3}, identity3(), {1, 1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate axis"), std::string::npos);
  }
}

TEST(RandomRotation, IsOrthonormal) {
  Rng r(4);
  for (int t = 0; t < 50; ++t) {
    const Mat3 m = random_rotation(r);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double dot = 0;
        for (int k = 0; k < 3; ++k) dot += m[k][a] * m[k][b];
        ASSERT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-12);
      }
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    ASSERT_NEAR(det, 1.0, 1e-12);
  }
}

TEST(ElasticDeform, ZeroSigmaIsIdentity) {
  const Mask3 m = make_ellipsoid({6, 5, 4}, identity3(), {1, 1, 1});
  ElasticParams p;
  p.displacement_sigma_mm = 0;
  EXPECT_EQ(elastic_deform(m, p, 1), m);
}

TEST(ElasticDeform, DeterministicAndSeedDependent) {
  const Mask3 m = make_ellipsoid({8, 8, 8}, identity3(), {1, 1, 1});
  const Mask3 a = elastic_deform(tumorsynth::pad(m, 3), {}, 10);
  const Mask3 b = elastic_deform(tumorsynth::pad(m, 3), {}, 10);
  const Mask3 c = elastic_deform(tumorsynth::pad(m, 3), {}, 11);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(a.geometry(), tumorsynth::pad(m, 3).geometry());
}

TEST(ElasticDeform, KeepsSphereConnectedAndVolumeBounded) {
  const Mask3 m = tumorsynth::pad(make_ellipsoid({8, 8, 8}, identity3(), {1, 1, 1}), 4);
  const double v0 = double(count_nonzero(m));
  for (Seed s = 0; s < 20; ++s) {
    const Mask3 d = elastic_deform(m, {}, s);
    EXPECT_EQ(connected_components(d).size(), 1u) << s;
    EXPECT_LE(std::abs(double(count_nonzero(d)) - v0) / v0, 0.30) << s;
  }
}

TEST(ElasticParams, FoldingGuard) {
  ElasticParams p;
  p.displacement_sigma_mm = 5.0;  // > control_spacing / 2
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.control_spacing_mm = 0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(SoftenMask, ZeroSigmaEqualsHard) {
  const Mask3 m = make_ellipsoid({5, 4, 3}, identity3(), {1, 1, 1});
  const SoftMask3 s = soften_mask(m, 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) ASSERT_EQ(s[i], m[i] ? 1.0f : 0.0f);
}

TEST(SoftenMask, EmptyStaysEmpty) {
  const Mask3 m(tstest::make_geometry({8, 8, 8}), 0);
  const SoftMask3 s = soften_mask(m, 2.0);
  for (float w : s.values()) ASSERT_EQ(w, 0.0f);
}

TEST(SoftenMask, MatchesBlurAndKeepsDeepInterior) {
  const double sigma = 1.5;
  const Mask3 m = tumorsynth::pad(make_ellipsoid({10, 10, 10}, identity3(), {1, 1, 1}), 6);
  const SoftMask3 s = soften_mask(m, sigma);
  const SoftMask3 ref = gaussian_blur(grid_cast<SoftMask3>(m), sigma);
  for (std::size_t i = 0; i < m.size(); ++i) {
    ASSERT_GE(s[i], 0.0f);
    ASSERT_LE(s[i], 1.0f);
    ASSERT_NEAR(s[i], std::clamp(ref[i], 0.0f, 1.0f), 1e-6);
  }
  // Voxels at least 3 sigma inside: a truncated 3-sigma kernel sees only mask.
  const auto g = m.geometry();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const auto p = g.unravel(i);
    bool deep = true;
    const int r = int(std::ceil(3 * sigma));
    for (int dz = -r; dz <= r && deep; ++dz)
      for (int dy = -r; dy <= r && deep; ++dy)
        for (int dx = -r; dx <= r && deep; ++dx) {
          if (dx * dx + dy * dy + dz * dz > 9 * sigma * sigma) continue;
          const Index3 q{p[0] + dx, p[1] + dy, p[2] + dz};
          if (!g.contains(q) || !m(std::size_t(q[0]), std::size_t(q[1]), std::size_t(q[2]))) deep = false;
        }
    if (deep) ASSERT_GE(s[i], 0.99f);
  }
}

namespace {

double soften_threshold_dice(double r, bool& subset) {
  const Mask3 m = tumorsynth::pad(make_ellipsoid({r, r, r}, identity3(), {1, 1, 1}), 4);
  const SoftMask3 s = soften_mask(m, std::max(1.0, 0.15 * r));
  std::size_t both = 0, a = 0, b = 0;
  subset = true;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const bool h = s[i] >= 0.5f;
    subset = subset && (!h || m[i]);
    a += h;
    b += m[i];
    both += h && m[i];
  }
  return 2.0 * double(both) / double(a + b);
}

}  // namespace

// A digital ball is lattice-convex, so every outside voxel is separated from
// it by a plane and a symmetric kernel puts less than half its mass inside:
// thresholding at 0.5 can only shrink the shape.
TEST(SoftenMask, ThresholdRecoversShape) {
  for (double r = 4.25; r <= 15.0; r += 0.25) {
    bool subset = false;
    EXPECT_GE(soften_threshold_dice(r, subset), 0.9) << r;
    EXPECT_TRUE(subset) << r;
  }
}

// At 1 mm spacing the 1 mm sigma floor erodes too much of a 4 mm ball.
TEST(SoftenMask, FourMillimetreBallFallsShort) {
  bool subset = false;
  const double dice = soften_threshold_dice(4.0, subset);
  EXPECT_TRUE(subset);
  EXPECT_NEAR(dice, 0.8826, 1e-3);
}

TEST(SampleShape, InvariantsPerClass) {
  for (auto cls : kAllSizeClasses) {
    const auto range = radius_range(cls);
    for (Seed s = 0; s < 5; ++s) {
      const TumorShape t = sample_shape(cls, {1, 1, 1}, s);
      EXPECT_GE(t.radius_mm, range.lo * 0.8) << to_string(cls);
      EXPECT_LE(t.radius_mm, range.hi * 1.2) << to_string(cls);
      EXPECT_GE(t.target_radius_mm, range.lo);
      EXPECT_LE(t.target_radius_mm, range.hi);
      ASSERT_EQ(t.soft.geometry(), t.hard.geometry());
      for (std::size_t i = 0; i < t.soft.size(); ++i) {
        ASSERT_EQ(t.hard[i], t.soft[i] >= 0.5f ? 1 : 0);
        if (t.hard[i]) ASSERT_GT(t.soft[i], 0.0f);
      }
      EXPECT_EQ(connected_components(t.hard).size(), 1u);
      const double v = double(count_nonzero(t.hard));
      EXPECT_NEAR(t.radius_mm, std::cbrt(3 * v / (4 * std::numbers::pi)), 1e-9);
    }
  }
}

TEST(SampleShape, TinyAtUnitSpacing) {
  for (Seed s = 0; s < 30; ++s) {
    const TumorShape t = sample_shape(SizeClass::Tiny, {1, 1, 1}, s);
    EXPECT_GE(t.radius_mm, 1.6);
    EXPECT_LE(t.radius_mm, 4.8);
  }
}

TEST(SampleShape, Deterministic) {
  const TumorShape a = sample_shape(SizeClass::Medium, {0.8, 0.8, 1.5}, 99);
  const TumorShape b = sample_shape(SizeClass::Medium, {0.8, 0.8, 1.5}, 99);
  EXPECT_EQ(a.soft, b.soft);
  EXPECT_EQ(a.hard, b.hard);
  EXPECT_EQ(a.crop_box, b.crop_box);
  EXPECT_EQ(a.radius_mm, b.radius_mm);
}

TEST(SampleShape, MediumMeanRadius) {
  double sum = 0;
  const int n = 200;
  for (int s = 0; s < n; ++s) sum += sample_shape(SizeClass::Medium, {1.5, 1.5, 1.5}, Seed(s)).radius_mm;
  EXPECT_GE(sum / n, 12.0);
  EXPECT_LE(sum / n, 20.0);
}
