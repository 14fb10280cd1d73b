#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tumorsynth/core/nifti.hpp"
#include "tumorsynth/core/rng.hpp"
#include "tumorsynth/metrics/metrics.hpp"

using namespace tumorsynth;
using namespace tumorsynth::metrics;
namespace fs = std::filesystem;

namespace {

Mask3 random_mask(const Geometry& g, Rng& rng) {
  Mask3 m(g, 0);
  const int blobs = int(rng.below(4));
  for (int b = 0; b < blobs; ++b) {
    Index3 lo, hi;
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::int64_t(rng.below(g.dims[a]));
      hi[a] = lo[a] + 1 + std::int64_t(rng.below(g.dims[a] - std::size_t(lo[a])));
    }
    const Mask3 box = tstest::box_mask(g, lo, hi);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] |= box[i];
  }
  const double noise = rng.uniform(0, 0.2);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (rng.bernoulli(noise)) m[i] ^= 1;
  }
  return m;
}

}  // namespace

TEST(Dsc, MatchesOracleOnRandomPairs) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto g = tstest::make_geometry({1 + rng.below(10), 1 + rng.below(10), 1 + rng.below(10)});
    const Mask3 a = random_mask(g, rng), b = random_mask(g, rng);
    ASSERT_NEAR(dsc(a, b), tstest::oracle_dsc(a, b), 1e-12);
  }
}

TEST(Dsc, EdgeCases) {
  const auto g = tstest::make_geometry({4, 4, 4});
  const Mask3 empty(g, 0), full(g, 1);
  EXPECT_EQ(dsc(empty, empty), 1.0);
  EXPECT_EQ(dsc(empty, full), 0.0);
  EXPECT_EQ(dsc(full, full), 1.0);
  EXPECT_THROW(dsc(full, Mask3(tstest::make_geometry({4, 4, 5}), 1)), Error);
}

TEST(Dsc, HalfShiftedCube) {
  const auto g = tstest::make_geometry({20, 20, 20});
  const Mask3 a = tstest::box_mask(g, {2, 2, 2}, {10, 10, 10});
  const Mask3 b = tstest::box_mask(g, {6, 2, 2}, {14, 10, 10});
  EXPECT_DOUBLE_EQ(dsc(a, b), 0.5);
}

TEST(Nsd, MatchesOracleOnRandomPairs) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const auto g = tstest::make_geometry({1 + rng.below(9), 1 + rng.below(9), 1 + rng.below(9)},
                                         {rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.5, 3)});
    const Mask3 a = random_mask(g, rng), b = random_mask(g, rng);
    const double tol = rng.uniform(0, 4);
    ASSERT_NEAR(nsd(a, b, tol), tstest::oracle_nsd(a, b, tol), 1e-9) << t;
  }
}

TEST(Nsd, SurfaceMatchesOracle) {
  Rng rng(3);
  const auto g = tstest::make_geometry({7, 6, 5});
  const Mask3 m = random_mask(g, rng);
  const Mask3 s = surface_voxels(m);
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) n += s[i] != 0;
  EXPECT_EQ(n, tstest::oracle_surface(m).size());
}

TEST(Nsd, KnownValues) {
  const auto g = tstest::make_geometry({40, 20, 20});
  const Mask3 a = tstest::box_mask(g, {2, 2, 2}, {7, 7, 7});
  const Mask3 b = tstest::box_mask(g, {12, 2, 2}, {17, 7, 7});
  EXPECT_EQ(nsd(a, b, 2.0), 0.0);
  EXPECT_EQ(nsd(a, a, 0.0), 1.0);
  const Mask3 empty(g, 0);
  EXPECT_EQ(nsd(empty, empty, 1.0), 1.0);
  EXPECT_EQ(nsd(a, empty, 1.0), 0.0);
  EXPECT_THROW(nsd(a, b, -1.0), Error);
}

TEST(Nsd, MonotoneInTolerance) {
  Rng rng(4);
  const auto g = tstest::make_geometry({10, 10, 10});
  const Mask3 a = random_mask(g, rng), b = random_mask(g, rng);
  double prev = -1;
  for (double tol = 0; tol < 10; tol += 0.5) {
    const double v = nsd(a, b, tol);
    ASSERT_GE(v, prev);
    prev = v;
  }
}

TEST(SizeBins, LabelsAndLookup) {
  const SizeBins b;
  EXPECT_EQ(b.count(), 5u);
  EXPECT_EQ(b.bin_of(0.0), 0u);
  EXPECT_EQ(b.bin_of(4.99), 0u);
  EXPECT_EQ(b.bin_of(5.0), 1u);
  EXPECT_EQ(b.bin_of(29.9), 3u);
  EXPECT_EQ(b.bin_of(30.0), 4u);
  EXPECT_EQ(b.label(0), "<5");
  EXPECT_EQ(b.label(1), "5-10");
  EXPECT_EQ(b.label(4), ">=30");
  SizeBins bad{{10, 5}};
  EXPECT_THROW(bad.validate(), Error);
  SizeBins neg{{-1}};
  EXPECT_THROW(neg.validate(), Error);
}

TEST(Sensitivity, CountsDetectionsPerBin) {
  const auto g = tstest::make_geometry({60, 60, 60});
  Mask3 gt(g, 0), pred(g, 0);
  const Mask3 big = tstest::ball_mask(g, {15, 15, 15}, 12);
  const Mask3 small = tstest::ball_mask(g, {45, 45, 45}, 3);
  const Mask3 mid = tstest::ball_mask(g, {45, 15, 45}, 7);
  for (std::size_t i = 0; i < g.voxel_count(); ++i) {
    gt[i] = big[i] | small[i] | mid[i];
    pred[i] = big[i];
  }
  pred(45, 15, 45) = 1;  // single voxel inside the mid ball
  const auto t = tumor_sensitivity_by_size(pred, gt);
  ASSERT_EQ(t.tumors.size(), 3u);
  EXPECT_TRUE(t.tumors[0].detected);
  EXPECT_EQ(t.tumors[0].bin, 2u);
  ASSERT_EQ(t.bins.size(), 5u);
  EXPECT_EQ(t.bins[0].total, 1u);
  EXPECT_EQ(t.bins[0].detected, 0u);
  EXPECT_EQ(t.bins[1].total, 1u);
  EXPECT_EQ(t.bins[1].detected, 1u);
  EXPECT_FALSE(t.bins[4].sensitivity().has_value());

  DetectionRule strict;
  strict.min_iou = 0.5;
  const auto s = tumor_sensitivity_by_size(pred, gt, {}, strict);
  EXPECT_EQ(s.bins[1].detected, 0u);
  EXPECT_EQ(s.bins[2].detected, 1u);
  EXPECT_NEAR(s.tumors[0].iou, 1.0, 1e-12);
}

TEST(Sensitivity, PoolSumsCounts) {
  const auto g = tstest::make_geometry({30, 30, 30});
  const Mask3 gt = tstest::ball_mask(g, {15, 15, 15}, 4);
  const auto hit = tumor_sensitivity_by_size(gt, gt);
  const auto miss = tumor_sensitivity_by_size(Mask3(g, 0), gt);
  const std::vector<SensitivityTable> tables{hit, miss, hit};
  const auto pooled = pool_bins(tables, {});
  EXPECT_EQ(pooled[0].total, 3u);
  EXPECT_EQ(pooled[0].detected, 2u);
}

TEST(Stats, QuantileMatchesLinearInterpolation) {
  const std::vector<double> v{1, 2, 4, 8};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0), 1);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 1), 8);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 3);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(mean(v), 3.75);
}

TEST(Stats, BootstrapBehaviour) {
  const std::vector<double> constant(30, 0.7);
  const Interval c = bootstrap_ci(constant);
  EXPECT_DOUBLE_EQ(c.lo, 0.7);
  EXPECT_DOUBLE_EQ(c.hi, 0.7);

  Rng rng(5);
  std::vector<double> v(400);
  for (auto& x : v) x = rng.normal();
  const Interval a = bootstrap_ci(v), b = bootstrap_ci(v);
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_EQ(a.hi, b.hi);
  const double m = mean(v);
  double var = 0;
  for (double x : v) var += (x - m) * (x - m);
  const double se = std::sqrt(var / double(v.size() - 1) / double(v.size()));
  EXPECT_NEAR(a.lo, m - 1.96 * se, 0.15 * se * 1.96);
  EXPECT_NEAR(a.hi, m + 1.96 * se, 0.15 * se * 1.96);
  EXPECT_TRUE(std::isnan(bootstrap_ci(std::vector<double>{}).lo));
  EXPECT_THROW(bootstrap_ci(v, 1.0), Error);
}

TEST(Evaluate, PairsDirectoriesAndWritesReport) {
  tstest::TempDir pred, gt, out;
  const auto g = tstest::make_geometry({24, 24, 24});
  const Mask3 ball = tstest::ball_mask(g, {12, 12, 12}, 6);
  const Mask3 shifted = tstest::ball_mask(g, {13, 12, 12}, 6);
  nifti::save_mask(ball, gt / "a.nii.gz");
  nifti::save_mask(ball, pred / "a.nii.gz");
  nifti::save_mask(ball, gt / "b.nii.gz");
  nifti::save_mask(shifted, pred / "b.nii.gz");
  nifti::save_mask(ball, gt / "only_gt.nii.gz");
  const EvalReport r = evaluate_pairs(pred.path(), gt.path(), 2.0, {}, out.path());
  ASSERT_EQ(r.cases.size(), 2u);
  EXPECT_EQ(r.cases[0].name, "a");
  EXPECT_DOUBLE_EQ(r.cases[0].dsc, 1.0);
  EXPECT_NEAR(r.cases[1].dsc, tstest::oracle_dsc(shifted, ball), 1e-12);
  EXPECT_NEAR(r.cases[1].nsd, tstest::oracle_nsd(shifted, ball, 2.0), 1e-12);
  EXPECT_EQ(r.unmatched.size(), 1u);
  EXPECT_NEAR(r.mean_dsc, (1.0 + r.cases[1].dsc) / 2, 1e-12);
  for (const char* f : {"cases.csv", "aggregate.csv", "sensitivity_by_size.csv", "sensitivity_by_size.svg"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  std::ifstream cases(out / "cases.csv");
  std::string header;
  std::getline(cases, header);
  EXPECT_EQ(header, "case,dsc,nsd,tolerance_mm,gt_tumors,detected_tumors");
}

TEST(Evaluate, NoPairsIsNotFound) {
  tstest::TempDir pred, gt;
  nifti::save_mask(Mask3(tstest::make_geometry({4, 4, 4}), 0), gt / "x.nii");
  try {
    evaluate_pairs(pred.path(), gt.path(), 2.0, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotFound);
  }
}

TEST(Evaluate, SvgIsWellFormed) {
  std::vector<BinRow> rows{{"<5", 0, 5, 4, 1}, {">=5", 5, INFINITY, 0, 0}};
  const std::string svg = sensitivity_svg(rows);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("&lt;5"), std::string::npos);
}
