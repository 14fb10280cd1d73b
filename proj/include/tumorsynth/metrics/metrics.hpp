#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tumorsynth/core/grid.hpp"

namespace tumorsynth::metrics {

// 2|A∩B| / (|A|+|B|); 1 when both are empty.
double dsc(const Mask3& pred, const Mask3& gt);

// Surface points are the centres of foreground voxels with at least one
// 6-neighbour outside the mask (the grid edge counts as outside), each with
// unit weight. Returns the fraction of both surfaces lying within `tolerance_mm`
// of the other one. 1 when both are empty, 0 when exactly one is.
double nsd(const Mask3& pred, const Mask3& gt, double tolerance_mm);

// Boundary voxels used by nsd().
Mask3 surface_voxels(const Mask3& m);

// Bin i covers [edges[i-1], edges[i]); the first starts at 0 and the last is
// open-ended, so there are edges.size() + 1 bins.
struct SizeBins {
  std::vector<double> edges{5.0, 10.0, 20.0, 30.0};

  void validate() const;
  std::size_t count() const { return edges.size() + 1; }
  std::size_t bin_of(double radius_mm) const;
  std::string label(std::size_t bin) const;
};

// A gt component is detected when the prediction covers at least
// `min_overlap_voxels` of it and, when min_iou > 0, the IoU between the
// component and the prediction restricted to its 26-connected pieces touching
// it reaches min_iou.
struct DetectionRule {
  std::size_t min_overlap_voxels = 1;
  double min_iou = 0.0;
};

struct TumorRow {
  std::size_t component = 0;  // index in largest-first order
  std::size_t voxels = 0;
  double radius_mm = 0.0;
  std::size_t overlap_voxels = 0;
  double iou = 0.0;
  bool detected = false;
  std::size_t bin = 0;
};

struct BinRow {
  std::string label;
  double lo_mm = 0.0;
  double hi_mm = 0.0;  // +inf for the last bin
  std::size_t total = 0;
  std::size_t detected = 0;

  std::optional<double> sensitivity() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(detected) / static_cast<double>(total);
  }
};

struct SensitivityTable {
  std::vector<TumorRow> tumors;
  std::vector<BinRow> bins;
};

SensitivityTable tumor_sensitivity_by_size(const Mask3& pred, const Mask3& gt, const SizeBins& bins = {},
                                           const DetectionRule& rule = {});

// Sums per-bin counts of several tables built with the same bins.
std::vector<BinRow> pool_bins(std::span<const SensitivityTable> tables, const SizeBins& bins);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr std::size_t kBootstrapResamples = 10000;
inline constexpr std::uint64_t kBootstrapSeed = 20240101;

// Percentile bootstrap CI for the mean (linear interpolation between order
// statistics). Deterministic for a fixed seed.
Interval bootstrap_ci(std::span<const double> values, double level = 0.95,
                      std::size_t resamples = kBootstrapResamples, std::uint64_t seed = kBootstrapSeed);

double mean(std::span<const double> values);

// Linear-interpolation quantile of sorted data, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

struct CaseEval {
  std::string name;
  double dsc = 0.0;
  double nsd = 0.0;
  SensitivityTable sensitivity;
};

struct EvalReport {
  double tolerance_mm = 2.0;
  SizeBins bins;
  std::vector<CaseEval> cases;  // sorted by name
  std::vector<std::string> unmatched;  // files present in only one directory
  double mean_dsc = 0.0;
  Interval dsc_ci;
  double mean_nsd = 0.0;
  Interval nsd_ci;
  std::vector<BinRow> pooled_bins;
};

// Pairs NIfTI files by file name across the two directories. Throws NotFound
// when no pair matches. When `out_dir` is non-empty, writes cases.csv,
// aggregate.csv, sensitivity_by_size.csv and sensitivity_by_size.svg.
EvalReport evaluate_pairs(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                          double tolerance_mm, const SizeBins& bins, const std::filesystem::path& out_dir = {},
                          const DetectionRule& rule = {});

// Report layer, also used by evaluate_pairs.
EvalReport summarize(std::vector<CaseEval> cases, double tolerance_mm, const SizeBins& bins);
void write_report(const EvalReport& report, const std::filesystem::path& out_dir);
std::string sensitivity_svg(const std::vector<BinRow>& bins);

}  // namespace tumorsynth::metrics
