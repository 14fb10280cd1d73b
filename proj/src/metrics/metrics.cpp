#include "tumorsynth/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "tumorsynth/core/components.hpp"
#include "tumorsynth/core/distance.hpp"
#include "tumorsynth/core/nifti.hpp"
#include "tumorsynth/core/rng.hpp"

namespace tumorsynth::metrics {
namespace fs = std::filesystem;

double dsc(const Mask3& pred, const Mask3& gt) {
  require_same_geometry(pred.geometry(), gt.geometry(), "dsc");
  std::size_t a = 0, b = 0, both = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, g = gt[i] != 0;
    a += p;
    b += g;
    both += p && g;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

Mask3 surface_voxels(const Mask3& m) {
  Mask3 out(m.geometry(), 0);
  const Dims& d = m.dims();
  for (std::size_t k = 0; k < d[2]; ++k) {
    for (std::size_t j = 0; j < d[1]; ++j) {
      for (std::size_t i = 0; i < d[0]; ++i) {
        if (!m(i, j, k)) continue;
        const bool edge = i == 0 || j == 0 || k == 0 || i + 1 == d[0] || j + 1 == d[1] || k + 1 == d[2];
        if (edge || !m(i - 1, j, k) || !m(i + 1, j, k) || !m(i, j - 1, k) || !m(i, j + 1, k) ||
            !m(i, j, k - 1) || !m(i, j, k + 1)) {
          out(i, j, k) = 1;
        }
      }
    }
  }
  return out;
}

double nsd(const Mask3& pred, const Mask3& gt, double tolerance_mm) {
  require_same_geometry(pred.geometry(), gt.geometry(), "nsd");
  if (!(tolerance_mm >= 0.0)) fail(ErrorCode::InvalidArgument, "nsd tolerance must be >= 0");
  const Mask3 sp = surface_voxels(pred);
  const Mask3 sg = surface_voxels(gt);
  const std::size_t np = count_nonzero(sp), ng = count_nonzero(sg);
  if (np + ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;
  const double tol2 = tolerance_mm * tolerance_mm * (1.0 + 1e-12);
  const auto to_gt = squared_distance_to_features(gt.geometry(), sg.values(), false);
  const auto to_pred = squared_distance_to_features(pred.geometry(), sp.values(), false);
  std::size_t within = 0;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    if (sp[i] && to_gt[i] <= tol2) ++within;
    if (sg[i] && to_pred[i] <= tol2) ++within;
  }
  return static_cast<double>(within) / static_cast<double>(np + ng);
}

void SizeBins::validate() const {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i]) || !(edges[i] > 0.0) || (i > 0 && !(edges[i] > edges[i - 1]))) {
      fail(ErrorCode::InvalidArgument, "size bin edges must be positive and strictly increasing");
    }
  }
}

std::size_t SizeBins::bin_of(double radius_mm) const {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), radius_mm) - edges.begin());
}

namespace {

std::string fmt_mm(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::string SizeBins::label(std::size_t bin) const {
  if (edges.empty()) return "all";
  if (bin == 0) return "<" + fmt_mm(edges.front());
  if (bin >= edges.size()) return ">=" + fmt_mm(edges.back());
  return fmt_mm(edges[bin - 1]) + "-" + fmt_mm(edges[bin]);
}

namespace {

std::vector<BinRow> empty_bins(const SizeBins& bins) {
  std::vector<BinRow> rows(bins.count());
  for (std::size_t b = 0; b < rows.size(); ++b) {
    rows[b].label = bins.label(b);
    rows[b].lo_mm = b == 0 ? 0.0 : bins.edges[b - 1];
    rows[b].hi_mm = b < bins.edges.size() ? bins.edges[b] : std::numeric_limits<double>::infinity();
  }
  return rows;
}

}  // namespace

SensitivityTable tumor_sensitivity_by_size(const Mask3& pred, const Mask3& gt, const SizeBins& bins,
                                           const DetectionRule& rule) {
  require_same_geometry(pred.geometry(), gt.geometry(), "tumor_sensitivity_by_size");
  bins.validate();
  SensitivityTable table;
  table.bins = empty_bins(bins);
  const auto comps = connected_components(gt);

  std::vector<std::uint32_t> pred_labels;
  std::vector<Component> pred_comps;
  if (rule.min_iou > 0.0) {
    pred_comps = connected_components(pred);
    pred_labels = label_components(pred, pred_comps);
  }
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const Component& comp = comps[c];
    TumorRow row;
    row.component = c;
    row.voxels = comp.count();
    row.radius_mm = comp.radius_mm;
    std::set<std::uint32_t> touched;
    for (std::size_t v : comp.voxels) {
      if (pred[v]) {
        ++row.overlap_voxels;
        if (!pred_labels.empty()) touched.insert(pred_labels[v]);
      }
    }
    if (rule.min_iou > 0.0) {
      std::size_t pred_size = 0;
      for (auto id : touched) pred_size += pred_comps[id - 1].count();
      const std::size_t uni = row.voxels + pred_size - row.overlap_voxels;
      row.iou = uni == 0 ? 0.0 : static_cast<double>(row.overlap_voxels) / static_cast<double>(uni);
    } else {
      row.iou = std::numeric_limits<double>::quiet_NaN();
    }
    row.detected = row.overlap_voxels >= std::max<std::size_t>(1, rule.min_overlap_voxels) &&
                   (rule.min_iou <= 0.0 || row.iou >= rule.min_iou);
    row.bin = bins.bin_of(row.radius_mm);
    ++table.bins[row.bin].total;
    if (row.detected) ++table.bins[row.bin].detected;
    table.tumors.push_back(row);
  }
  return table;
}

std::vector<BinRow> pool_bins(std::span<const SensitivityTable> tables, const SizeBins& bins) {
  auto rows = empty_bins(bins);
  for (const auto& t : tables) {
    if (t.bins.size() != rows.size()) fail(ErrorCode::InvalidArgument, "pool_bins: bin layout mismatch");
    for (std::size_t b = 0; b < rows.size(); ++b) {
      rows[b].total += t.bins[b].total;
      rows[b].detected += t.bins[b].detected;
    }
  }
  return rows;
}

double mean(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return sorted[lo] + t * (sorted[hi] - sorted[lo]);
}

Interval bootstrap_ci(std::span<const double> values, double level, std::size_t resamples, std::uint64_t seed) {
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  if (!(level > 0.0 && level < 1.0) || resamples == 0) {
    fail(ErrorCode::InvalidArgument, "bootstrap: level must be in (0,1) and resamples > 0");
  }
  Rng rng(seed);
  std::vector<double> means(resamples);
  const std::size_t n = values.size();
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[rng.below(n)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double alpha = (1.0 - level) / 2.0;
  return {quantile_sorted(means, alpha), quantile_sorted(means, 1.0 - alpha)};
}

EvalReport summarize(std::vector<CaseEval> cases, double tolerance_mm, const SizeBins& bins) {
  EvalReport r;
  r.tolerance_mm = tolerance_mm;
  r.bins = bins;
  std::sort(cases.begin(), cases.end(), [](const CaseEval& a, const CaseEval& b) { return a.name < b.name; });
  r.cases = std::move(cases);
  std::vector<double> d, n;
  std::vector<SensitivityTable> tables;
  for (const auto& c : r.cases) {
    d.push_back(c.dsc);
    n.push_back(c.nsd);
    tables.push_back(c.sensitivity);
  }
  r.mean_dsc = mean(d);
  r.mean_nsd = mean(n);
  r.dsc_ci = bootstrap_ci(d);
  r.nsd_ci = bootstrap_ci(n);
  r.pooled_bins = pool_bins(tables, bins);
  return r;
}

namespace {

std::vector<std::string> nifti_names(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorCode::Io, "directory not found: " + dir.string());
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && nifti::is_nifti_path(e.path())) names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

EvalReport evaluate_pairs(const fs::path& pred_dir, const fs::path& gt_dir, double tolerance_mm,
                          const SizeBins& bins, const fs::path& out_dir, const DetectionRule& rule) {
  bins.validate();
  if (!(tolerance_mm >= 0.0)) fail(ErrorCode::InvalidArgument, "tolerance must be >= 0");
  const auto preds = nifti_names(pred_dir);
  const auto gts = nifti_names(gt_dir);
  std::vector<std::string> matched, unmatched;
  std::set_intersection(preds.begin(), preds.end(), gts.begin(), gts.end(), std::back_inserter(matched));
  std::set_symmetric_difference(preds.begin(), preds.end(), gts.begin(), gts.end(),
                                std::back_inserter(unmatched));
  if (matched.empty()) {
    std::string msg = "no matching file names between " + pred_dir.string() + " and " + gt_dir.string();
    fail(ErrorCode::NotFound, msg);
  }
  std::vector<CaseEval> cases;
  for (const auto& name : matched) {
    const Mask3 pred = nifti::load_mask(pred_dir / name);
    const Mask3 gt = nifti::load_mask(gt_dir / name);
    CaseEval c;
    c.name = nifti::stem(name);
    try {
      c.dsc = dsc(pred, gt);
      c.nsd = nsd(pred, gt, tolerance_mm);
      c.sensitivity = tumor_sensitivity_by_size(pred, gt, bins, rule);
    } catch (const Error& e) {
      throw Error(e.code(), name + ": " + e.what());
    }
    cases.push_back(std::move(c));
  }
  EvalReport report = summarize(std::move(cases), tolerance_mm, bins);
  for (const auto& u : unmatched) {
    const bool in_pred = std::binary_search(preds.begin(), preds.end(), u);
    report.unmatched.push_back(((in_pred ? pred_dir : gt_dir) / u).string());
  }
  if (!out_dir.empty()) write_report(report, out_dir);
  return report;
}

}  // namespace tumorsynth::metrics
