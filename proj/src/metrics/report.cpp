#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tumorsynth/metrics/metrics.hpp"

namespace tumorsynth::metrics {
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string sensitivity_svg(const std::vector<BinRow>& bins) {
  const int bar = 70, gap = 30, left = 60, top = 40, plot_h = 240;
  const int width = left + static_cast<int>(bins.size()) * (bar + gap) + gap;
  const int height = top + plot_h + 70;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << "Tumor-level sensitivity by radius (mm)</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = top + plot_h - plot_h * t / 4.0;
    s << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << width - gap / 2 << "\" y2=\"" << y
      << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << t * 25 << "%</text>\n";
  }
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const int x = left + gap + static_cast<int>(b) * (bar + gap);
    const auto sens = bins[b].sensitivity();
    const double h = sens ? plot_h * *sens : 0.0;
    s << "<rect x=\"" << x << "\" y=\"" << top + plot_h - h << "\" width=\"" << bar << "\" height=\"" << h
      << "\" fill=\"#4a7ab5\"/>\n";
    s << "<text x=\"" << x + bar / 2 << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">"
      << xml_escape(bins[b].label) << "</text>\n";
    s << "<text x=\"" << x + bar / 2 << "\" y=\"" << top + plot_h + 34 << "\" text-anchor=\"middle\">"
      << bins[b].detected << "/" << bins[b].total << "</text>\n";
  }
  s << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << width - gap / 2 << "\" y2=\""
    << top + plot_h << "\" stroke=\"black\"/>\n";
  s << "</svg>\n";
  return s.str();
}

void write_report(const EvalReport& r, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + out_dir.string());

  std::ostringstream cases;
  cases << "case,dsc,nsd,tolerance_mm,gt_tumors,detected_tumors\n";
  for (const auto& c : r.cases) {
    std::size_t detected = 0;
    for (const auto& t : c.sensitivity.tumors) detected += t.detected;
    cases << c.name << ',' << num(c.dsc) << ',' << num(c.nsd) << ',' << num(r.tolerance_mm) << ','
          << c.sensitivity.tumors.size() << ',' << detected << '\n';
  }
  write_text(out_dir / "cases.csv", cases.str());

  std::ostringstream agg;
  agg << "metric,n,mean,ci95_lo,ci95_hi\n";
  agg << "dsc," << r.cases.size() << ',' << num(r.mean_dsc) << ',' << num(r.dsc_ci.lo) << ','
      << num(r.dsc_ci.hi) << '\n';
  agg << "nsd," << r.cases.size() << ',' << num(r.mean_nsd) << ',' << num(r.nsd_ci.lo) << ','
      << num(r.nsd_ci.hi) << '\n';
  write_text(out_dir / "aggregate.csv", agg.str());

  std::ostringstream sens;
  sens << "bin,lo_mm,hi_mm,total,detected,sensitivity\n";
  for (const auto& b : r.pooled_bins) {
    const auto v = b.sensitivity();
    sens << b.label << ',' << num(b.lo_mm) << ',' << num(b.hi_mm) << ',' << b.total << ',' << b.detected << ','
         << (v ? num(*v) : "") << '\n';
  }
  write_text(out_dir / "sensitivity_by_size.csv", sens.str());

  std::ostringstream tumors;
  tumors << "case,component,voxels,radius_mm,overlap_voxels,detected,bin\n";
  for (const auto& c : r.cases) {
    for (const auto& t : c.sensitivity.tumors) {
      tumors << c.name << ',' << t.component << ',' << t.voxels << ',' << num(t.radius_mm) << ','
             << t.overlap_voxels << ',' << (t.detected ? 1 : 0) << ',' << r.bins.label(t.bin) << '\n';
    }
  }
  write_text(out_dir / "tumors.csv", tumors.str());
  write_text(out_dir / "sensitivity_by_size.svg", sensitivity_svg(r.pooled_bins));
}

}  // namespace tumorsynth::metrics
