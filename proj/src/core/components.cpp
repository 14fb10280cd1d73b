#include "tumorsynth/core/components.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tumorsynth {

double equivalent_radius_mm(std::size_t voxel_count, const Vec3& spacing) {
  const double volume = static_cast<double>(voxel_count) * spacing[0] * spacing[1] * spacing[2];
  return std::cbrt(3.0 * volume / (4.0 * std::numbers::pi));
}

std::vector<Component> connected_components(const Mask3& m) {
  const Geometry& g = m.geometry();
  const Dims& d = g.dims;
  std::vector<std::uint8_t> seen(m.size(), 0);
  std::vector<Component> comps;
  std::vector<std::size_t> stack;

  for (std::size_t start = 0; start < m.size(); ++start) {
    if (!m[start] || seen[start]) continue;
    Component c;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      c.voxels.push_back(cur);
      const Index3 p = g.unravel(cur);
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const Index3 q{p[0] + dx, p[1] + dy, p[2] + dz};
            if (!g.contains(q)) continue;
            const std::size_t qi = g.linear(std::size_t(q[0]), std::size_t(q[1]), std::size_t(q[2]));
            if (m[qi] && !seen[qi]) {
              seen[qi] = 1;
              stack.push_back(qi);
            }
          }
    }
    std::sort(c.voxels.begin(), c.voxels.end());

    Index3 lo{std::int64_t(d[0]), std::int64_t(d[1]), std::int64_t(d[2])};
    Index3 hi{-1, -1, -1};
    Vec3 sum{0, 0, 0};
    for (auto v : c.voxels) {
      const Index3 p = g.unravel(v);
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
        sum[a] += static_cast<double>(p[a]);
      }
    }
    const auto n = static_cast<double>(c.voxels.size());
    for (int a = 0; a < 3; ++a) {
      c.bbox.offset[a] = lo[a];
      c.bbox.dims[a] = static_cast<std::size_t>(hi[a] - lo[a] + 1);
      c.centroid[a] = sum[a] / n;
    }
    c.radius_mm = equivalent_radius_mm(c.voxels.size(), g.spacing);
    comps.push_back(std::move(c));
  }
  std::stable_sort(comps.begin(), comps.end(),
                   [](const Component& a, const Component& b) { return a.count() > b.count(); });
  return comps;
}

std::vector<std::uint32_t> label_components(const Mask3& m, const std::vector<Component>& comps) {
  std::vector<std::uint32_t> labels(m.size(), 0);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (auto v : comps[c].voxels) labels[v] = static_cast<std::uint32_t>(c + 1);
  }
  return labels;
}

}  // namespace tumorsynth
