#include "tumorsynth/pipeline/preview.hpp"

#include <algorithm>
#include <cmath>

#include "tumorsynth/core/components.hpp"

namespace tumorsynth::pipeline {

render::SliceRender preview(const CaseResult& result, double level_hu, double width_hu) {
  const Dims& d = result.image.dims();
  std::size_t c[3] = {d[0] / 2, d[1] / 2, d[2] / 2};
  const auto comps = connected_components(result.label);
  if (!comps.empty()) {
    for (int a = 0; a < 3; ++a) {
      c[a] = std::min(d[a] - 1, static_cast<std::size_t>(std::lround(std::max(0.0, comps.front().centroid[a]))));
    }
  }
  std::vector<render::SliceRender> panels;
  panels.push_back(render::render_slice(result.image, render::Axis::Z, c[2], level_hu, width_hu));
  panels.push_back(render::render_slice(result.image, render::Axis::Y, c[1], level_hu, width_hu));
  panels.push_back(render::render_slice(result.image, render::Axis::X, c[0], level_hu, width_hu));
  // Coronal and sagittal renders have z growing downwards; flip so superior is up.
  for (std::size_t p = 1; p < panels.size(); ++p) {
    auto& r = panels[p];
    for (std::size_t y = 0; y < r.height / 2; ++y) {
      std::swap_ranges(r.pixels.begin() + static_cast<std::ptrdiff_t>(y * r.width),
                       r.pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * r.width),
                       r.pixels.begin() + static_cast<std::ptrdiff_t>((r.height - 1 - y) * r.width));
    }
  }
  return render::montage(panels);
}

}  // namespace tumorsynth::pipeline
