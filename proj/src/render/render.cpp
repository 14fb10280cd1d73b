#include "tumorsynth/render/render.hpp"

#include <algorithm>
#include <cmath>

namespace tumorsynth::render {

std::uint8_t window(double hu, double level_hu, double width_hu) {
  const double g = std::round(255.0 * (hu - (level_hu - width_hu / 2.0)) / width_hu);
  return static_cast<std::uint8_t>(std::clamp(g, 0.0, 255.0));
}

SliceRender render_slice(const Volume3& v, Axis axis, std::size_t index, double level_hu, double width_hu,
                         bool aspect_correct) {
  if (!(width_hu > 0.0)) fail(ErrorCode::InvalidArgument, "window width must be positive");
  const int a = static_cast<int>(axis);
  const Dims& d = v.dims();
  if (index >= d[a]) fail(ErrorCode::InvalidArgument, "slice index out of range");
  const int col_axis = a == 0 ? 1 : 0;
  const int row_axis = a == 2 ? 1 : 2;
  const std::size_t cols = d[col_axis];
  const std::size_t rows = d[row_axis];
  const double sc = v.spacing()[col_axis];
  const double sr = v.spacing()[row_axis];

  SliceRender out;
  out.level_hu = level_hu;
  out.width_hu = width_hu;
  out.axis = axis;
  out.index = index;
  double pitch_c = sc, pitch_r = sr;
  out.width = cols;
  out.height = rows;
  if (aspect_correct && sc != sr) {
    const double p = std::min(sc, sr);
    out.width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(double(cols) * sc / p)));
    out.height = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(double(rows) * sr / p)));
    pitch_c = pitch_r = p;
  }
  out.pixel_spacing_mm[0] = pitch_c;
  out.pixel_spacing_mm[1] = pitch_r;
  out.pixels.resize(out.width * out.height);
  for (std::size_t y = 0; y < out.height; ++y) {
    const std::size_t r = std::min(rows - 1, static_cast<std::size_t>((double(y) + 0.5) * pitch_r / sr));
    for (std::size_t x = 0; x < out.width; ++x) {
      const std::size_t c = std::min(cols - 1, static_cast<std::size_t>((double(x) + 0.5) * pitch_c / sc));
      std::size_t ijk[3];
      ijk[a] = index;
      ijk[col_axis] = c;
      ijk[row_axis] = r;
      out.pixels[y * out.width + x] = window(v(ijk[0], ijk[1], ijk[2]), level_hu, width_hu);
    }
  }
  return out;
}

SliceRender montage(const std::vector<SliceRender>& panels, std::size_t gap) {
  if (panels.empty()) fail(ErrorCode::InvalidArgument, "montage needs at least one panel");
  SliceRender out = panels.front();
  std::size_t width = 0, height = 0;
  for (const auto& p : panels) {
    width += p.width;
    height = std::max(height, p.height);
  }
  width += gap * (panels.size() - 1);
  out.width = width;
  out.height = height;
  out.pixels.assign(width * height, 0);
  std::size_t x0 = 0;
  for (const auto& p : panels) {
    for (std::size_t y = 0; y < p.height; ++y) {
      std::copy_n(p.pixels.begin() + static_cast<std::ptrdiff_t>(y * p.width), p.width,
                  out.pixels.begin() + static_cast<std::ptrdiff_t>(y * width + x0));
    }
    x0 += p.width + gap;
  }
  return out;
}

}  // namespace tumorsynth::render
