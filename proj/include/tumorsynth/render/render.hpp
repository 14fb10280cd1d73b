#pragma once

#include <cstdint>
#include <vector>

#include "tumorsynth/core/grid.hpp"

namespace tumorsynth::render {

enum class Axis { X = 0, Y = 1, Z = 2 };

inline constexpr double kAbdomenLevel = 40.0;
inline constexpr double kAbdomenWidth = 400.0;

struct SliceRender {
  std::vector<std::uint8_t> pixels;  // row-major, top row first
  std::size_t width = 0;
  std::size_t height = 0;
  double level_hu = kAbdomenLevel;
  double width_hu = kAbdomenWidth;
  Axis axis = Axis::Z;
  std::size_t index = 0;
  double pixel_spacing_mm[2] = {1.0, 1.0};  // column, row pitch of the output
};

// clamp(round(255 * (hu - (level - width / 2)) / width), 0, 255), halves away
// from zero.
std::uint8_t window(double hu, double level_hu, double width_hu);

// Slice normal to `axis` at `index`. Columns run along the lower remaining
// axis, rows along the higher one. With aspect correction, the slice is
// resampled (nearest neighbour) to square pixels of the finer in-plane pitch.
SliceRender render_slice(const Volume3& v, Axis axis, std::size_t index, double level_hu = kAbdomenLevel,
                         double width_hu = kAbdomenWidth, bool aspect_correct = true);

// Side-by-side panels on a black background with `gap` pixels between them.
SliceRender montage(const std::vector<SliceRender>& panels, std::size_t gap = 4);

}  // namespace tumorsynth::render
