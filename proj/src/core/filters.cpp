#include "tumorsynth/core/filters.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tumorsynth/core/distance.hpp"

namespace tumorsynth {

std::vector<double> gaussian_kernel(double sigma_voxels) {
  if (!(sigma_voxels >= 0.0)) fail(ErrorCode::InvalidArgument, "negative sigma");
  const auto radius = static_cast<int>(std::floor(3.0 * sigma_voxels + 1e-9));
  if (sigma_voxels == 0.0 || radius == 0) return {1.0};
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int o = -radius; o <= radius; ++o) {
    const double w = std::exp(-0.5 * (o * o) / (sigma_voxels * sigma_voxels));
    taps[static_cast<std::size_t>(o + radius)] = w;
    sum += w;
  }
  for (auto& w : taps) w /= sum;
  return taps;
}

void gaussian_blur_in_place(const Geometry& geometry, std::span<float> values, const Vec3& sigma_mm) {
  for (int a = 0; a < 3; ++a) {
    if (!(sigma_mm[a] >= 0.0)) fail(ErrorCode::InvalidArgument, "negative sigma");
  }
  if (values.size() != geometry.voxel_count()) {
    fail(ErrorCode::InvalidArgument, "blur: value count does not match dims");
  }
  const Dims& d = geometry.dims;
  const std::size_t stride[3] = {1, d[0], d[0] * d[1]};

  for (int axis = 0; axis < 3; ++axis) {
    const auto taps = gaussian_kernel(sigma_mm[axis] / geometry.spacing[axis]);
    if (taps.size() == 1) continue;
    const auto radius = static_cast<std::int64_t>(taps.size() / 2);
    const std::size_t n = d[axis];
    const std::size_t st = stride[axis];
    const int o1 = axis == 0 ? 1 : 0;
    const int o2 = axis == 2 ? 1 : 2;
    std::vector<double> line(n);
    for (std::size_t b = 0; b < d[o2]; ++b) {
      for (std::size_t a = 0; a < d[o1]; ++a) {
        const std::size_t base = a * stride[o1] + b * stride[o2];
        for (std::size_t p = 0; p < n; ++p) line[p] = values[base + p * st];
        for (std::size_t p = 0; p < n; ++p) {
          double acc = 0.0;
          for (std::int64_t o = -radius; o <= radius; ++o) {
            const auto q = std::clamp<std::int64_t>(static_cast<std::int64_t>(p) + o, 0,
                                                    static_cast<std::int64_t>(n) - 1);
            acc += taps[static_cast<std::size_t>(o + radius)] * line[static_cast<std::size_t>(q)];
          }
          values[base + p * st] = static_cast<float>(acc);
        }
      }
    }
  }
}

Mask3 erode(const Mask3& m, double radius_mm) {
  if (!(radius_mm >= 0.0)) fail(ErrorCode::InvalidArgument, "negative erosion radius");
  if (radius_mm == 0.0) return m;
  std::vector<std::uint8_t> background(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) background[i] = m[i] ? 0 : 1;
  const auto sq = squared_distance_to_features(m.geometry(), background, true);
  const double limit = radius_mm * radius_mm * (1.0 + 1e-12);
  Mask3 out(m.geometry());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = (m[i] && sq[i] > limit) ? 1 : 0;
  return out;
}

Mask3 dilate(const Mask3& m, double radius_mm) {
  if (!(radius_mm >= 0.0)) fail(ErrorCode::InvalidArgument, "negative dilation radius");
  if (radius_mm == 0.0) return m;
  const auto sq = squared_distance_to_features(m.geometry(), m.values(), false);
  const double limit = radius_mm * radius_mm * (1.0 + 1e-12);
  Mask3 out(m.geometry());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = sq[i] <= limit ? 1 : 0;
  return out;
}

}  // namespace tumorsynth
