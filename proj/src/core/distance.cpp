#include "tumorsynth/core/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tumorsynth {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) on a line with
// sample pitch `s`.
void transform_line(const std::vector<double>& f, double s, bool border, std::vector<double>& out,
                    std::vector<std::int64_t>& v, std::vector<double>& z) {
  const auto n = static_cast<std::int64_t>(f.size());
  std::int64_t k = -1;
  for (std::int64_t q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    double boundary = -kInf;
    while (k >= 0) {
      const double xq = q * s;
      const double xv = v[k] * s;
      boundary = ((f[q] + xq * xq) - (f[v[k]] + xv * xv)) / (2.0 * (xq - xv));
      if (boundary <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
    } else {
      ++k;
      v[k] = q;
      z[k] = boundary;
      z[k + 1] = kInf;
    }
  }
  std::int64_t j = 0;
  for (std::int64_t p = 0; p < n; ++p) {
    double best = kInf;
    if (k >= 0) {
      while (z[j + 1] < p * s) ++j;
      const double dp = static_cast<double>(p - v[j]) * s;
      best = dp * dp + f[v[j]];
    }
    if (border) {
      const double lo = static_cast<double>(p + 1) * s;
      const double hi = static_cast<double>(n - p) * s;
      best = std::min({best, lo * lo, hi * hi});
    }
    out[p] = best;
  }
}

}  // namespace

std::vector<double> squared_distance_to_features(const Geometry& geometry,
                                                 std::span<const std::uint8_t> feature,
                                                 bool border_is_feature) {
  if (feature.size() != geometry.voxel_count()) {
    fail(ErrorCode::InvalidArgument, "distance transform: size mismatch");
  }
  const Dims& d = geometry.dims;
  std::vector<double> dist(feature.size());
  for (std::size_t i = 0; i < feature.size(); ++i) dist[i] = feature[i] ? 0.0 : kInf;
  if (feature.empty()) return dist;

  const std::size_t stride[3] = {1, d[0], d[0] * d[1]};
  for (int axis = 0; axis < 3; ++axis) {
    const std::size_t n = d[axis];
    const std::size_t st = stride[axis];
    const int o1 = axis == 0 ? 1 : 0;
    const int o2 = axis == 2 ? 1 : 2;
    std::vector<double> line(n), out(n), z(n + 1);
    std::vector<std::int64_t> v(n);
    for (std::size_t b = 0; b < d[o2]; ++b) {
      for (std::size_t a = 0; a < d[o1]; ++a) {
        const std::size_t base = a * stride[o1] + b * stride[o2];
        for (std::size_t p = 0; p < n; ++p) line[p] = dist[base + p * st];
        transform_line(line, geometry.spacing[axis], border_is_feature, out, v, z);
        for (std::size_t p = 0; p < n; ++p) dist[base + p * st] = out[p];
      }
    }
  }
  return dist;
}

Field3 depth_inside_mm(const Mask3& m) {
  std::vector<std::uint8_t> background(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) background[i] = m[i] ? 0 : 1;
  const auto sq = squared_distance_to_features(m.geometry(), background, true);
  Field3 out(m.geometry());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = static_cast<float>(std::sqrt(sq[i]));
  return out;
}

}  // namespace tumorsynth
