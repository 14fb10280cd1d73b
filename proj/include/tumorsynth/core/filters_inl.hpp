#pragma once

#include <cmath>

namespace tumorsynth {

template <typename G>
double trilinear(const G& g, double x, double y, double z, double outside) {
  const auto& d = g.dims();
  const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
  const auto x0 = static_cast<std::int64_t>(fx);
  const auto y0 = static_cast<std::int64_t>(fy);
  const auto z0 = static_cast<std::int64_t>(fz);
  const double tx = x - fx, ty = y - fy, tz = z - fz;
  auto at = [&](std::int64_t i, std::int64_t j, std::int64_t k) -> double {
    if (i < 0 || j < 0 || k < 0 || i >= std::int64_t(d[0]) || j >= std::int64_t(d[1]) ||
        k >= std::int64_t(d[2])) {
      return outside;
    }
    return static_cast<double>(g(std::size_t(i), std::size_t(j), std::size_t(k)));
  };
  // Exact at lattice points: zero-weight corners are skipped so that an
  // outside value never leaks in through a 0 * x term.
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? tz : 1.0 - tz;
    if (wz == 0.0) continue;
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? ty : 1.0 - ty;
      if (wy == 0.0) continue;
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? tx : 1.0 - tx;
        if (wx == 0.0) continue;
        acc += wx * wy * wz * at(x0 + dx, y0 + dy, z0 + dz);
      }
    }
  }
  return acc;
}

}  // namespace tumorsynth
