#include <cmath>
#include <sstream>

#include "tumorsynth/core/grid.hpp"

namespace tumorsynth {

Vec3 Geometry::voxel_to_world(const Vec3& ijk) const {
  Vec3 out = origin;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out[r] += direction[r][c] * spacing[c] * ijk[c];
  }
  return out;
}

Vec3 Geometry::world_to_voxel(const Vec3& p) const {
  // direction is orthonormal, so its inverse is its transpose.
  const Vec3 d{p[0] - origin[0], p[1] - origin[1], p[2] - origin[2]};
  Vec3 out{0, 0, 0};
  for (int c = 0; c < 3; ++c) {
    double s = 0;
    for (int r = 0; r < 3; ++r) s += direction[r][c] * d[r];
    out[c] = s / spacing[c];
  }
  return out;
}

void Geometry::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
      std::ostringstream os;
      os << "invalid spacing (" << spacing[0] << ", " << spacing[1] << ", " << spacing[2] << ")";
      fail(ErrorCode::InvalidArgument, os.str());
    }
    if (!std::isfinite(origin[a])) fail(ErrorCode::InvalidArgument, "non-finite origin");
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      double dot = 0;
      for (int r = 0; r < 3; ++r) dot += direction[r][a] * direction[r][b];
      if (std::abs(dot - (a == b ? 1.0 : 0.0)) > 1e-6) {
        fail(ErrorCode::InvalidArgument, "direction matrix is not orthonormal");
      }
    }
  }
}

Geometry sub_geometry(const Geometry& parent, const Index3& offset, const Dims& dims) {
  Geometry g = parent;
  g.dims = dims;
  g.origin = parent.voxel_to_world(
      {double(offset[0]), double(offset[1]), double(offset[2])});
  return g;
}

bool CropBox::inside(const Dims& host) const {
  for (int a = 0; a < 3; ++a) {
    if (offset[a] < 0) return false;
    if (offset[a] + static_cast<std::int64_t>(dims[a]) > static_cast<std::int64_t>(host[a]))
      return false;
  }
  return true;
}

CropBox intersect(const CropBox& a, const CropBox& b) {
  CropBox out;
  for (int ax = 0; ax < 3; ++ax) {
    const auto lo = std::max(a.offset[ax], b.offset[ax]);
    const auto hi = std::min(a.end()[ax], b.end()[ax]);
    if (hi <= lo) return CropBox{};
    out.offset[ax] = lo;
    out.dims[ax] = static_cast<std::size_t>(hi - lo);
  }
  return out;
}

std::size_t count_nonzero(const Mask3& m) {
  std::size_t n = 0;
  for (auto v : m.values()) n += v != 0;
  return n;
}

void require_same_geometry(const Geometry& a, const Geometry& b, const char* what) {
  if (!(a == b)) fail(ErrorCode::Geometry, std::string("geometry mismatch: ") + what);
}

}  // namespace tumorsynth
