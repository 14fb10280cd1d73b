#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tumorsynth/core/error.hpp"

namespace tumorsynth {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;  // row-major: m[row][col]
using Dims = std::array<std::size_t, 3>;
using Index3 = std::array<std::int64_t, 3>;

constexpr Mat3 identity3() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

// Voxel lattice embedded in world space (mm):
//   world = origin + direction * diag(spacing) * index
// The columns of `direction` are the unit world vectors of the i, j, k axes.
struct Geometry {
  Dims dims{0, 0, 0};
  Vec3 spacing{1, 1, 1};
  Vec3 origin{0, 0, 0};
  Mat3 direction = identity3();

  std::size_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }
  double voxel_volume_mm3() const { return spacing[0] * spacing[1] * spacing[2]; }

  std::size_t linear(std::size_t i, std::size_t j, std::size_t k) const {
    return i + dims[0] * (j + dims[1] * k);
  }
  Index3 unravel(std::size_t idx) const {
    const auto i = idx % dims[0];
    const auto rest = idx / dims[0];
    return {static_cast<std::int64_t>(i), static_cast<std::int64_t>(rest % dims[1]),
            static_cast<std::int64_t>(rest / dims[1])};
  }
  bool contains(const Index3& p) const {
    for (int a = 0; a < 3; ++a) {
      if (p[a] < 0 || p[a] >= static_cast<std::int64_t>(dims[a])) return false;
    }
    return true;
  }

  Vec3 voxel_to_world(const Vec3& ijk) const;
  Vec3 world_to_voxel(const Vec3& p) const;

  // Throws Error(InvalidArgument) on non-positive spacing or a direction
  // matrix that is not orthonormal within 1e-6.
  void validate() const;

  // Exact equality of every field.
  bool operator==(const Geometry&) const = default;
};

// Cropped sub-lattice of `parent` starting at `offset` (may lie partly outside
// the parent; geometry is extrapolated).
Geometry sub_geometry(const Geometry& parent, const Index3& offset, const Dims& dims);

struct CropBox {
  Index3 offset{0, 0, 0};
  Dims dims{0, 0, 0};

  bool empty() const { return dims[0] == 0 || dims[1] == 0 || dims[2] == 0; }
  bool inside(const Dims& host) const;
  Index3 end() const {
    return {offset[0] + static_cast<std::int64_t>(dims[0]),
            offset[1] + static_cast<std::int64_t>(dims[1]),
            offset[2] + static_cast<std::int64_t>(dims[2])};
  }
  bool operator==(const CropBox&) const = default;
};

CropBox intersect(const CropBox& a, const CropBox& b);

struct HuTag {};
struct LabelTag {};
struct WeightTag {};
struct FieldTag {};

// Dense 3-D grid with geometry. The tag keeps images, labels, blend weights
// and scratch fields from being mixed up at compile time.
template <typename T, typename Tag>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  explicit Grid(Geometry geometry, T fill = T{})
      : geometry_(std::move(geometry)), data_(geometry_.voxel_count(), fill) {}
  Grid(Geometry geometry, std::vector<T> data)
      : geometry_(std::move(geometry)), data_(std::move(data)) {
    if (data_.size() != geometry_.voxel_count()) {
      fail(ErrorCode::InvalidArgument, "grid data length does not match dims");
    }
  }

  const Geometry& geometry() const { return geometry_; }
  const Dims& dims() const { return geometry_.dims; }
  const Vec3& spacing() const { return geometry_.spacing; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator[](std::size_t idx) { return data_[idx]; }
  const T& operator[](std::size_t idx) const { return data_[idx]; }
  T& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[geometry_.linear(i, j, k)];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[geometry_.linear(i, j, k)];
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  const std::vector<T>& storage() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  Geometry geometry_;
  std::vector<T> data_;
};

using Volume3 = Grid<float, HuTag>;
using Mask3 = Grid<std::uint8_t, LabelTag>;
using SoftMask3 = Grid<float, WeightTag>;
using Field3 = Grid<float, FieldTag>;

template <typename To, typename From>
To grid_cast(const From& src) {
  std::vector<typename To::value_type> out(src.size());
  for (std::size_t n = 0; n < src.size(); ++n) {
    out[n] = static_cast<typename To::value_type>(src[n]);
  }
  return To(src.geometry(), std::move(out));
}

// Copy of the voxels of `src` inside `box`; voxels of the box outside `src`
// take `fill`.
template <typename G>
G crop(const G& src, const CropBox& box, typename G::value_type fill = {}) {
  G out(sub_geometry(src.geometry(), box.offset, box.dims), fill);
  const auto& d = src.dims();
  for (std::size_t k = 0; k < box.dims[2]; ++k) {
    const std::int64_t sk = box.offset[2] + static_cast<std::int64_t>(k);
    if (sk < 0 || sk >= static_cast<std::int64_t>(d[2])) continue;
    for (std::size_t j = 0; j < box.dims[1]; ++j) {
      const std::int64_t sj = box.offset[1] + static_cast<std::int64_t>(j);
      if (sj < 0 || sj >= static_cast<std::int64_t>(d[1])) continue;
      for (std::size_t i = 0; i < box.dims[0]; ++i) {
        const std::int64_t si = box.offset[0] + static_cast<std::int64_t>(i);
        if (si < 0 || si >= static_cast<std::int64_t>(d[0])) continue;
        out(i, j, k) = src(static_cast<std::size_t>(si), static_cast<std::size_t>(sj),
                           static_cast<std::size_t>(sk));
      }
    }
  }
  return out;
}

template <typename G>
G pad(const G& src, std::size_t margin, typename G::value_type fill = {}) {
  const auto m = static_cast<std::int64_t>(margin);
  const Dims& d = src.dims();
  return crop(src, CropBox{{-m, -m, -m}, {d[0] + 2 * margin, d[1] + 2 * margin, d[2] + 2 * margin}},
              fill);
}

// Tight bounding box of voxels with value != 0. Empty box when none.
template <typename G>
CropBox support_box(const G& g) {
  const auto& d = g.dims();
  Index3 lo{std::int64_t(d[0]), std::int64_t(d[1]), std::int64_t(d[2])};
  Index3 hi{-1, -1, -1};
  for (std::size_t k = 0; k < d[2]; ++k)
    for (std::size_t j = 0; j < d[1]; ++j)
      for (std::size_t i = 0; i < d[0]; ++i) {
        if (g(i, j, k) == typename G::value_type{}) continue;
        const Index3 p{std::int64_t(i), std::int64_t(j), std::int64_t(k)};
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], p[a]);
          hi[a] = std::max(hi[a], p[a]);
        }
      }
  if (hi[0] < 0) return CropBox{};
  return CropBox{lo, {std::size_t(hi[0] - lo[0] + 1), std::size_t(hi[1] - lo[1] + 1),
                      std::size_t(hi[2] - lo[2] + 1)}};
}

std::size_t count_nonzero(const Mask3& m);

// Throws unless `a` and `b` share dims, spacing, origin and direction exactly.
void require_same_geometry(const Geometry& a, const Geometry& b, const char* what);

}  // namespace tumorsynth
