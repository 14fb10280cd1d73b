#pragma once

#include <vector>

#include "tumorsynth/core/grid.hpp"

namespace tumorsynth {

struct Component {
  std::vector<std::size_t> voxels;  // linear indices, ascending
  CropBox bbox;
  Vec3 centroid{0, 0, 0};  // voxel coordinates
  double radius_mm = 0.0;  // radius of the sphere with the same volume

  std::size_t count() const { return voxels.size(); }
};

double equivalent_radius_mm(std::size_t voxel_count, const Vec3& spacing);

// 26-connected components, largest first (ties keep scan order).
std::vector<Component> connected_components(const Mask3& m);

// Component label per voxel (0 = background, n = index n-1 in the result of
// connected_components).
std::vector<std::uint32_t> label_components(const Mask3& m, const std::vector<Component>& comps);

}  // namespace tumorsynth
