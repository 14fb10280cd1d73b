#pragma once

#include <span>
#include <vector>

#include "tumorsynth/core/grid.hpp"

namespace tumorsynth {

// Exact squared Euclidean distance transform (mm^2, spacing-aware) from every
// voxel centre to the nearest voxel centre where `feature` is nonzero.
// With `border_is_feature`, the ring of voxels just outside the grid counts
// as feature too. Voxels with no reachable feature get +infinity.
std::vector<double> squared_distance_to_features(const Geometry& geometry,
                                                 std::span<const std::uint8_t> feature,
                                                 bool border_is_feature);

// Distance (mm) from each foreground voxel to the nearest background voxel,
// where everything outside the grid is background; 0 on background.
Field3 depth_inside_mm(const Mask3& m);

}  // namespace tumorsynth
