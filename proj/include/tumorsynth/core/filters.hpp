#pragma once

#include <vector>

#include "tumorsynth/core/grid.hpp"

namespace tumorsynth {

// Normalized 1-D Gaussian taps for offsets -R..R, R = floor(3 * sigma_voxels).
// sigma_voxels == 0 yields the single tap {1}.
std::vector<double> gaussian_kernel(double sigma_voxels);

// Separable Gaussian convolution in place. Per-axis voxel sigma is
// sigma_mm / spacing; borders replicate the edge voxel.
void gaussian_blur_in_place(const Geometry& geometry, std::span<float> values, const Vec3& sigma_mm);

template <typename Tag>
Grid<float, Tag> gaussian_blur(const Grid<float, Tag>& src, const Vec3& sigma_mm) {
  Grid<float, Tag> out = src;
  gaussian_blur_in_place(out.geometry(), out.values(), sigma_mm);
  return out;
}

template <typename Tag>
Grid<float, Tag> gaussian_blur(const Grid<float, Tag>& src, double sigma_mm) {
  return gaussian_blur(src, Vec3{sigma_mm, sigma_mm, sigma_mm});
}

// Binary erosion by the ball {d : |d|_mm <= radius_mm} over voxel offsets.
// Voxels outside the grid count as background.
Mask3 erode(const Mask3& m, double radius_mm);

// Binary dilation by the same ball (outside of the grid ignored).
Mask3 dilate(const Mask3& m, double radius_mm);

// Trilinear sample at continuous voxel coordinates; samples outside the grid
// read `outside`.
template <typename G>
double trilinear(const G& g, double x, double y, double z, double outside = 0.0);

}  // namespace tumorsynth

#include "tumorsynth/core/filters_inl.hpp"
