#pragma once

#include <optional>
#include <string_view>

#include "tumorsynth/core/grid.hpp"
#include "tumorsynth/core/rng.hpp"

namespace tumorsynth::shape {

// Equivalent-sphere radius classes. Ranges are contiguous over [2, 44] mm with
// the 10 mm small/medium boundary; `large` is closed at 44.
enum class SizeClass { Tiny, Small, Medium, Large };

inline constexpr SizeClass kAllSizeClasses[] = {SizeClass::Tiny, SizeClass::Small,
                                                SizeClass::Medium, SizeClass::Large};

struct RadiusRange {
  double lo;
  double hi;
};

RadiusRange radius_range(SizeClass cls);
const char* to_string(SizeClass cls);
std::optional<SizeClass> parse_size_class(std::string_view name);

struct ElasticParams {
  double control_spacing_mm = 8.0;
  double displacement_sigma_mm = 2.0;
  double smoothing_sigma_mm = 4.0;

  // Throws unless all positive (displacement may be 0) and
  // displacement_sigma_mm <= control_spacing_mm / 2.
  void validate() const;
};

struct ShapeParams {
  ElasticParams elastic;
  double axis_ratio_lo = 0.7;
  double axis_ratio_hi = 1.3;
  // Soft-edge sigma = max(soften_min_sigma_mm, soften_radius_fraction * r).
  double soften_min_sigma_mm = 1.0;
  double soften_radius_fraction = 0.15;
  // Small tumors would be torn apart by the full displacement; the effective
  // displacement sigma is min(elastic.displacement_sigma_mm, fraction * r).
  double displacement_radius_fraction = 0.25;
  int max_attempts = 10;
  double radius_tolerance = 0.2;

  void validate() const;
};

struct TumorShape {
  SoftMask3 soft;  // local crop at host spacing
  Mask3 hard;      // exactly soft >= 0.5
  double radius_mm = 0.0;         // equivalent radius of `hard`
  double target_radius_mm = 0.0;  // radius drawn before deformation
  Vec3 semi_axes_mm{0, 0, 0};
  // Crop extent relative to the tumor centre voxel: the centre sits at
  // index -crop_box.offset inside `soft`/`hard`.
  CropBox crop_box;
  int attempts = 0;
};

// Voxel index of local world (0,0,0) in a crop produced by this module.
Index3 center_index(const Geometry& local);

// Voxelized ellipsoid centred on the middle voxel of a crop sized to the
// rotated ellipsoid plus a 1-voxel margin. `rotation` columns are the
// ellipsoid's principal axes.
Mask3 make_ellipsoid(const Vec3& semi_axes_mm, const Mat3& rotation, const Vec3& spacing);

// Backward warp through a smoothed random coarse-grid displacement field,
// trilinear resampling, threshold 0.5. Output keeps the input geometry.
Mask3 elastic_deform(const Mask3& m, const ElasticParams& params, Seed seed);

// Gaussian-blurred binary mask clamped to [0, 1].
SoftMask3 soften_mask(const Mask3& m, double sigma_mm);

// Uniformly distributed rotation (Shoemake's quaternion method).
Mat3 random_rotation(Rng& rng);

// ellipsoid -> elastic deformation -> soft edge, retried with fresh sub-seeds
// until the hard mask is a single component whose radius lies in the class
// range widened by radius_tolerance. Throws Error(Infeasible,
// "shape sampling failed") when max_attempts are exhausted.
TumorShape sample_shape(SizeClass cls, const Vec3& spacing, Seed seed,
                        const ShapeParams& params = {});

}  // namespace tumorsynth::shape
