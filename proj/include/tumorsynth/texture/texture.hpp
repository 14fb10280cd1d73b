#pragma once

#include "tumorsynth/core/grid.hpp"
#include "tumorsynth/core/rng.hpp"

namespace tumorsynth::texture {

struct TextureParams {
  double salt_density = 0.4;
  double salt_value_hu = 1.0;
  double sigma_mm = 0.9;
  double target_mean_hu = 60.0;
  double target_std_hu = 15.0;
  double clip_lo_hu = -100.0;
  double clip_hi_hu = 200.0;

  void validate() const;
};

// Each voxel independently takes value_hu with probability `density`, else 0.
// The result has unit spacing; callers re-grid as needed.
Volume3 salt_noise(const Dims& dims, double density, double value_hu, Seed seed);

// salt noise -> Gaussian blur (sigma_mm) -> affine rescale to the target
// mean/std over the whole crop -> clamp to [clip_lo_hu, clip_hi_hu].
// A flat field after blurring is an error unless target_std_hu == 0.
Volume3 texture_field(const Dims& dims, const Vec3& spacing, const TextureParams& params, Seed seed);

// out = (1 - w) * host + w * tex inside `box`; voxels with w == 0 and all
// voxels outside the box are copied bit-for-bit.
Volume3 blend(const Volume3& host, const Volume3& tex, const SoftMask3& soft, const CropBox& box);

// In-place variant used by the pipeline.
void blend_into(Volume3& host, const Volume3& tex, const SoftMask3& soft, const CropBox& box);

}  // namespace tumorsynth::texture
