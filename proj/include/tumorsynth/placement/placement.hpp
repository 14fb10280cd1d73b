#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tumorsynth/core/grid.hpp"
#include "tumorsynth/core/rng.hpp"
#include "tumorsynth/shape/shape.hpp"
#include "tumorsynth/texture/texture.hpp"

namespace tumorsynth::placement {

struct PlacementPolicy {
  double margin_mm = 2.0;
  int max_attempts = 100;
  double min_separation_mm = 0.0;

  void validate() const;
};

struct EffectParams {
  // Peak outward displacement as a fraction of the tumor radius.
  double mass_effect_strength = 0.3;
  double mass_effect_reach_mm = 10.0;
  double cirrhosis_amplitude_hu = 10.0;
  double cirrhosis_sigma_mm = 2.0;
  double satellite_rate = 3.0;
  double satellite_trigger_radius_mm = 22.0;

  void validate() const;
};

struct EffectFlags {
  bool mass_effect = false;
  bool cirrhosis = false;
};

struct TumorSpec {
  int id = 0;
  std::optional<int> parent_id;  // set for satellites
  Vec3 center_world_mm{0, 0, 0};
  Index3 center_voxel{0, 0, 0};
  shape::SizeClass size_class = shape::SizeClass::Small;
  double target_radius_mm = 0.0;  // drawn by the shape sampler
  double radius_mm = 0.0;         // realized equivalent radius of the label
  Seed shape_seed = 0;
  Seed texture_seed = 0;
  Seed effect_seed = 0;
  texture::TextureParams texture;
  EffectFlags effects;
  double mass_effect_strength = 0.0;
};

struct Location {
  Vec3 world{0, 0, 0};
  Index3 voxel{0, 0, 0};
};

// Precomputes the liver depth map once so that many tumors can be placed in
// the same case without repeating the distance transform.
class LocationSampler {
 public:
  explicit LocationSampler(const Mask3& liver);

  // Uniform over voxels of erode(liver, 0.5 * radius + margin), rejecting
  // draws closer than min_separation_mm to any `existing` centre.
  Location sample(double tumor_radius_mm, const PlacementPolicy& policy,
                  std::span<const TumorSpec> existing, Seed seed) const;

  // True if `voxel` lies in the liver eroded by `erosion_mm`.
  bool feasible(const Index3& voxel, double erosion_mm) const;

  const Geometry& geometry() const { return geometry_; }

 private:
  Geometry geometry_;
  std::vector<double> depth_sq_;
};

Location sample_location(const Mask3& liver, double tumor_radius_mm, const PlacementPolicy& policy,
                         std::span<const TumorSpec> existing, Seed seed);

// Radial backward warp of liver voxels with centre distance d in
// (radius, radius + 3 * reach]: the value at x is read from
// x - m(d) * (x - c) / d with m(d) = strength * radius * exp(-(d - radius) / reach).
// Every other voxel is copied bit-for-bit.
Volume3 mass_effect(const Volume3& host, const Mask3& liver, const Vec3& center_world_mm,
                    double radius_mm, const EffectParams& params, Seed seed);

// Index box (clipped to the grid) that mass_effect may touch.
CropBox mass_effect_region(const Geometry& g, const Vec3& center_world_mm, double radius_mm,
                           const EffectParams& params);

// Adds smoothed zero-mean noise (std cirrhosis_amplitude_hu, correlation scale
// cirrhosis_sigma_mm) to liver voxels within 2 * cirrhosis_sigma_mm of the
// tumor, never to tumor voxels.
Volume3 cirrhosis_texture(const Volume3& host, const Mask3& liver, const Mask3& tumor_hard,
                          const EffectParams& params, Seed seed);

// In-place variant. `tumor_local` is a tumor mask living at `tumor_box` of the
// host grid; voxels set in `exclude` are never modified. Returns the index box
// that may have changed.
CropBox cirrhosis_into(Volume3& image, const Mask3& liver, const Mask3& tumor_local,
                       const CropBox& tumor_box, const Mask3& exclude, const EffectParams& params,
                       Seed seed);

struct SatelliteDraw {
  std::vector<TumorSpec> satellites;
  unsigned drawn = 0;
  unsigned dropped = 0;
};

// Inner/outer shell radii, as multiples of the main tumor radius.
inline constexpr double kSatelliteShellInner = 1.2;
inline constexpr double kSatelliteShellOuter = 2.5;

// For a main tumor with radius >= trigger, draws k ~ Poisson(rate) tiny
// satellites with centres uniform in the shell around the main centre,
// restricted to the feasible liver region (rejection, max_attempts draws per
// satellite; satellites that never land are dropped and counted).
SatelliteDraw spawn_satellites(const TumorSpec& main, const LocationSampler& liver,
                               const EffectParams& params, const PlacementPolicy& policy, Seed seed);

SatelliteDraw spawn_satellites(const TumorSpec& main, const Mask3& liver, const EffectParams& params,
                               const PlacementPolicy& policy, Seed seed);

}  // namespace tumorsynth::placement
