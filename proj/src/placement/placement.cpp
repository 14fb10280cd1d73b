#include "tumorsynth/placement/placement.hpp"

#include <algorithm>
#include <cmath>

#include "tumorsynth/core/distance.hpp"
#include "tumorsynth/core/filters.hpp"

namespace tumorsynth::placement {
namespace {

double distance(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

Index3 nearest_voxel(const Geometry& g, const Vec3& world) {
  const Vec3 v = g.world_to_voxel(world);
  return {std::llround(v[0]), std::llround(v[1]), std::llround(v[2])};
}

}  // namespace

void PlacementPolicy::validate() const {
  if (!(margin_mm >= 0.0) || max_attempts < 1 || !(min_separation_mm >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "invalid placement policy");
  }
}

void EffectParams::validate() const {
  const double all[] = {mass_effect_strength, mass_effect_reach_mm, cirrhosis_amplitude_hu,
                        cirrhosis_sigma_mm,   satellite_rate,       satellite_trigger_radius_mm};
  for (double v : all) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorCode::InvalidArgument, "effect parameters must be non-negative");
  }
  if (mass_effect_strength > 1.0) fail(ErrorCode::InvalidArgument, "mass_effect_strength must be <= 1");
}

LocationSampler::LocationSampler(const Mask3& liver) : geometry_(liver.geometry()) {
  std::vector<std::uint8_t> background(liver.size());
  for (std::size_t i = 0; i < liver.size(); ++i) background[i] = liver[i] ? 0 : 1;
  depth_sq_ = squared_distance_to_features(geometry_, background, true);
}

bool LocationSampler::feasible(const Index3& voxel, double erosion_mm) const {
  if (!geometry_.contains(voxel)) return false;
  const std::size_t idx = geometry_.linear(std::size_t(voxel[0]), std::size_t(voxel[1]), std::size_t(voxel[2]));
  return depth_sq_[idx] > erosion_mm * erosion_mm * (1.0 + 1e-12);
}

Location LocationSampler::sample(double tumor_radius_mm, const PlacementPolicy& policy,
                                 std::span<const TumorSpec> existing, Seed seed) const {
  policy.validate();
  const double erosion = 0.5 * tumor_radius_mm + policy.margin_mm;
  const double limit = erosion * erosion * (1.0 + 1e-12);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < depth_sq_.size(); ++i) {
    if (depth_sq_[i] > limit) candidates.push_back(i);
  }
  if (candidates.empty()) fail(ErrorCode::Infeasible, "no feasible location");

  Rng rng(seed);
  for (int attempt = 0; attempt < policy.max_attempts; ++attempt) {
    const std::size_t idx = candidates[rng.below(candidates.size())];
    const Index3 v = geometry_.unravel(idx);
    const Vec3 world = geometry_.voxel_to_world({double(v[0]), double(v[1]), double(v[2])});
    const bool separated = std::all_of(existing.begin(), existing.end(), [&](const TumorSpec& t) {
      return distance(world, t.center_world_mm) >= policy.min_separation_mm;
    });
    if (separated) return {world, v};
  }
  fail(ErrorCode::Infeasible, "no feasible location");
}

Location sample_location(const Mask3& liver, double tumor_radius_mm, const PlacementPolicy& policy,
                         std::span<const TumorSpec> existing, Seed seed) {
  if (count_nonzero(liver) == 0) fail(ErrorCode::InvalidArgument, "liver mask is empty");
  return LocationSampler(liver).sample(tumor_radius_mm, policy, existing, seed);
}

CropBox mass_effect_region(const Geometry& g, const Vec3& center_world_mm, double radius_mm,
                           const EffectParams& params) {
  const double reach = radius_mm + 3.0 * params.mass_effect_reach_mm;
  const Vec3 c = g.world_to_voxel(center_world_mm);
  CropBox box;
  for (int a = 0; a < 3; ++a) {
    // direction is orthonormal, so a world ball maps into this index box.
    const double r = reach / g.spacing[a];
    const auto lo = static_cast<std::int64_t>(std::floor(c[a] - r)) - 1;
    const auto hi = static_cast<std::int64_t>(std::ceil(c[a] + r)) + 1;
    box.offset[a] = lo;
    box.dims[a] = static_cast<std::size_t>(hi - lo + 1);
  }
  return intersect(box, CropBox{{0, 0, 0}, g.dims});
}

Volume3 mass_effect(const Volume3& host, const Mask3& liver, const Vec3& center_world_mm,
                    double radius_mm, const EffectParams& params, Seed /*seed*/) {
  params.validate();
  require_same_geometry(host.geometry(), liver.geometry(), "mass_effect liver");
  Volume3 out = host;
  if (params.mass_effect_strength == 0.0 || radius_mm <= 0.0) return out;

  const Geometry& g = host.geometry();
  const double reach = params.mass_effect_reach_mm;
  const double outer = radius_mm + 3.0 * reach;
  const CropBox box = mass_effect_region(g, center_world_mm, radius_mm, params);
  const auto clamp_coord = [&](double v, int a) {
    return std::clamp(v, 0.0, static_cast<double>(g.dims[a] - 1));
  };
  for (std::size_t k = 0; k < box.dims[2]; ++k)
    for (std::size_t j = 0; j < box.dims[1]; ++j)
      for (std::size_t i = 0; i < box.dims[0]; ++i) {
        const std::size_t gi = std::size_t(box.offset[0]) + i;
        const std::size_t gj = std::size_t(box.offset[1]) + j;
        const std::size_t gk = std::size_t(box.offset[2]) + k;
        const std::size_t idx = g.linear(gi, gj, gk);
        if (!liver[idx]) continue;
        const Vec3 x = g.voxel_to_world({double(gi), double(gj), double(gk)});
        const double d = distance(x, center_world_mm);
        if (!(d > radius_mm) || d > outer || (reach == 0.0)) continue;
        const double m = params.mass_effect_strength * radius_mm * std::exp(-(d - radius_mm) / reach);
        Vec3 src;
        for (int a = 0; a < 3; ++a) src[a] = x[a] - m * (x[a] - center_world_mm[a]) / d;
        const Vec3 v = g.world_to_voxel(src);
        out[idx] = static_cast<float>(
            trilinear(host, clamp_coord(v[0], 0), clamp_coord(v[1], 1), clamp_coord(v[2], 2)));
      }
  return out;
}

CropBox cirrhosis_into(Volume3& image, const Mask3& liver, const Mask3& tumor_local,
                       const CropBox& tumor_box, const Mask3& exclude, const EffectParams& params,
                       Seed seed) {
  params.validate();
  if (params.cirrhosis_amplitude_hu == 0.0 || params.cirrhosis_sigma_mm == 0.0) return CropBox{};
  const Geometry& g = image.geometry();
  const double width = 2.0 * params.cirrhosis_sigma_mm;

  CropBox region;
  for (int a = 0; a < 3; ++a) {
    const auto pad = static_cast<std::int64_t>(std::ceil(width / g.spacing[a]));
    region.offset[a] = tumor_box.offset[a] - pad;
    region.dims[a] = tumor_box.dims[a] + static_cast<std::size_t>(2 * pad);
  }
  region = intersect(region, CropBox{{0, 0, 0}, g.dims});
  if (region.empty()) return CropBox{};

  // Tumor mask resampled into the region (index arithmetic only).
  Geometry rg = sub_geometry(g, region.offset, region.dims);
  std::vector<std::uint8_t> tumor(rg.voxel_count(), 0);
  for (std::size_t k = 0; k < tumor_box.dims[2]; ++k)
    for (std::size_t j = 0; j < tumor_box.dims[1]; ++j)
      for (std::size_t i = 0; i < tumor_box.dims[0]; ++i) {
        if (!tumor_local(i, j, k)) continue;
        const Index3 p{tumor_box.offset[0] + std::int64_t(i) - region.offset[0],
                       tumor_box.offset[1] + std::int64_t(j) - region.offset[1],
                       tumor_box.offset[2] + std::int64_t(k) - region.offset[2]};
        if (rg.contains(p)) tumor[rg.linear(std::size_t(p[0]), std::size_t(p[1]), std::size_t(p[2]))] = 1;
      }
  const auto dist_sq = squared_distance_to_features(rg, tumor, false);

  Rng rng(seed);
  std::vector<float> noise(rg.voxel_count());
  for (auto& v : noise) v = static_cast<float>(rng.normal());
  const Vec3 sigma{params.cirrhosis_sigma_mm, params.cirrhosis_sigma_mm, params.cirrhosis_sigma_mm};
  gaussian_blur_in_place(rg, noise, sigma);
  // Std of white noise after the separable kernel: product of per-axis L2 norms.
  double norm = 1.0;
  for (int a = 0; a < 3; ++a) {
    double s2 = 0;
    for (double w : gaussian_kernel(sigma[a] / g.spacing[a])) s2 += w * w;
    norm *= std::sqrt(s2);
  }
  const double gain = params.cirrhosis_amplitude_hu / norm;
  const double limit = width * width * (1.0 + 1e-12);

  for (std::size_t k = 0; k < region.dims[2]; ++k)
    for (std::size_t j = 0; j < region.dims[1]; ++j)
      for (std::size_t i = 0; i < region.dims[0]; ++i) {
        const std::size_t li = rg.linear(i, j, k);
        if (!(dist_sq[li] > 0.0 && dist_sq[li] <= limit)) continue;
        const std::size_t gi = g.linear(std::size_t(region.offset[0]) + i, std::size_t(region.offset[1]) + j,
                                        std::size_t(region.offset[2]) + k);
        if (!liver[gi] || exclude[gi]) continue;
        image[gi] = static_cast<float>(double(image[gi]) + gain * noise[li]);
      }
  return region;
}

Volume3 cirrhosis_texture(const Volume3& host, const Mask3& liver, const Mask3& tumor_hard,
                          const EffectParams& params, Seed seed) {
  require_same_geometry(host.geometry(), liver.geometry(), "cirrhosis liver");
  require_same_geometry(host.geometry(), tumor_hard.geometry(), "cirrhosis tumor");
  Volume3 out = host;
  const CropBox box = support_box(tumor_hard);
  if (box.empty()) return out;
  cirrhosis_into(out, liver, crop(tumor_hard, box), box, tumor_hard, params, seed);
  return out;
}

SatelliteDraw spawn_satellites(const TumorSpec& main, const LocationSampler& liver,
                               const EffectParams& params, const PlacementPolicy& policy, Seed seed) {
  params.validate();
  policy.validate();
  SatelliteDraw draw;
  if (main.radius_mm < params.satellite_trigger_radius_mm || params.satellite_rate == 0.0) return draw;

  Rng rng(seed);
  draw.drawn = rng.poisson(params.satellite_rate);
  const double inner = kSatelliteShellInner * main.radius_mm;
  const double outer = kSatelliteShellOuter * main.radius_mm;
  const double erosion = 0.5 * shape::radius_range(shape::SizeClass::Tiny).hi + policy.margin_mm;
  const Geometry& g = liver.geometry();

  for (unsigned s = 0; s < draw.drawn; ++s) {
    bool placed = false;
    for (int attempt = 0; attempt < policy.max_attempts && !placed; ++attempt) {
      Vec3 dir{rng.normal(), rng.normal(), rng.normal()};
      const double len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
      if (len == 0.0) continue;
      const double u = rng.uniform();
      const double rho = std::cbrt(u * (outer * outer * outer - inner * inner * inner) + inner * inner * inner);
      Vec3 p;
      for (int a = 0; a < 3; ++a) p[a] = main.center_world_mm[a] + rho * dir[a] / len;
      const Index3 v = nearest_voxel(g, p);
      if (!liver.feasible(v, erosion)) continue;
      const Vec3 snapped = g.voxel_to_world({double(v[0]), double(v[1]), double(v[2])});
      const double d = distance(snapped, main.center_world_mm);
      if (d < inner || d > outer) continue;

      TumorSpec sat;
      sat.parent_id = main.id;
      sat.center_world_mm = snapped;
      sat.center_voxel = v;
      sat.size_class = shape::SizeClass::Tiny;
      sat.shape_seed = derive_seed(seed, "satellite-shape", s);
      sat.texture_seed = derive_seed(seed, "satellite-texture", s);
      sat.effect_seed = derive_seed(seed, "satellite-effects", s);
      draw.satellites.push_back(sat);
      placed = true;
    }
    if (!placed) ++draw.dropped;
  }
  return draw;
}

SatelliteDraw spawn_satellites(const TumorSpec& main, const Mask3& liver, const EffectParams& params,
                               const PlacementPolicy& policy, Seed seed) {
  return spawn_satellites(main, LocationSampler(liver), params, policy, seed);
}

}  // namespace tumorsynth::placement
