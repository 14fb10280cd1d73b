#include "tumorsynth/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <optional>

#include "tumorsynth/texture/texture.hpp"

namespace tumorsynth::pipeline {

using placement::TumorSpec;
using shape::SizeClass;
using shape::TumorShape;

namespace {

std::size_t categorical(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  // Rounding fallthrough: last bin with positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return 0;
}

struct Planted {
  TumorSpec spec;
  TumorShape shape;
  CropBox host_box;  // shape crop placed in host index space (may exceed the grid)
};

CropBox place_box(const TumorShape& shape, const Index3& center) {
  CropBox b = shape.crop_box;
  for (int a = 0; a < 3; ++a) b.offset[a] += center[a];
  return b;
}

// True if any hard voxel of the shape lands on or next to (26-adjacency) a
// voxel already in `label`.
bool touches(const Mask3& label, const TumorShape& shape, const CropBox& box) {
  const Geometry& g = label.geometry();
  const Dims& d = shape.hard.dims();
  for (std::size_t k = 0; k < d[2]; ++k)
    for (std::size_t j = 0; j < d[1]; ++j)
      for (std::size_t i = 0; i < d[0]; ++i) {
        if (!shape.hard(i, j, k)) continue;
        const Index3 p{box.offset[0] + std::int64_t(i), box.offset[1] + std::int64_t(j),
                       box.offset[2] + std::int64_t(k)};
        for (int dz = -1; dz <= 1; ++dz)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const Index3 q{p[0] + dx, p[1] + dy, p[2] + dz};
              if (g.contains(q) && label(std::size_t(q[0]), std::size_t(q[1]), std::size_t(q[2]))) return true;
            }
      }
  return false;
}

void stamp(Mask3& label, const TumorShape& shape, const CropBox& box) {
  const Geometry& g = label.geometry();
  const Dims& d = shape.hard.dims();
  for (std::size_t k = 0; k < d[2]; ++k)
    for (std::size_t j = 0; j < d[1]; ++j)
      for (std::size_t i = 0; i < d[0]; ++i) {
        if (!shape.hard(i, j, k)) continue;
        const Index3 p{box.offset[0] + std::int64_t(i), box.offset[1] + std::int64_t(j),
                       box.offset[2] + std::int64_t(k)};
        if (g.contains(p)) label(std::size_t(p[0]), std::size_t(p[1]), std::size_t(p[2])) = 1;
      }
}

void mark_box(Mask3& m, const CropBox& box) {
  const CropBox b = intersect(box, CropBox{{0, 0, 0}, m.dims()});
  for (std::size_t k = 0; k < b.dims[2]; ++k)
    for (std::size_t j = 0; j < b.dims[1]; ++j)
      for (std::size_t i = 0; i < b.dims[0]; ++i) {
        m(std::size_t(b.offset[0]) + i, std::size_t(b.offset[1]) + j, std::size_t(b.offset[2]) + k) = 1;
      }
}

double liver_mean_hu(const Volume3& ct, const Mask3& liver) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < ct.size(); ++i) {
    if (liver[i]) {
      sum += ct[i];
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

texture::TextureParams draw_texture(const SynthConfig& cfg, double liver_mean, Seed texture_seed) {
  const auto& t = cfg.texture;
  Rng rng(derive_seed(texture_seed, "params"));
  texture::TextureParams p;
  p.salt_density = t.salt_density;
  p.salt_value_hu = t.salt_value_hu;
  p.sigma_mm = rng.uniform(t.sigma_lo_mm, t.sigma_hi_mm);
  p.target_mean_hu = std::clamp(liver_mean + rng.uniform(t.mean_offset_lo_hu, t.mean_offset_hi_hu),
                                t.clip_lo_hu, t.clip_hi_hu);
  p.target_std_hu = t.target_std_hu;
  p.clip_lo_hu = t.clip_lo_hu;
  p.clip_hi_hu = t.clip_hi_hu;
  return p;
}

class Planner {
 public:
  Planner(const Volume3& ct, const Mask3& liver, const SynthConfig& cfg, std::vector<std::string>& warnings)
      : cfg_(cfg), sampler_(liver), label_(ct.geometry()), warnings_(warnings) {}

  // Draws a shape and a location (or uses `fixed`), then stamps the label.
  bool plant(TumorSpec spec, Seed location_seed, const std::optional<placement::Location>& fixed) {
    TumorShape shape;
    try {
      shape = shape::sample_shape(spec.size_class, label_.spacing(), spec.shape_seed, cfg_.shape);
    } catch (const Error& e) {
      warn(spec, e.what());
      return false;
    }
    spec.target_radius_mm = shape.target_radius_mm;
    spec.radius_mm = shape.radius_mm;

    const int tries = fixed ? 1 : cfg_.location_retries;
    for (int attempt = 0; attempt < tries; ++attempt) {
      placement::Location loc;
      if (fixed) {
        loc = *fixed;
      } else {
        try {
          loc = sampler_.sample(shape.radius_mm, cfg_.placement, specs_view(),
                                derive_seed(location_seed, static_cast<std::uint64_t>(attempt)));
        } catch (const Error& e) {
          warn(spec, e.what());
          return false;
        }
      }
      const CropBox box = place_box(shape, loc.voxel);
      if (touches(label_, shape, box)) continue;
      spec.center_world_mm = loc.world;
      spec.center_voxel = loc.voxel;
      stamp(label_, shape, box);
      planted_.push_back({spec, std::move(shape), box});
      return true;
    }
    warn(spec, fixed ? "satellite would touch another tumor" : "no feasible location");
    return false;
  }

  const placement::LocationSampler& sampler() const { return sampler_; }
  std::vector<Planted>& planted() { return planted_; }
  Mask3& label() { return label_; }

 private:
  std::vector<TumorSpec> specs_view() const {
    std::vector<TumorSpec> out;
    out.reserve(planted_.size());
    for (const auto& p : planted_) out.push_back(p.spec);
    return out;
  }

  void warn(const TumorSpec& spec, const std::string& why) {
    warnings_.push_back("tumor " + std::to_string(spec.id) + " (" + shape::to_string(spec.size_class) +
                        ") dropped: " + why);
  }

  const SynthConfig& cfg_;
  placement::LocationSampler sampler_;
  Mask3 label_;
  std::vector<Planted> planted_;
  std::vector<std::string>& warnings_;
};

}  // namespace

CaseResult synthesize_case(const Volume3& ct, const Mask3& liver, const SynthConfig& cfg, Seed case_seed) {
  const auto started = std::chrono::steady_clock::now();
  cfg.validate();
  ct.geometry().validate();
  require_same_geometry(ct.geometry(), liver.geometry(), "ct vs liver mask");
  if (count_nonzero(liver) == 0) fail(ErrorCode::InvalidArgument, "liver mask is empty");

  CaseResult result;
  result.seed = case_seed;
  Planner planner(ct, liver, cfg, result.warnings);

  Rng plan(derive_seed(case_seed, "plan"));
  const std::size_t count = categorical(plan, cfg.tumor_count_probabilities) + 1;
  std::vector<SizeClass> classes;
  for (std::size_t i = 0; i < count; ++i) {
    classes.push_back(shape::kAllSizeClasses[categorical(plan, cfg.size_class_weights)]);
  }
  result.planned = static_cast<unsigned>(count);

  int next_id = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const Seed base = derive_seed(case_seed, "tumor", i);
    TumorSpec spec;
    spec.id = next_id++;
    spec.size_class = classes[i];
    spec.shape_seed = derive_seed(base, "shape");
    spec.texture_seed = derive_seed(base, "texture");
    spec.effect_seed = derive_seed(base, "effects");
    if (!planner.plant(spec, derive_seed(base, "location"), std::nullopt)) continue;

    const TumorSpec main = planner.planted().back().spec;
    auto sats = placement::spawn_satellites(main, planner.sampler(), cfg.effects, cfg.placement,
                                            derive_seed(base, "satellites"));
    if (sats.dropped > 0) {
      result.warnings.push_back("tumor " + std::to_string(main.id) + ": " + std::to_string(sats.dropped) +
                                " satellite(s) found no feasible location");
    }
    for (auto& sat : sats.satellites) {
      sat.id = next_id++;
      planner.plant(sat, 0, placement::Location{sat.center_world_mm, sat.center_voxel});
    }
  }

  const double liver_mean = liver_mean_hu(ct, liver);
  result.image = ct;
  result.influence = Mask3(ct.geometry());
  const CropBox grid_box{{0, 0, 0}, ct.dims()};

  for (auto& p : planner.planted()) {
    p.spec.texture = draw_texture(cfg, liver_mean, p.spec.texture_seed);
    p.spec.effects.mass_effect = cfg.effects.mass_effect_strength > 0.0 &&
                                 p.spec.radius_mm >= cfg.mass_effect_min_radius_mm;
    p.spec.mass_effect_strength = p.spec.effects.mass_effect ? cfg.effects.mass_effect_strength : 0.0;
    p.spec.effects.cirrhosis = cfg.effects.cirrhosis_amplitude_hu > 0.0 && cfg.effects.cirrhosis_sigma_mm > 0.0;
  }

  // Mass effect first, on the host: parenchyma is pushed out of the tumor
  // footprint before the lesion texture is composited on top.
  for (const auto& p : planner.planted()) {
    if (!p.spec.effects.mass_effect) continue;
    result.image = placement::mass_effect(result.image, liver, p.spec.center_world_mm, p.spec.radius_mm,
                                          cfg.effects, p.spec.effect_seed);
    mark_box(result.influence, placement::mass_effect_region(ct.geometry(), p.spec.center_world_mm,
                                                             p.spec.radius_mm, cfg.effects));
  }

  for (const auto& p : planner.planted()) {
    const Volume3 tex = texture::texture_field(p.shape.soft.dims(), ct.spacing(), p.spec.texture,
                                               p.spec.texture_seed);
    const CropBox clipped = intersect(p.host_box, grid_box);
    if (clipped.empty()) continue;
    const CropBox local{{clipped.offset[0] - p.host_box.offset[0], clipped.offset[1] - p.host_box.offset[1],
                         clipped.offset[2] - p.host_box.offset[2]},
                        clipped.dims};
    const Volume3 tex_part = crop(tex, local);
    const SoftMask3 soft_part = crop(p.shape.soft, local);
    texture::blend_into(result.image, tex_part, soft_part, clipped);
    for (std::size_t k = 0; k < clipped.dims[2]; ++k)
      for (std::size_t j = 0; j < clipped.dims[1]; ++j)
        for (std::size_t i = 0; i < clipped.dims[0]; ++i) {
          if (soft_part(i, j, k) > 0.0f) {
            result.influence(std::size_t(clipped.offset[0]) + i, std::size_t(clipped.offset[1]) + j,
                             std::size_t(clipped.offset[2]) + k) = 1;
          }
        }
  }

  for (const auto& p : planner.planted()) {
    if (!p.spec.effects.cirrhosis) continue;
    const CropBox region = placement::cirrhosis_into(result.image, liver, p.shape.hard, p.host_box,
                                                     planner.label(), cfg.effects, p.spec.effect_seed);
    mark_box(result.influence, region);
  }

  result.label = std::move(planner.label());
  for (const auto& p : planner.planted()) result.specs.push_back(p.spec);
  result.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return result;
}

nlohmann::json to_json(const TumorSpec& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["parent_id"] = s.parent_id ? nlohmann::json(*s.parent_id) : nlohmann::json(nullptr);
  j["center_world_mm"] = s.center_world_mm;
  j["center_voxel"] = s.center_voxel;
  j["size_class"] = shape::to_string(s.size_class);
  j["target_radius_mm"] = s.target_radius_mm;
  j["radius_mm"] = s.radius_mm;
  j["shape_seed"] = s.shape_seed;
  j["texture_seed"] = s.texture_seed;
  j["effect_seed"] = s.effect_seed;
  j["texture"] = {{"salt_density", s.texture.salt_density},
                  {"salt_value_hu", s.texture.salt_value_hu},
                  {"sigma_mm", s.texture.sigma_mm},
                  {"target_mean_hu", s.texture.target_mean_hu},
                  {"target_std_hu", s.texture.target_std_hu},
                  {"clip_hu", {s.texture.clip_lo_hu, s.texture.clip_hi_hu}}};
  j["effects"] = {{"mass_effect", s.effects.mass_effect},
                  {"mass_effect_strength", s.mass_effect_strength},
                  {"cirrhosis", s.effects.cirrhosis}};
  return j;
}

}  // namespace tumorsynth::pipeline
