#pragma once

#include <array>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "tumorsynth/core/nifti.hpp"
#include "tumorsynth/core/rng.hpp"
#include "tumorsynth/placement/placement.hpp"
#include "tumorsynth/shape/shape.hpp"

namespace tumorsynth::pipeline {

// Per-tumor texture parameters are drawn from these ranges; the mean is an
// offset from the host liver mean (lesions render hypodense).
struct TextureDefaults {
  double salt_density = 0.4;
  double salt_value_hu = 1.0;
  double sigma_lo_mm = 0.6;
  double sigma_hi_mm = 1.2;
  double mean_offset_lo_hu = -45.0;
  double mean_offset_hi_hu = -15.0;
  double target_std_hu = 15.0;
  double clip_lo_hu = -100.0;
  double clip_hi_hu = 200.0;
};

struct SynthConfig {
  // P(count = 1..5) per case.
  std::array<double, 5> tumor_count_probabilities{0.5, 0.25, 0.15, 0.07, 0.03};
  // tiny, small, medium, large
  std::array<double, 4> size_class_weights{0.25, 0.25, 0.25, 0.25};
  shape::ShapeParams shape;
  TextureDefaults texture;
  placement::EffectParams effects;
  // Mass effect only applies to tumors at least this large.
  double mass_effect_min_radius_mm = 22.0;
  placement::PlacementPolicy placement;
  // Fresh locations tried when a new tumor would touch an existing one.
  int location_retries = 20;
  Seed master_seed = 0;
  nifti::ImageEncoding image_encoding = nifti::ImageEncoding::Float32;

  void validate() const;
};

nlohmann::json to_json(const SynthConfig& cfg);

// Missing keys keep their defaults; unknown keys are rejected so that typos
// in config files do not silently fall back to defaults.
SynthConfig config_from_json(const nlohmann::json& j);

SynthConfig load_config(const std::filesystem::path& path);

// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const SynthConfig& cfg);

const char* toolkit_version();

}  // namespace tumorsynth::pipeline
