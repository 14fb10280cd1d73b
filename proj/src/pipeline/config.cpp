#include "tumorsynth/pipeline/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace tumorsynth::pipeline {

using nlohmann::json;

namespace {

void check_probabilities(std::span<const double> p, const char* what, bool must_sum_to_one) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      fail(ErrorCode::InvalidArgument, std::string(what) + " must be non-negative");
    }
    sum += v;
  }
  if (must_sum_to_one && std::abs(sum - 1.0) > 1e-9) {
    fail(ErrorCode::InvalidArgument, std::string(what) + " must sum to 1");
  }
  if (!(sum > 0.0)) fail(ErrorCode::InvalidArgument, std::string(what) + " are all zero");
}

// Reads `key` into `out` when present; records that the key was consumed.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(ErrorCode::InvalidArgument, "config: '" + path_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::InvalidArgument, "config: bad value for '" + path_ + key + "'");
    }
  }

  const json* child(const char* key) {
    seen_.push_back(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
        fail(ErrorCode::InvalidArgument, "config: unknown key '" + path_ + it.key() + "'");
      }
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::vector<std::string> seen_;
};

}  // namespace

void SynthConfig::validate() const {
  check_probabilities(tumor_count_probabilities, "tumor_count_probabilities", true);
  check_probabilities(size_class_weights, "size_class_weights", false);
  shape.validate();
  effects.validate();
  placement.validate();
  const auto& t = texture;
  if (!(t.salt_density >= 0.0 && t.salt_density <= 1.0) || !(t.sigma_lo_mm >= 0.0) ||
      !(t.sigma_lo_mm <= t.sigma_hi_mm) || !(t.mean_offset_lo_hu <= t.mean_offset_hi_hu) ||
      !(t.target_std_hu >= 0.0) || !(t.clip_lo_hu < t.clip_hi_hu)) {
    fail(ErrorCode::InvalidArgument, "invalid texture defaults");
  }
  if (!(mass_effect_min_radius_mm >= 0.0)) fail(ErrorCode::InvalidArgument, "invalid mass_effect_min_radius_mm");
  if (location_retries < 1) fail(ErrorCode::InvalidArgument, "location_retries must be >= 1");
}

json to_json(const SynthConfig& c) {
  json j;
  j["master_seed"] = c.master_seed;
  j["tumor_count_probabilities"] = c.tumor_count_probabilities;
  j["size_class_weights"] = {{"tiny", c.size_class_weights[0]},
                             {"small", c.size_class_weights[1]},
                             {"medium", c.size_class_weights[2]},
                             {"large", c.size_class_weights[3]}};
  const auto& s = c.shape;
  j["shape"] = {{"elastic",
                 {{"control_spacing_mm", s.elastic.control_spacing_mm},
                  {"displacement_sigma_mm", s.elastic.displacement_sigma_mm},
                  {"smoothing_sigma_mm", s.elastic.smoothing_sigma_mm}}},
                {"axis_ratio_range", {s.axis_ratio_lo, s.axis_ratio_hi}},
                {"soften_min_sigma_mm", s.soften_min_sigma_mm},
                {"soften_radius_fraction", s.soften_radius_fraction},
                {"displacement_radius_fraction", s.displacement_radius_fraction},
                {"max_attempts", s.max_attempts},
                {"radius_tolerance", s.radius_tolerance}};
  const auto& t = c.texture;
  j["texture"] = {{"salt_density", t.salt_density},
                  {"salt_value_hu", t.salt_value_hu},
                  {"sigma_range_mm", {t.sigma_lo_mm, t.sigma_hi_mm}},
                  {"mean_offset_range_hu", {t.mean_offset_lo_hu, t.mean_offset_hi_hu}},
                  {"target_std_hu", t.target_std_hu},
                  {"clip_hu", {t.clip_lo_hu, t.clip_hi_hu}}};
  const auto& e = c.effects;
  j["effects"] = {{"mass_effect_strength", e.mass_effect_strength},
                  {"mass_effect_min_radius_mm", c.mass_effect_min_radius_mm},
                  {"mass_effect_reach_mm", e.mass_effect_reach_mm},
                  {"cirrhosis_amplitude_hu", e.cirrhosis_amplitude_hu},
                  {"cirrhosis_sigma_mm", e.cirrhosis_sigma_mm},
                  {"satellite_rate", e.satellite_rate},
                  {"satellite_trigger_radius_mm", e.satellite_trigger_radius_mm}};
  j["placement"] = {{"margin_mm", c.placement.margin_mm},
                    {"max_attempts", c.placement.max_attempts},
                    {"min_separation_mm", c.placement.min_separation_mm},
                    {"location_retries", c.location_retries}};
  j["image_encoding"] = c.image_encoding == nifti::ImageEncoding::Float32 ? "float32" : "int16";
  return j;
}

SynthConfig config_from_json(const json& j) {
  SynthConfig c;
  Reader root(j, "");
  root.get("master_seed", c.master_seed);
  root.get("tumor_count_probabilities", c.tumor_count_probabilities);
  if (const json* w = root.child("size_class_weights")) {
    Reader r(*w, "size_class_weights.");
    r.get("tiny", c.size_class_weights[0]);
    r.get("small", c.size_class_weights[1]);
    r.get("medium", c.size_class_weights[2]);
    r.get("large", c.size_class_weights[3]);
    r.finish();
  }
  if (const json* s = root.child("shape")) {
    Reader r(*s, "shape.");
    if (const json* el = r.child("elastic")) {
      Reader re(*el, "shape.elastic.");
      re.get("control_spacing_mm", c.shape.elastic.control_spacing_mm);
      re.get("displacement_sigma_mm", c.shape.elastic.displacement_sigma_mm);
      re.get("smoothing_sigma_mm", c.shape.elastic.smoothing_sigma_mm);
      re.finish();
    }
    std::array<double, 2> ratio{c.shape.axis_ratio_lo, c.shape.axis_ratio_hi};
    r.get("axis_ratio_range", ratio);
    c.shape.axis_ratio_lo = ratio[0];
    c.shape.axis_ratio_hi = ratio[1];
    r.get("soften_min_sigma_mm", c.shape.soften_min_sigma_mm);
    r.get("soften_radius_fraction", c.shape.soften_radius_fraction);
    r.get("displacement_radius_fraction", c.shape.displacement_radius_fraction);
    r.get("max_attempts", c.shape.max_attempts);
    r.get("radius_tolerance", c.shape.radius_tolerance);
    r.finish();
  }
  if (const json* t = root.child("texture")) {
    Reader r(*t, "texture.");
    auto& tx = c.texture;
    r.get("salt_density", tx.salt_density);
    r.get("salt_value_hu", tx.salt_value_hu);
    std::array<double, 2> sigma{tx.sigma_lo_mm, tx.sigma_hi_mm};
    std::array<double, 2> offset{tx.mean_offset_lo_hu, tx.mean_offset_hi_hu};
    std::array<double, 2> clip{tx.clip_lo_hu, tx.clip_hi_hu};
    r.get("sigma_range_mm", sigma);
    r.get("mean_offset_range_hu", offset);
    r.get("target_std_hu", tx.target_std_hu);
    r.get("clip_hu", clip);
    tx.sigma_lo_mm = sigma[0];
    tx.sigma_hi_mm = sigma[1];
    tx.mean_offset_lo_hu = offset[0];
    tx.mean_offset_hi_hu = offset[1];
    tx.clip_lo_hu = clip[0];
    tx.clip_hi_hu = clip[1];
    r.finish();
  }
  if (const json* e = root.child("effects")) {
    Reader r(*e, "effects.");
    r.get("mass_effect_strength", c.effects.mass_effect_strength);
    r.get("mass_effect_min_radius_mm", c.mass_effect_min_radius_mm);
    r.get("mass_effect_reach_mm", c.effects.mass_effect_reach_mm);
    r.get("cirrhosis_amplitude_hu", c.effects.cirrhosis_amplitude_hu);
    r.get("cirrhosis_sigma_mm", c.effects.cirrhosis_sigma_mm);
    r.get("satellite_rate", c.effects.satellite_rate);
    r.get("satellite_trigger_radius_mm", c.effects.satellite_trigger_radius_mm);
    r.finish();
  }
  if (const json* p = root.child("placement")) {
    Reader r(*p, "placement.");
    r.get("margin_mm", c.placement.margin_mm);
    r.get("max_attempts", c.placement.max_attempts);
    r.get("min_separation_mm", c.placement.min_separation_mm);
    r.get("location_retries", c.location_retries);
    r.finish();
  }
  std::string encoding = c.image_encoding == nifti::ImageEncoding::Float32 ? "float32" : "int16";
  root.get("image_encoding", encoding);
  if (encoding == "float32") {
    c.image_encoding = nifti::ImageEncoding::Float32;
  } else if (encoding == "int16") {
    c.image_encoding = nifti::ImageEncoding::Int16;
  } else {
    fail(ErrorCode::InvalidArgument, "config: image_encoding must be float32 or int16");
  }
  root.finish();
  c.validate();
  return c;
}

SynthConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidArgument, "config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const SynthConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(cfg).dump())));
  return buf;
}

const char* toolkit_version() { return TUMORSYNTH_VERSION; }

}  // namespace tumorsynth::pipeline
