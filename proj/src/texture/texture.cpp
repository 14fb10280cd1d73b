#include "tumorsynth/texture/texture.hpp"

#include <algorithm>
#include <cmath>

#include "tumorsynth/core/filters.hpp"

namespace tumorsynth::texture {

void TextureParams::validate() const {
  if (!(salt_density >= 0.0 && salt_density <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "salt_density must lie in [0, 1]");
  }
  if (!(sigma_mm >= 0.0)) fail(ErrorCode::InvalidArgument, "texture sigma must be >= 0");
  if (!(target_std_hu >= 0.0)) fail(ErrorCode::InvalidArgument, "target_std_hu must be >= 0");
  if (!(clip_lo_hu < clip_hi_hu)) fail(ErrorCode::InvalidArgument, "clip range is empty");
  if (!(target_mean_hu >= clip_lo_hu && target_mean_hu <= clip_hi_hu)) {
    fail(ErrorCode::InvalidArgument, "target_mean_hu outside clip range");
  }
}

Volume3 salt_noise(const Dims& dims, double density, double value_hu, Seed seed) {
  if (!(density >= 0.0 && density <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "salt density must lie in [0, 1]");
  }
  Geometry g;
  g.dims = dims;
  Volume3 out(g);
  Rng rng(seed);
  const auto v = static_cast<float>(value_hu);
  for (auto& x : out.values()) x = rng.bernoulli(density) ? v : 0.0f;
  return out;
}

Volume3 texture_field(const Dims& dims, const Vec3& spacing, const TextureParams& params, Seed seed) {
  params.validate();
  Geometry g;
  g.dims = dims;
  g.spacing = spacing;
  g.validate();
  const Volume3 salt = salt_noise(dims, params.salt_density, params.salt_value_hu, seed);
  Volume3 field(g, std::vector<float>(salt.values().begin(), salt.values().end()));
  gaussian_blur_in_place(g, field.values(), Vec3{params.sigma_mm, params.sigma_mm, params.sigma_mm});

  double sum = 0.0, sum2 = 0.0;
  for (float v : field.values()) sum += v;
  const double n = static_cast<double>(field.size());
  const double mean = n > 0 ? sum / n : 0.0;
  for (float v : field.values()) sum2 += (v - mean) * (v - mean);
  const double stddev = n > 0 ? std::sqrt(sum2 / n) : 0.0;

  const bool flat = !(stddev > 1e-12 * std::max(1.0, std::abs(mean)));
  if (flat && params.target_std_hu != 0.0) fail(ErrorCode::InvalidArgument, "flat texture");
  const double gain = flat ? 0.0 : params.target_std_hu / stddev;
  for (auto& v : field.values()) {
    const double scaled = params.target_mean_hu + (v - mean) * gain;
    v = static_cast<float>(std::clamp(scaled, params.clip_lo_hu, params.clip_hi_hu));
  }
  return field;
}

void blend_into(Volume3& host, const Volume3& tex, const SoftMask3& soft, const CropBox& box) {
  if (tex.dims() != box.dims || soft.dims() != box.dims) {
    fail(ErrorCode::Geometry, "blend: texture, weights and crop box disagree");
  }
  if (!box.inside(host.dims())) fail(ErrorCode::Geometry, "blend: crop box outside host");
  for (std::size_t k = 0; k < box.dims[2]; ++k)
    for (std::size_t j = 0; j < box.dims[1]; ++j)
      for (std::size_t i = 0; i < box.dims[0]; ++i) {
        const double w = soft(i, j, k);
        if (w == 0.0) continue;
        float& h = host(std::size_t(box.offset[0]) + i, std::size_t(box.offset[1]) + j,
                        std::size_t(box.offset[2]) + k);
        h = static_cast<float>((1.0 - w) * double(h) + w * double(tex(i, j, k)));
      }
}

Volume3 blend(const Volume3& host, const Volume3& tex, const SoftMask3& soft, const CropBox& box) {
  Volume3 out = host;
  blend_into(out, tex, soft, box);
  return out;
}

}  // namespace tumorsynth::texture
