#include "tumorsynth/pipeline/toy_data.hpp"

#include <cmath>
#include <cstdio>

#include "tumorsynth/core/filters.hpp"
#include "tumorsynth/core/nifti.hpp"

namespace tumorsynth::pipeline {

std::pair<Volume3, Mask3> make_toy_case(const Dims& dims, const Vec3& spacing, Seed seed) {
  Geometry g;
  g.dims = dims;
  g.spacing = spacing;
  g.origin = {-0.5 * double(dims[0] - 1) * spacing[0], -0.5 * double(dims[1] - 1) * spacing[1],
              -0.5 * double(dims[2] - 1) * spacing[2]};
  g.validate();

  Rng rng(seed);
  const double ext[3] = {0.5 * double(dims[0]) * spacing[0], 0.5 * double(dims[1]) * spacing[1],
                         0.5 * double(dims[2]) * spacing[2]};
  // Liver: off-centre ellipsoid with jittered axes.
  const Vec3 liver_c{-0.12 * ext[0] + rng.uniform(-2, 2), 0.05 * ext[1] + rng.uniform(-2, 2),
                     rng.uniform(-2, 2)};
  const Vec3 liver_r{0.55 * ext[0] * rng.uniform(0.95, 1.05), 0.5 * ext[1] * rng.uniform(0.95, 1.05),
                     0.7 * ext[2] * rng.uniform(0.95, 1.05)};
  const double liver_hu = rng.uniform(95, 110);

  Field3 noise(g);
  for (auto& v : noise.values()) v = static_cast<float>(rng.normal());
  gaussian_blur_in_place(g, noise.values(), Vec3{1.5, 1.5, 1.5});

  Volume3 ct(g, -1000.0f);
  Mask3 liver(g);
  for (std::size_t k = 0; k < dims[2]; ++k)
    for (std::size_t j = 0; j < dims[1]; ++j)
      for (std::size_t i = 0; i < dims[0]; ++i) {
        const Vec3 p = g.voxel_to_world({double(i), double(j), double(k)});
        const double body = std::pow(p[0] / (0.95 * ext[0]), 2) + std::pow(p[1] / (0.9 * ext[1]), 2);
        double q = 0;
        for (int a = 0; a < 3; ++a) q += std::pow((p[a] - liver_c[a]) / liver_r[a], 2);
        const std::size_t idx = g.linear(i, j, k);
        float v = -1000.0f;
        if (body <= 1.0) v = body > 0.85 ? -100.0f : 40.0f;
        if (q <= 1.0) {
          v = static_cast<float>(liver_hu);
          liver[idx] = 1;
        }
        if (v > -1000.0f) v += static_cast<float>(6.0 * noise[idx]);
        ct[idx] = std::round(v);
      }
  return {std::move(ct), std::move(liver)};
}

void write_toy_dataset(const std::filesystem::path& dir, std::size_t n_cases, Seed seed, const Dims& dims,
                       const Vec3& spacing) {
  for (std::size_t c = 0; c < n_cases; ++c) {
    char name[32];
    std::snprintf(name, sizeof(name), "case%02zu", c + 1);
    auto [ct, liver] = make_toy_case(dims, spacing, derive_seed(seed, "toy-case", c));
    nifti::save_volume(ct, dir / name / "ct.nii.gz");
    nifti::save_mask(liver, dir / name / "liver.nii.gz");
  }
}

}  // namespace tumorsynth::pipeline
