#pragma once

#include <filesystem>
#include <utility>

#include "tumorsynth/core/grid.hpp"
#include "tumorsynth/core/rng.hpp"

namespace tumorsynth::pipeline {

// Small synthetic abdomen: air background, a soft-tissue body ellipse with a
// fat rim, and an ellipsoidal "liver" (~100 HU, mildly noisy). Used by the
// tests and demos; not a realistic anatomy model.
std::pair<Volume3, Mask3> make_toy_case(const Dims& dims, const Vec3& spacing, Seed seed);

// Writes <dir>/caseNN/{ct,liver}.nii.gz for n cases.
void write_toy_dataset(const std::filesystem::path& dir, std::size_t n_cases, Seed seed,
                       const Dims& dims = {96, 96, 64}, const Vec3& spacing = {1.5, 1.5, 1.5});

}  // namespace tumorsynth::pipeline
