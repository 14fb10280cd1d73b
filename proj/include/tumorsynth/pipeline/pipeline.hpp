#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tumorsynth/pipeline/config.hpp"

namespace tumorsynth::pipeline {

struct CaseResult {
  Volume3 image;
  Mask3 label;
  std::vector<placement::TumorSpec> specs;  // successfully planted, in plant order
  Seed seed = 0;
  double elapsed_ms = 0.0;
  unsigned planned = 0;  // primary tumors planned from the count distribution
  std::vector<std::string> warnings;
  // Voxels that synthesis may have changed: soft-mask supports plus the index
  // boxes of every effect region. Everything else equals the input exactly.
  Mask3 influence;
};

// plan -> shapes -> locations (+ satellites) -> mass effect -> texture blend
// -> cirrhosis. Placement failures drop the tumor with a warning; an empty or
// mis-registered liver mask throws.
CaseResult synthesize_case(const Volume3& ct, const Mask3& liver, const SynthConfig& cfg, Seed case_seed);

nlohmann::json to_json(const placement::TumorSpec& spec);

}  // namespace tumorsynth::pipeline
