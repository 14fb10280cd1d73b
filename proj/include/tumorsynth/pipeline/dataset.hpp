#pragma once

#include <deque>
#include <filesystem>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tumorsynth/pipeline/pipeline.hpp"

namespace tumorsynth::pipeline {

namespace fs = std::filesystem;

// One case directory: <inputs>/<name>/ct.nii[.gz] + liver.nii[.gz].
struct CaseInput {
  std::string name;
  fs::path ct;     // empty when missing
  fs::path liver;  // empty when missing
};

// Subdirectories of `dir` sorted by name. Directories lacking one of the two
// files are still listed; loading them fails per case.
std::vector<CaseInput> discover_cases(const fs::path& dir);

// Stable in the case name, so reordering or moving the input tree keeps seeds.
Seed case_seed(Seed master_seed, std::string_view case_name);

// Loads and synthesizes one case.
CaseResult run_case(const CaseInput& input, const SynthConfig& cfg);

struct DatasetSummary {
  std::size_t total = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::size_t tumors = 0;
  fs::path manifest;
};

// Writes <out>/<name>/image.nii.gz, <out>/<name>/label.nii.gz and
// <out>/manifest.jsonl (one JSON record per case, sorted by case name).
// Per-case failures are recorded in the manifest; the output is identical for
// any `jobs`.
DatasetSummary generate_dataset(const fs::path& inputs, const fs::path& out, const SynthConfig& cfg,
                                unsigned jobs = 1);

nlohmann::json manifest_record(const CaseInput& input, const SynthConfig& cfg, const CaseResult& result,
                               const std::string& image_rel, const std::string& label_rel);

struct StreamItem {
  CaseInput input;
  Seed seed = 0;
  std::optional<CaseResult> result;  // empty on error
  std::string error;
};

// Lazy per-case generation with up to `prefetch` cases computed ahead on
// worker threads. Items come out in discovery order regardless of width.
class CaseStream {
 public:
  CaseStream(std::vector<CaseInput> inputs, SynthConfig cfg, unsigned prefetch = 1);
  CaseStream(const fs::path& inputs, SynthConfig cfg, unsigned prefetch = 1);
  ~CaseStream();

  CaseStream(const CaseStream&) = delete;
  CaseStream& operator=(const CaseStream&) = delete;

  std::optional<StreamItem> next();

 private:
  void refill();

  std::vector<CaseInput> inputs_;
  SynthConfig cfg_;
  unsigned prefetch_;
  std::size_t issued_ = 0;
  std::deque<std::future<StreamItem>> pending_;
};

}  // namespace tumorsynth::pipeline
