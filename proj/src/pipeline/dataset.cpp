#include "tumorsynth/pipeline/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <thread>

namespace tumorsynth::pipeline {
namespace {

fs::path find_volume(const fs::path& dir, const std::string& base) {
  for (const char* ext : {".nii.gz", ".nii"}) {
    const fs::path p = dir / (base + ext);
    if (fs::is_regular_file(p)) return p;
  }
  return {};
}

StreamItem compute_item(const CaseInput& input, const SynthConfig& cfg) {
  StreamItem item;
  item.input = input;
  item.seed = case_seed(cfg.master_seed, input.name);
  try {
    item.result = run_case(input, cfg);
  } catch (const std::exception& e) {
    item.error = e.what();
  }
  return item;
}

}  // namespace

std::vector<CaseInput> discover_cases(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorCode::Io, "input directory not found: " + dir.string());
  std::vector<CaseInput> cases;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name.empty() || name.front() == '.') continue;
    cases.push_back({name, find_volume(entry.path(), "ct"), find_volume(entry.path(), "liver")});
  }
  std::sort(cases.begin(), cases.end(), [](const CaseInput& a, const CaseInput& b) { return a.name < b.name; });
  return cases;
}

Seed case_seed(Seed master_seed, std::string_view case_name) {
  return derive_seed(master_seed, fnv1a64(case_name));
}

CaseResult run_case(const CaseInput& input, const SynthConfig& cfg) {
  if (input.ct.empty()) fail(ErrorCode::NotFound, "case " + input.name + ": missing ct.nii[.gz]");
  if (input.liver.empty()) fail(ErrorCode::NotFound, "case " + input.name + ": missing liver.nii[.gz]");
  const Volume3 ct = nifti::load_volume(input.ct);
  const Mask3 liver = nifti::load_mask(input.liver);
  return synthesize_case(ct, liver, cfg, case_seed(cfg.master_seed, input.name));
}

nlohmann::json manifest_record(const CaseInput& input, const SynthConfig& cfg, const CaseResult& result,
                               const std::string& image_rel, const std::string& label_rel) {
  nlohmann::json j;
  j["case"] = input.name;
  j["status"] = "ok";
  j["input"] = {{"ct", input.ct.string()}, {"liver", input.liver.string()}};
  j["outputs"] = {{"image", image_rel}, {"label", label_rel}};
  j["master_seed"] = cfg.master_seed;
  j["case_seed"] = result.seed;
  j["config_hash"] = config_hash(cfg);
  j["toolkit_version"] = toolkit_version();
  j["geometry"] = {{"dims", result.image.dims()}, {"spacing", result.image.spacing()}};
  j["planned_tumors"] = result.planned;
  nlohmann::json tumors = nlohmann::json::array();
  for (const auto& s : result.specs) tumors.push_back(to_json(s));
  j["tumors"] = tumors;
  j["warnings"] = result.warnings;
  j["config"] = to_json(cfg);
  return j;
}

DatasetSummary generate_dataset(const fs::path& inputs, const fs::path& out, const SynthConfig& cfg,
                                unsigned jobs) {
  cfg.validate();
  const auto cases = discover_cases(inputs);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory " + out.string());

  std::vector<nlohmann::json> records(cases.size());
  std::vector<std::size_t> tumors(cases.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      const CaseInput& input = cases[i];
      const std::string image_rel = input.name + "/image.nii.gz";
      const std::string label_rel = input.name + "/label.nii.gz";
      try {
        CaseResult r = run_case(input, cfg);
        nifti::save_volume(r.image, out / image_rel, cfg.image_encoding);
        nifti::save_mask(r.label, out / label_rel);
        tumors[i] = r.specs.size();
        records[i] = manifest_record(input, cfg, r, image_rel, label_rel);
      } catch (const std::exception& e) {
        records[i] = {{"case", input.name},
                      {"status", "error"},
                      {"error", e.what()},
                      {"input", {{"ct", input.ct.string()}, {"liver", input.liver.string()}}},
                      {"master_seed", cfg.master_seed},
                      {"case_seed", case_seed(cfg.master_seed, input.name)},
                      {"config_hash", config_hash(cfg)},
                      {"toolkit_version", toolkit_version()}};
      }
    }
  };
  const unsigned width = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cases.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < width; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  DatasetSummary summary;
  summary.total = cases.size();
  summary.manifest = out / "manifest.jsonl";
  std::ofstream manifest(summary.manifest, std::ios::trunc);
  if (!manifest) fail(ErrorCode::Io, "cannot write " + summary.manifest.string());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    manifest << records[i].dump() << '\n';
    if (records[i]["status"] == "ok") {
      ++summary.succeeded;
      summary.tumors += tumors[i];
    } else {
      ++summary.failed;
      std::cerr << "case " << cases[i].name << " failed: " << records[i]["error"].get<std::string>() << '\n';
    }
  }
  if (!manifest) fail(ErrorCode::Io, "write failed: " + summary.manifest.string());
  return summary;
}

CaseStream::CaseStream(std::vector<CaseInput> inputs, SynthConfig cfg, unsigned prefetch)
    : inputs_(std::move(inputs)), cfg_(std::move(cfg)), prefetch_(std::max(1u, prefetch)) {
  cfg_.validate();
}

CaseStream::CaseStream(const fs::path& inputs, SynthConfig cfg, unsigned prefetch)
    : CaseStream(discover_cases(inputs), std::move(cfg), prefetch) {}

CaseStream::~CaseStream() {
  for (auto& f : pending_) {
    if (f.valid()) f.wait();
  }
}

void CaseStream::refill() {
  while (pending_.size() < prefetch_ && issued_ < inputs_.size()) {
    const CaseInput& input = inputs_[issued_++];
    if (prefetch_ == 1) {
      std::promise<StreamItem> ready;
      ready.set_value(compute_item(input, cfg_));
      pending_.push_back(ready.get_future());
    } else {
      pending_.push_back(std::async(std::launch::async, compute_item, input, std::cref(cfg_)));
    }
  }
}

std::optional<StreamItem> CaseStream::next() {
  refill();
  if (pending_.empty()) return std::nullopt;
  StreamItem item = pending_.front().get();
  pending_.pop_front();
  if (prefetch_ > 1) refill();
  return item;
}

}  // namespace tumorsynth::pipeline
