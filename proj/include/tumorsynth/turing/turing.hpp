#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tumorsynth/core/grid.hpp"
#include "tumorsynth/core/rng.hpp"
#include "tumorsynth/render/render.hpp"

namespace tumorsynth::turing {

class EventLog;

enum class Truth { Real, Synthetic };

const char* to_string(Truth t);
std::optional<Truth> parse_verdict(std::string_view s);

// Cases under <dir>/<case>/ with image.nii[.gz] (or ct.nii[.gz]) and
// label.nii[.gz]. Labels are scanned up front for tumor-bearing axial slices;
// images are loaded on demand and kept in a small cache.
class SlicePool {
 public:
  struct Case {
    std::string name;
    std::filesystem::path image;
    std::filesystem::path label;
    std::vector<std::size_t> tumor_slices;  // z indices with label voxels
  };

  SlicePool() = default;
  explicit SlicePool(const std::filesystem::path& dir, std::size_t cache_size = 4);

  const std::vector<Case>& cases() const { return cases_; }
  std::size_t tumor_slice_count() const;
  const std::filesystem::path& root() const { return root_; }
  std::optional<std::size_t> find(std::string_view name) const;

  std::shared_ptr<const Volume3> image(std::size_t case_index) const;

 private:
  std::filesystem::path root_;
  std::vector<Case> cases_;
  std::size_t cache_size_ = 4;
  mutable std::mutex cache_mutex_;
  mutable std::vector<std::pair<std::size_t, std::shared_ptr<const Volume3>>> cache_;  // most recent last
};

struct Trial {
  Truth truth = Truth::Real;
  std::string case_name;
  std::size_t slice = 0;
};

struct TrialPlan {
  std::vector<Trial> trials;
  Seed seed = 0;
};

// round(n * ratio) real trials, the rest synthetic; each trial draws a case
// and one of its tumor-bearing slices uniformly, then the order is shuffled.
TrialPlan make_plan(const SlicePool& real, const SlicePool& synthetic, std::size_t n_trials, double real_ratio,
                    Seed seed);

struct SessionConfig {
  std::size_t n_trials = 50;
  double real_ratio = 0.5;
  std::optional<Seed> seed;  // derived from the service seed when absent
  double level_hu = render::kAbdomenLevel;
  double width_hu = render::kAbdomenWidth;

  void validate() const;
};

SessionConfig session_config_from_json(const nlohmann::json& j);

struct Answer {
  std::size_t trial = 0;
  Truth verdict = Truth::Real;
  std::int64_t time_ms = 0;  // unix epoch
};

struct TrialPayload {
  std::string session_id;
  std::size_t trial_index = 0;
  std::size_t n_trials = 0;
  std::size_t answered = 0;
  std::string image_token;
};

struct Progress {
  std::string session_id;
  std::size_t answered = 0;
  std::size_t n_trials = 0;
  bool complete = false;
};

struct Score {
  std::string session_id;
  bool complete = false;
  std::size_t total = 0;  // answered trials scored
  std::size_t correct = 0;
  double accuracy = 0.0;
  // confusion[truth][verdict], 0 = real, 1 = synthetic
  std::size_t confusion[2][2] = {{0, 0}, {0, 0}};
  std::optional<double> real_accuracy;
  std::optional<double> synthetic_accuracy;
  std::vector<std::pair<Trial, std::optional<Truth>>> trials;  // plan with verdicts
};

nlohmann::json to_json(const TrialPayload& p);
nlohmann::json to_json(const Progress& p);
nlohmann::json to_json(const Score& s);

struct ServiceOptions {
  Seed seed = 0;
  std::filesystem::path event_log;  // empty = in memory only
  std::size_t image_cache = 64;     // rendered PNGs kept
};

// Session state machine over two slice pools. Thread-safe; operations on one
// session are serialized.
class TuringService {
 public:
  TuringService(std::shared_ptr<const SlicePool> real, std::shared_ptr<const SlicePool> synthetic,
                ServiceOptions options = {});
  ~TuringService();

  std::string create_session(const SessionConfig& cfg);
  TrialPayload next_trial(const std::string& id);
  Progress submit_answer(const std::string& id, std::size_t trial_index, std::string_view verdict);
  Score score(const std::string& id, bool partial = false) const;
  Progress progress(const std::string& id) const;

  // PNG of the slice behind a token handed out by next_trial.
  std::vector<std::uint8_t> image(const std::string& token);

  std::size_t session_count() const;

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  std::string issue_token(const std::string& id, std::size_t trial);
  void replay();

  std::shared_ptr<const SlicePool> real_;
  std::shared_ptr<const SlicePool> synthetic_;
  ServiceOptions options_;
  std::uint64_t token_secret_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t created_ = 0;
  struct TokenTarget {
    std::string session;
    std::size_t trial;
  };
  std::map<std::string, TokenTarget> tokens_;
  std::vector<std::pair<std::string, std::shared_ptr<const std::vector<std::uint8_t>>>> png_cache_;
  std::unique_ptr<EventLog> log_;
};

}  // namespace tumorsynth::turing
