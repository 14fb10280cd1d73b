#include "tumorsynth/turing/turing.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <tuple>

#include "tumorsynth/core/nifti.hpp"
#include "tumorsynth/render/png.hpp"
#include "tumorsynth/turing/event_log.hpp"

namespace tumorsynth::turing {
namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Truth t) { return t == Truth::Real ? "real" : "synthetic"; }

std::optional<Truth> parse_verdict(std::string_view s) {
  if (s == "real") return Truth::Real;
  if (s == "synthetic") return Truth::Synthetic;
  return std::nullopt;
}

namespace {

fs::path find_file(const fs::path& dir, std::initializer_list<const char*> bases) {
  for (const char* base : bases) {
    for (const char* ext : {".nii.gz", ".nii"}) {
      fs::path p = dir / (std::string(base) + ext);
      if (fs::is_regular_file(p)) return p;
    }
  }
  return {};
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

SlicePool::SlicePool(const fs::path& dir, std::size_t cache_size)
    : root_(dir), cache_size_(std::max<std::size_t>(1, cache_size)) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorCode::NotFound, "pool directory not found: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    Case c;
    c.name = entry.path().filename().string();
    c.image = find_file(entry.path(), {"image", "ct"});
    c.label = find_file(entry.path(), {"label"});
    if (c.image.empty() || c.label.empty()) continue;
    const Mask3 label = nifti::load_mask(c.label);
    const auto header = nifti::read_header(c.image);
    if (header.geometry.dims != label.dims()) {
      fail(ErrorCode::Geometry, "pool case " + c.name + ": image and label dims differ");
    }
    const Dims& d = label.dims();
    const std::size_t plane = d[0] * d[1];
    for (std::size_t z = 0; z < d[2]; ++z) {
      const auto first = label.values().begin() + static_cast<std::ptrdiff_t>(z * plane);
      if (std::any_of(first, first + static_cast<std::ptrdiff_t>(plane), [](std::uint8_t v) { return v != 0; })) {
        c.tumor_slices.push_back(z);
      }
    }
    cases_.push_back(std::move(c));
  }
  std::sort(cases_.begin(), cases_.end(), [](const Case& a, const Case& b) { return a.name < b.name; });
}

std::size_t SlicePool::tumor_slice_count() const {
  std::size_t n = 0;
  for (const auto& c : cases_) n += c.tumor_slices.size();
  return n;
}

std::optional<std::size_t> SlicePool::find(std::string_view name) const {
  for (std::size_t i = 0; i < cases_.size(); ++i) {
    if (cases_[i].name == name) return i;
  }
  return std::nullopt;
}

std::shared_ptr<const Volume3> SlicePool::image(std::size_t case_index) const {
  if (case_index >= cases_.size()) fail(ErrorCode::NotFound, "pool case index out of range");
  {
    std::lock_guard lock(cache_mutex_);
    for (auto it = cache_.begin(); it != cache_.end(); ++it) {
      if (it->first == case_index) {
        auto hit = *it;
        cache_.erase(it);
        cache_.push_back(hit);
        return hit.second;
      }
    }
  }
  auto vol = std::make_shared<const Volume3>(nifti::load_volume(cases_[case_index].image));
  std::lock_guard lock(cache_mutex_);
  cache_.emplace_back(case_index, vol);
  if (cache_.size() > cache_size_) cache_.erase(cache_.begin());
  return vol;
}

TrialPlan make_plan(const SlicePool& real, const SlicePool& synthetic, std::size_t n_trials, double real_ratio,
                    Seed seed) {
  if (n_trials < 1) fail(ErrorCode::InvalidArgument, "n_trials must be >= 1");
  if (!(real_ratio >= 0.0 && real_ratio <= 1.0)) fail(ErrorCode::InvalidArgument, "ratio must be in [0, 1]");
  const auto n_real = static_cast<std::size_t>(std::llround(static_cast<double>(n_trials) * real_ratio));
  // Only pools that the plan draws from need tumor-bearing slices.
  for (auto [pool, name, needed] : {std::tuple{&real, "real", n_real > 0},
                                    std::tuple{&synthetic, "synthetic", n_real < n_trials}}) {
    if (!needed) continue;
    if (pool->cases().empty()) fail(ErrorCode::InvalidArgument, std::string("empty ") + name + " pool");
    if (pool->tumor_slice_count() == 0) {
      fail(ErrorCode::InvalidArgument, std::string("no tumor-bearing slices in ") + name + " pool");
    }
  }
  TrialPlan plan;
  plan.seed = seed;
  Rng rng(seed);
  for (std::size_t i = 0; i < n_trials; ++i) {
    const Truth truth = i < n_real ? Truth::Real : Truth::Synthetic;
    const SlicePool& pool = truth == Truth::Real ? real : synthetic;
    std::vector<std::size_t> usable;
    for (std::size_t c = 0; c < pool.cases().size(); ++c) {
      if (!pool.cases()[c].tumor_slices.empty()) usable.push_back(c);
    }
    const auto& c = pool.cases()[usable[rng.below(usable.size())]];
    plan.trials.push_back({truth, c.name, c.tumor_slices[rng.below(c.tumor_slices.size())]});
  }
  for (std::size_t i = plan.trials.size() - 1; i > 0; --i) {
    std::swap(plan.trials[i], plan.trials[rng.below(i + 1)]);
  }
  return plan;
}

void SessionConfig::validate() const {
  if (n_trials < 1 || n_trials > 10000) fail(ErrorCode::InvalidArgument, "n_trials must be in [1, 10000]");
  if (!(real_ratio >= 0.0 && real_ratio <= 1.0)) fail(ErrorCode::InvalidArgument, "ratio must be in [0, 1]");
  if (!(width_hu > 0.0) || !std::isfinite(level_hu)) fail(ErrorCode::InvalidArgument, "invalid window");
}

SessionConfig session_config_from_json(const json& j) {
  SessionConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "session config must be a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      if (k == "n_trials") {
        c.n_trials = it->get<std::size_t>();
      } else if (k == "ratio" || k == "real_ratio") {
        c.real_ratio = it->get<double>();
      } else if (k == "seed") {
        c.seed = it->get<Seed>();
      } else if (k == "level_hu") {
        c.level_hu = it->get<double>();
      } else if (k == "width_hu") {
        c.width_hu = it->get<double>();
      } else {
        fail(ErrorCode::InvalidArgument, "unknown session option '" + k + "'");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("bad session option: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const TrialPayload& p) {
  return {{"session_id", p.session_id},
          {"trial_index", p.trial_index},
          {"n_trials", p.n_trials},
          {"answered", p.answered},
          {"image_url", "/images/" + p.image_token},
          {"state", "active"}};
}

json to_json(const Progress& p) {
  return {{"session_id", p.session_id},
          {"answered", p.answered},
          {"n_trials", p.n_trials},
          {"state", p.complete ? "complete" : "active"}};
}

json to_json(const Score& s) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json trials = json::array();
  for (std::size_t i = 0; i < s.trials.size(); ++i) {
    const auto& [t, verdict] = s.trials[i];
    trials.push_back({{"trial_index", i},
                      {"case", t.case_name},
                      {"slice", t.slice},
                      {"truth", to_string(t.truth)},
                      {"verdict", verdict ? json(to_string(*verdict)) : json(nullptr)}});
  }
  return {{"session_id", s.session_id},
          {"state", s.complete ? "complete" : "active"},
          {"total", s.total},
          {"correct", s.correct},
          {"accuracy", s.accuracy},
          {"confusion",
           {{"real_as_real", s.confusion[0][0]},
            {"real_as_synthetic", s.confusion[0][1]},
            {"synthetic_as_real", s.confusion[1][0]},
            {"synthetic_as_synthetic", s.confusion[1][1]}}},
          {"real_accuracy", opt(s.real_accuracy)},
          {"synthetic_accuracy", opt(s.synthetic_accuracy)},
          {"trials", trials}};
}

struct TuringService::Session {
  std::string id;
  SessionConfig config;
  TrialPlan plan;
  std::vector<Answer> answers;
  std::int64_t created_ms = 0;
  mutable std::mutex mutex;

  bool complete() const { return answers.size() == plan.trials.size(); }
};

namespace {

json plan_event(const std::string& id, const SessionConfig& c, const TrialPlan& plan, std::int64_t t) {
  json trials = json::array();
  for (const auto& tr : plan.trials) {
    trials.push_back({{"truth", to_string(tr.truth)}, {"case", tr.case_name}, {"slice", tr.slice}});
  }
  return {{"type", "create"},
          {"id", id},
          {"time_ms", t},
          {"config",
           {{"n_trials", c.n_trials},
            {"real_ratio", c.real_ratio},
            {"seed", plan.seed},
            {"level_hu", c.level_hu},
            {"width_hu", c.width_hu}}},
          {"plan", trials}};
}

}  // namespace

TuringService::TuringService(std::shared_ptr<const SlicePool> real, std::shared_ptr<const SlicePool> synthetic,
                             ServiceOptions options)
    : real_(std::move(real)), synthetic_(std::move(synthetic)), options_(std::move(options)) {
  if (!real_ || !synthetic_) fail(ErrorCode::InvalidArgument, "turing service needs two pools");
  std::random_device rd;
  token_secret_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  if (!options_.event_log.empty()) {
    log_ = std::make_unique<EventLog>(options_.event_log);
    replay();
  }
}

TuringService::~TuringService() = default;

void TuringService::replay() {
  for (const auto& ev : log_->read_all()) {
    try {
      const std::string type = ev.at("type");
      const std::string id = ev.at("id");
      if (type == "create") {
        auto s = std::make_shared<Session>();
        s->id = id;
        const auto& c = ev.at("config");
        s->config.n_trials = c.at("n_trials");
        s->config.real_ratio = c.at("real_ratio");
        s->config.seed = c.at("seed").get<Seed>();
        s->config.level_hu = c.at("level_hu");
        s->config.width_hu = c.at("width_hu");
        s->plan.seed = *s->config.seed;
        for (const auto& t : ev.at("plan")) {
          const auto truth = parse_verdict(t.at("truth").get<std::string>());
          if (!truth) fail(ErrorCode::Io, "event log: bad truth");
          s->plan.trials.push_back({*truth, t.at("case"), t.at("slice")});
        }
        s->created_ms = ev.value("time_ms", std::int64_t{0});
        sessions_[id] = s;
        ++created_;
      } else if (type == "answer") {
        auto it = sessions_.find(id);
        if (it == sessions_.end()) continue;
        Session& s = *it->second;
        const std::size_t trial = ev.at("trial_index");
        const auto verdict = parse_verdict(ev.at("verdict").get<std::string>());
        if (!verdict || trial != s.answers.size() || s.complete()) continue;
        s.answers.push_back({trial, *verdict, ev.value("time_ms", std::int64_t{0})});
      }
    } catch (const json::exception&) {
      continue;  // malformed event
    }
  }
}

std::shared_ptr<TuringService::Session> TuringService::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::NotFound, "unknown session '" + id + "'");
  return it->second;
}

std::string TuringService::create_session(const SessionConfig& cfg) {
  cfg.validate();
  std::size_t index;
  std::string id;
  {
    std::lock_guard lock(mutex_);
    do {
      index = created_++;
      id = "s" + hex16(derive_seed(options_.seed, "session", index));
    } while (sessions_.count(id));
  }
  auto s = std::make_shared<Session>();
  s->id = id;
  s->config = cfg;
  const Seed seed = cfg.seed.value_or(derive_seed(options_.seed, "plan", index));
  s->config.seed = seed;
  s->plan = make_plan(*real_, *synthetic_, cfg.n_trials, cfg.real_ratio, seed);
  s->created_ms = now_ms();
  if (log_) log_->append(plan_event(id, s->config, s->plan, s->created_ms));
  std::lock_guard lock(mutex_);
  sessions_[id] = s;
  return id;
}

std::string TuringService::issue_token(const std::string& id, std::size_t trial) {
  const std::string token = hex16(derive_seed(derive_seed(token_secret_, fnv1a64(id)), trial)) +
                            hex16(derive_seed(derive_seed(token_secret_ ^ 0x5bd1e995u, fnv1a64(id)), trial));
  std::lock_guard lock(mutex_);
  tokens_.emplace(token, TokenTarget{id, trial});
  return token;
}

TrialPayload TuringService::next_trial(const std::string& id) {
  auto s = find(id);
  std::size_t trial, total;
  {
    std::lock_guard lock(s->mutex);
    if (s->complete()) fail(ErrorCode::State, "no trials remaining");
    trial = s->answers.size();
    total = s->plan.trials.size();
  }
  return {id, trial, total, trial, issue_token(id, trial)};
}

Progress TuringService::submit_answer(const std::string& id, std::size_t trial_index, std::string_view verdict) {
  const auto v = parse_verdict(verdict);
  if (!v) {
    fail(ErrorCode::InvalidArgument, "invalid verdict '" + std::string(verdict) + "': expected real or synthetic");
  }
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  const std::size_t expected = s->answers.size();
  if (s->complete()) fail(ErrorCode::State, "session is complete");
  if (trial_index < expected) {
    fail(ErrorCode::State, "trial " + std::to_string(trial_index) + " already answered");
  }
  if (trial_index > expected) {
    fail(ErrorCode::State, "out-of-order answer: expected trial " + std::to_string(expected));
  }
  const Answer a{trial_index, *v, now_ms()};
  if (log_) {
    log_->append({{"type", "answer"},
                  {"id", id},
                  {"trial_index", trial_index},
                  {"verdict", to_string(*v)},
                  {"time_ms", a.time_ms}});
  }
  s->answers.push_back(a);
  return {id, s->answers.size(), s->plan.trials.size(), s->complete()};
}

Progress TuringService::progress(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return {id, s->answers.size(), s->plan.trials.size(), s->complete()};
}

Score TuringService::score(const std::string& id, bool partial) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (!s->complete() && !partial) {
    fail(ErrorCode::State, "session is still active (" + std::to_string(s->answers.size()) + "/" +
                               std::to_string(s->plan.trials.size()) + " answered)");
  }
  Score r;
  r.session_id = id;
  r.complete = s->complete();
  for (std::size_t i = 0; i < s->plan.trials.size(); ++i) {
    const Trial& t = s->plan.trials[i];
    std::optional<Truth> verdict;
    if (i < s->answers.size()) {
      verdict = s->answers[i].verdict;
      ++r.confusion[static_cast<int>(t.truth)][static_cast<int>(*verdict)];
      ++r.total;
      if (*verdict == t.truth) ++r.correct;
    }
    r.trials.emplace_back(t, verdict);
  }
  r.accuracy = r.total == 0 ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(r.total);
  const std::size_t real = r.confusion[0][0] + r.confusion[0][1];
  const std::size_t synth = r.confusion[1][0] + r.confusion[1][1];
  if (real) r.real_accuracy = static_cast<double>(r.confusion[0][0]) / static_cast<double>(real);
  if (synth) r.synthetic_accuracy = static_cast<double>(r.confusion[1][1]) / static_cast<double>(synth);
  return r;
}

std::vector<std::uint8_t> TuringService::image(const std::string& token) {
  TokenTarget target;
  {
    std::lock_guard lock(mutex_);
    auto it = tokens_.find(token);
    if (it == tokens_.end()) fail(ErrorCode::NotFound, "unknown image token");
    target = it->second;
    for (const auto& [key, png] : png_cache_) {
      if (key == token) return *png;
    }
  }
  auto s = find(target.session);
  Trial trial;
  double level, width;
  {
    std::lock_guard lock(s->mutex);
    trial = s->plan.trials.at(target.trial);
    level = s->config.level_hu;
    width = s->config.width_hu;
  }
  const SlicePool& pool = trial.truth == Truth::Real ? *real_ : *synthetic_;
  const auto idx = pool.find(trial.case_name);
  if (!idx) fail(ErrorCode::NotFound, "pool case missing for trial");
  const auto vol = pool.image(*idx);
  const auto r = render::render_slice(*vol, render::Axis::Z, trial.slice, level, width);
  auto png = std::make_shared<const std::vector<std::uint8_t>>(render::encode_png(r.pixels, r.width, r.height));
  std::lock_guard lock(mutex_);
  png_cache_.emplace_back(token, png);
  if (png_cache_.size() > options_.image_cache) png_cache_.erase(png_cache_.begin());
  return *png;
}

std::size_t TuringService::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

}  // namespace tumorsynth::turing
