#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "http_driver.hpp"
#include "png_reader.hpp"
#include "tumorsynth/core/nifti.hpp"
#include "tumorsynth/turing/event_log.hpp"
#include "tumorsynth/turing/turing.hpp"

using namespace tumorsynth;
using namespace tumorsynth::turing;
namespace fs = std::filesystem;

namespace {

class Pools : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new tstest::TempDir("turing-pools");
    tstest::write_pool(*dir_ / "real", 3, 1, {40, 40, 24});
    tstest::write_pool(*dir_ / "synthetic", 2, 2, {40, 40, 24});
    real_ = std::make_shared<SlicePool>(*dir_ / "real");
    synth_ = std::make_shared<SlicePool>(*dir_ / "synthetic");
  }
  static void TearDownTestSuite() {
    real_.reset();
    synth_.reset();
    delete dir_;
  }

  static std::shared_ptr<TuringService> service(ServiceOptions o = {}) {
    return std::make_shared<TuringService>(real_, synth_, o);
  }

  static tstest::TempDir* dir_;
  static std::shared_ptr<SlicePool> real_, synth_;
};

tstest::TempDir* Pools::dir_ = nullptr;
std::shared_ptr<SlicePool> Pools::real_, Pools::synth_;

SessionConfig session(std::size_t n, double ratio = 0.5) {
  SessionConfig c;
  c.n_trials = n;
  c.real_ratio = ratio;
  return c;
}

}  // namespace

TEST(Verdict, Parse) {
  EXPECT_EQ(parse_verdict("real"), Truth::Real);
  EXPECT_EQ(parse_verdict("synthetic"), Truth::Synthetic);
  EXPECT_FALSE(parse_verdict("fake"));
  EXPECT_FALSE(parse_verdict("Real"));
  EXPECT_STREQ(to_string(Truth::Synthetic), "synthetic");
}

TEST(SessionConfigJson, KeysAndValidation) {
  const auto c = session_config_from_json({{"n_trials", 10}, {"ratio", 0.3}, {"seed", 4}});
  EXPECT_EQ(c.n_trials, 10u);
  EXPECT_DOUBLE_EQ(c.real_ratio, 0.3);
  EXPECT_EQ(c.seed, Seed(4));
  EXPECT_EQ(session_config_from_json(nlohmann::json::object()).n_trials, 50u);
  EXPECT_THROW(session_config_from_json({{"trials", 10}}), Error);
  EXPECT_THROW(session_config_from_json({{"n_trials", 0}}), Error);
  EXPECT_THROW(session_config_from_json({{"ratio", 1.5}}), Error);
  EXPECT_THROW(session_config_from_json({{"n_trials", "ten"}}), Error);
  EXPECT_THROW(session_config_from_json(nlohmann::json::array()), Error);
}

TEST_F(Pools, SlicePoolScansTumorSlices) {
  ASSERT_EQ(real_->cases().size(), 3u);
  for (const auto& c : real_->cases()) {
    const Mask3 label = nifti::load_mask(c.label);
    std::vector<std::size_t> expect;
    for (std::size_t k = 0; k < label.dims()[2]; ++k) {
      bool any = false;
      for (std::size_t j = 0; j < label.dims()[1]; ++j)
        for (std::size_t i = 0; i < label.dims()[0]; ++i) any |= label(i, j, k) != 0;
      if (any) expect.push_back(k);
    }
    EXPECT_EQ(c.tumor_slices, expect) << c.name;
    EXPECT_FALSE(expect.empty());
  }
  ASSERT_TRUE(real_->find("case01"));
  EXPECT_FALSE(real_->find("nope"));
  const auto img = real_->image(*real_->find("case01"));
  EXPECT_EQ(*img, nifti::load_volume(real_->cases()[1].image));
  EXPECT_EQ(real_->image(1).get(), img.get());
  EXPECT_THROW(real_->image(99), Error);
}

TEST_F(Pools, SlicePoolSkipsIncompleteCases) {
  tstest::TempDir dir;
  fs::create_directories(dir / "empty");
  nifti::save_mask(Mask3(tstest::make_geometry({4, 4, 4}), 0), dir / "label_only" / "label.nii.gz");
  EXPECT_TRUE(SlicePool(dir.path()).cases().empty());
  EXPECT_THROW(SlicePool(dir / "missing"), Error);
}

TEST_F(Pools, PlanCountsAndSlices) {
  for (std::size_t n : {1u, 7u, 50u}) {
    for (double ratio : {0.0, 0.3, 0.5, 1.0}) {
      const auto plan = make_plan(*real_, *synth_, n, ratio, 11);
      ASSERT_EQ(plan.trials.size(), n);
      std::size_t n_real = 0;
      for (const auto& t : plan.trials) {
        const SlicePool& pool = t.truth == Truth::Real ? *real_ : *synth_;
        const auto idx = pool.find(t.case_name);
        ASSERT_TRUE(idx);
        const auto& slices = pool.cases()[*idx].tumor_slices;
        EXPECT_NE(std::find(slices.begin(), slices.end(), t.slice), slices.end());
        n_real += t.truth == Truth::Real;
      }
      EXPECT_EQ(n_real, std::size_t(std::llround(double(n) * ratio)));
    }
  }
}

TEST_F(Pools, PlanIsSeededAndShuffled) {
  const auto a = make_plan(*real_, *synth_, 40, 0.5, 3);
  const auto b = make_plan(*real_, *synth_, 40, 0.5, 3);
  const auto c = make_plan(*real_, *synth_, 40, 0.5, 4);
  auto key = [](const TrialPlan& p) {
    std::vector<std::tuple<int, std::string, std::size_t>> k;
    for (const auto& t : p.trials) k.emplace_back(int(t.truth), t.case_name, t.slice);
    return k;
  };
  EXPECT_EQ(key(a), key(b));
  EXPECT_NE(key(a), key(c));
  // Not all real trials first.
  bool interleaved = false;
  for (std::size_t i = 0; i < 20; ++i) interleaved |= a.trials[i].truth == Truth::Synthetic;
  EXPECT_TRUE(interleaved);
}

TEST_F(Pools, PlanErrors) {
  const SlicePool empty;
  EXPECT_THROW(make_plan(empty, *synth_, 10, 0.5, 1), Error);
  EXPECT_THROW(make_plan(*real_, *synth_, 0, 0.5, 1), Error);
  EXPECT_THROW(make_plan(*real_, *synth_, 10, -0.1, 1), Error);
  EXPECT_NO_THROW(make_plan(empty, *synth_, 10, 0.0, 1));
}

TEST_F(Pools, SessionFlowAndScoring) {
  auto svc = service();
  const std::string id = svc->create_session(session(10));
  const Score hidden = svc->score(id, true);
  std::size_t expect_correct = 0;
  for (std::size_t t = 0; t < 10; ++t) {
    const TrialPayload p = svc->next_trial(id);
    EXPECT_EQ(p.trial_index, t);
    EXPECT_EQ(p.answered, t);
    EXPECT_EQ(p.image_token.size(), 32u);
    const Truth truth = hidden.trials[t].first.truth;
    const bool right = t % 3 != 0;
    const Truth verdict = right ? truth : (truth == Truth::Real ? Truth::Synthetic : Truth::Real);
    expect_correct += right;
    if (t < 9) EXPECT_THROW(svc->score(id), Error);
    const Progress pr = svc->submit_answer(id, t, to_string(verdict));
    EXPECT_EQ(pr.answered, t + 1);
  }
  EXPECT_TRUE(svc->progress(id).complete);
  const Score s = svc->score(id);
  EXPECT_TRUE(s.complete);
  EXPECT_EQ(s.total, 10u);
  EXPECT_EQ(s.correct, expect_correct);
  EXPECT_DOUBLE_EQ(s.accuracy, double(expect_correct) / 10);
  EXPECT_EQ(s.confusion[0][0] + s.confusion[0][1] + s.confusion[1][0] + s.confusion[1][1], 10u);
  EXPECT_EQ(s.confusion[0][0] + s.confusion[1][1], expect_correct);
  try {
    svc->next_trial(id);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::State);
  }
  EXPECT_THROW(svc->submit_answer(id, 10, "real"), Error);
}

TEST_F(Pools, AnswerErrors) {
  auto svc = service();
  const std::string id = svc->create_session(session(5));
  svc->next_trial(id);
  auto code_of = [&](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Internal;
  };
  EXPECT_EQ(code_of([&] { svc->submit_answer(id, 0, "maybe"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { svc->submit_answer(id, 2, "real"); }), ErrorCode::State);
  svc->submit_answer(id, 0, "real");
  EXPECT_EQ(code_of([&] { svc->submit_answer(id, 0, "real"); }), ErrorCode::State);
  EXPECT_EQ(code_of([&] { svc->submit_answer("nope", 0, "real"); }), ErrorCode::NotFound);
  EXPECT_EQ(code_of([&] { svc->next_trial("nope"); }), ErrorCode::NotFound);
  EXPECT_EQ(svc->progress(id).answered, 1u);
}

TEST_F(Pools, ImagesAreWindowedSlices) {
  auto svc = service();
  SessionConfig cfg = session(4);
  const std::string id = svc->create_session(cfg);
  const Score hidden = svc->score(id, true);
  const TrialPayload p = svc->next_trial(id);
  const auto png = tstest::decode_png(svc->image(p.image_token));
  const Trial& trial = hidden.trials[0].first;
  const SlicePool& pool = trial.truth == Truth::Real ? *real_ : *synth_;
  const auto vol = pool.image(*pool.find(trial.case_name));
  const auto expect = render::render_slice(*vol, render::Axis::Z, trial.slice, cfg.level_hu, cfg.width_hu);
  EXPECT_EQ(png.width, expect.width);
  EXPECT_EQ(png.height, expect.height);
  EXPECT_EQ(png.pixels, expect.pixels);
  EXPECT_EQ(svc->image(p.image_token), svc->image(p.image_token));
  EXPECT_THROW(svc->image("0123"), Error);
}

TEST_F(Pools, SessionsAreIndependentAndSeeded) {
  auto a = service({7, {}, 8});
  auto b = service({7, {}, 8});
  const std::string ia = a->create_session(session(12));
  const std::string ib = b->create_session(session(12));
  EXPECT_EQ(ia, ib);
  const Score sa = a->score(ia, true), sb = b->score(ib, true);
  for (std::size_t t = 0; t < 12; ++t) {
    EXPECT_EQ(sa.trials[t].first.case_name, sb.trials[t].first.case_name);
    EXPECT_EQ(sa.trials[t].first.slice, sb.trials[t].first.slice);
  }
  const std::string ia2 = a->create_session(session(12));
  EXPECT_NE(ia, ia2);
  EXPECT_EQ(a->session_count(), 2u);
}

TEST_F(Pools, JsonShapesHideTruthUntilScored) {
  auto svc = service();
  const std::string id = svc->create_session(session(3));
  const auto tp = to_json(svc->next_trial(id));
  EXPECT_EQ(tp["image_url"].get<std::string>().rfind("/images/", 0), 0u);
  EXPECT_FALSE(tstest::leaks_truth(tp));
  EXPECT_FALSE(tstest::leaks_truth(to_json(svc->progress(id))));
  for (std::size_t t = 0; t < 3; ++t) {
    if (t) svc->next_trial(id);
    svc->submit_answer(id, t, "real");
  }
  const auto sj = to_json(svc->score(id));
  EXPECT_EQ(sj["state"], "complete");
  EXPECT_EQ(sj["trials"].size(), 3u);
  EXPECT_TRUE(sj["confusion"].contains("real_as_real"));
}

TEST_F(Pools, EventLogReplay) {
  tstest::TempDir dir;
  const fs::path log = dir / "events.jsonl";
  std::string done, active;
  std::size_t done_correct = 0;
  {
    auto svc = service({3, log, 8});
    done = svc->create_session(session(4));
    for (std::size_t t = 0; t < 4; ++t) {
      svc->next_trial(done);
      svc->submit_answer(done, t, t % 2 ? "real" : "synthetic");
    }
    done_correct = svc->score(done).correct;
    active = svc->create_session(session(6));
    svc->next_trial(active);
    svc->submit_answer(active, 0, "real");
  }
  {
    std::ofstream torn(log, std::ios::app);
    torn << "{\"type\":\"answer\",\"sess";
  }
  auto svc = service({3, log, 8});
  EXPECT_EQ(svc->session_count(), 2u);
  EXPECT_EQ(svc->score(done).correct, done_correct);
  EXPECT_EQ(svc->progress(active).answered, 1u);
  EXPECT_EQ(svc->next_trial(active).trial_index, 1u);
  svc->submit_answer(active, 1, "synthetic");
  const std::string fresh = svc->create_session(session(2));
  EXPECT_NE(fresh, done);
  EXPECT_NE(fresh, active);

  auto again = service({3, log, 8});
  EXPECT_EQ(again->session_count(), 3u);
  EXPECT_EQ(again->progress(active).answered, 2u);
}

TEST(EventLogFile, AppendsAndSkipsCorruptLines) {
  tstest::TempDir dir;
  const fs::path p = dir / "log.jsonl";
  {
    EventLog log(p);
    log.append({{"a", 1}});
  }
  {
    std::ofstream f(p, std::ios::app);
    f << "{broken";
  }
  EventLog log(p);
  log.append({{"b", 2}});
  const auto events = log.read_all();
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[1]["b"], 2);
  EXPECT_EQ(log.skipped(), 1u);
}
