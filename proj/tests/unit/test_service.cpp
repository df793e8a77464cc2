#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "genread/errors.hpp"
#include "genread/gaze.hpp"
#include "genread/service.hpp"

using namespace genread;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::IoFailure;
}

const std::vector<Bundle>& bundles() {
  static const auto b = fixtures::four_bundles();
  return b;
}

struct ServiceTest : ::testing::Test {
  fs::path root = fixtures::temp_dir("service");
  SessionStore store{root};
  fixtures::StepClock clock;
  ExperimentService svc{bundles(), store, clock.fn()};

  std::string to_reading() {
    const auto id = svc.create_session()["session_id"].get<std::string>();
    svc.submit(id, "consent_given", json::object());
    svc.submit(id, "pre_survey_submitted", {{"answers", fixtures::answers(10)}});
    svc.submit(id, "calibration_done", json::object());
    svc.submit(id, "group_selected", {{"group_id", 2}});
    return id;
  }

  ~ServiceTest() override { fs::remove_all(root); }
};

}  // namespace

TEST_F(ServiceTest, RequiresExactlyFourStories) {
  auto three = bundles();
  three.pop_back();
  EXPECT_EQ(code_of([&] { ExperimentService bad(three, store, clock.fn()); }), ErrorCode::ValidationFailed);
}

TEST_F(ServiceTest, FixedStoryDefaultsToLowestId) {
  std::vector<std::string> ids;
  for (const auto& b : bundles()) ids.push_back(b.bundle_id);
  EXPECT_EQ(svc.fixed_story_id(), *std::min_element(ids.begin(), ids.end()));
  ServiceOptions o;
  o.fixed_story_id = ids[2];
  ExperimentService other(bundles(), store, clock.fn(), o);
  EXPECT_EQ(other.groups()[0].slots()[0].story_id, ids[2]);
  o.fixed_story_id = "missing";
  EXPECT_EQ(code_of([&] { ExperimentService bad(bundles(), store, clock.fn(), o); }), ErrorCode::ValidationFailed);
}

TEST_F(ServiceTest, CreateSessionListsSixGroups) {
  const auto j = svc.create_session();
  EXPECT_EQ(j["session_id"].get<std::string>().rfind("s-", 0), 0u);
  EXPECT_EQ(j["groups"].size(), 6u);
  EXPECT_EQ(j["groups"][0]["slots"].size(), 4u);
  EXPECT_EQ(j["groups"][0]["slots"][0]["condition"], "C1");
  EXPECT_NE(svc.create_session()["session_id"], j["session_id"]);
  EXPECT_EQ(code_of([&] { svc.state("s-unknown"); }), ErrorCode::UnknownSession);
}

TEST_F(ServiceTest, GroupSelectionFillsSlotPlans) {
  const auto id = to_reading();
  const auto st = svc.state(id);
  ASSERT_EQ(st.slots.size(), 4u);
  const auto& g = svc.groups()[1];
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(st.slots[i].story_id, g.slots()[i].story_id);
    EXPECT_EQ(st.slots[i].condition, g.slots()[i].condition);
    const auto& b = svc.bundle(st.slots[i].story_id);
    EXPECT_EQ(st.slots[i].time_limit_s, reading_time_limit(b.story.word_count));
    EXPECT_EQ(svc.bundles()[static_cast<std::size_t>(st.slots[i].story_index - 1)].bundle_id, st.slots[i].story_id);
  }
  const auto view = svc.state_view(id);
  EXPECT_EQ(view["content"]["condition"], "C1");
  EXPECT_EQ(view["remaining_ms"], st.slots[0].time_limit_s * 1000);
}

TEST_F(ServiceTest, ServerClosesReadingAtTheDeadline) {
  const auto id = to_reading();
  const auto limit = svc.state(id).slots[0].time_limit_s * 1000LL;
  EXPECT_EQ(code_of([&] { svc.submit(id, "timer_expired", json::object()); }), ErrorCode::IllegalTransition);
  clock.advance(limit - 1);
  EXPECT_EQ(svc.state(id).phase, (Phase{PhaseKind::Reading, 1}));
  clock.advance(1);
  EXPECT_EQ(svc.state(id).phase, (Phase{PhaseKind::Distraction, 1}));
  const auto ev = svc.events(id);
  EXPECT_EQ(ev.back().type, "timer_expired");
  EXPECT_EQ(ev.back().t_ms, ev[ev.size() - 2].t_ms + limit);

  // distraction is also closed by the server, even when the client stays quiet
  clock.advance(kDistractionMillis + 5000);
  const auto st = svc.state(id);
  EXPECT_EQ(st.phase, (Phase{PhaseKind::PostTest, 1}));
  // a late client timer event is harmless once the server closed the phase
  EXPECT_EQ(svc.submit(id, "timer_expired", {{"phase", "distraction(1)"}}).phase, st.phase);
  EXPECT_EQ(code_of([&] { svc.submit(id, "timer_expired", json::object()); }), ErrorCode::IllegalTransition);
}

TEST_F(ServiceTest, CatchUpSpansSeveralDeadlines) {
  const auto id = to_reading();
  const auto limit = svc.state(id).slots[0].time_limit_s * 1000LL;
  clock.advance(limit + kDistractionMillis + 1);
  EXPECT_EQ(svc.state(id).phase, (Phase{PhaseKind::PostTest, 1}));
  EXPECT_EQ(code_of([&] { svc.distraction_problems(id); }), ErrorCode::IllegalTransition);
}

TEST_F(ServiceTest, DistractionScoredByServer) {
  const auto id = to_reading();
  clock.advance(svc.state(id).slots[0].time_limit_s * 1000LL);
  const auto problems = svc.distraction_problems(id);
  ASSERT_EQ(problems.size(), 40u);
  EXPECT_EQ(problems, svc.distraction_problems(id));
  json given = json::array({problems[0].expected, problems[1].expected + 1, nullptr, problems[3].expected});
  svc.submit(id, "distraction_submitted", {{"answers", given}});
  const auto ev = svc.events(id).back();
  EXPECT_EQ(ev.payload["score"], 2);
  EXPECT_EQ(ev.payload["n_problems"], 40);
}

TEST_F(ServiceTest, PostTestScoredAgainstTheKey) {
  const auto id = to_reading();
  clock.advance(svc.state(id).slots[0].time_limit_s * 1000LL + kDistractionMillis);
  const auto plan = svc.state(id).slots[0];
  const auto& q = svc.bundle(plan.story_id).questions;
  EXPECT_EQ(code_of([&] { svc.submit(id, "post_test_submitted", {{"answers", std::vector<int>(9, 0)}}); }),
            ErrorCode::AnswerCountMismatch);
  const auto st = svc.submit(id, "post_test_submitted", {{"answers", fixtures::post_test_answers(q, 7)}});
  EXPECT_EQ(st.phase, (Phase{PhaseKind::Reading, 2}));
  EXPECT_EQ(svc.log(id).slots[0].correct_answers, 7);
}

TEST_F(ServiceTest, ClientCannotForgeCreation) {
  const auto id = svc.create_session()["session_id"].get<std::string>();
  EXPECT_EQ(code_of([&] { svc.submit(id, "session_created", json::object()); }), ErrorCode::IllegalTransition);
  EXPECT_EQ(code_of([&] { svc.submit(id, "group_selected", {{"group_id", 1}}); }), ErrorCode::IllegalTransition);
  EXPECT_EQ(code_of([&] { svc.submit(id, "consent_given", json::object()); svc.submit(id, "pre_survey_submitted", json::object()); }),
            ErrorCode::ValidationFailed);
  // the rejected events were not recorded
  EXPECT_EQ(svc.events(id).size(), 2u);
}

TEST_F(ServiceTest, FullSessionAndRestartReplay) {
  const auto id = fixtures::drive_session(svc, clock, 4, {6, 7, 8, 9}, "text-generation", "C3");
  const auto log = svc.log(id);
  EXPECT_TRUE(log.done);
  EXPECT_EQ(log.group_number, 4);
  ASSERT_EQ(log.slots.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(log.slots[i].correct_answers, static_cast<int>(i) + 6);
    EXPECT_EQ(log.slots[i].distraction_score, 20);
  }
  EXPECT_EQ(preference_group(log), "text-generation");

  ExperimentService restarted(bundles(), store, clock.fn());
  EXPECT_EQ(restarted.log(id), log);
  EXPECT_EQ(restarted.state(id), svc.state(id));
  EXPECT_EQ(replay_events(store.read_events(id)).log, log);
}

TEST_F(ServiceTest, ReadingSecondsMatchTimeLimits) {
  const auto id = fixtures::drive_session(svc, clock, 1, {1, 2, 3, 4});
  const auto log = svc.log(id);
  const auto st = svc.state(id);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(log.slots[i].reading_seconds, st.slots[i].time_limit_s);
    EXPECT_DOUBLE_EQ(log.slots[i].question_seconds, 80.0);
  }
}

TEST_F(ServiceTest, GazeUploadIsParsedAndStored) {
  const auto id = svc.create_session()["session_id"].get<std::string>();
  EXPECT_EQ(svc.upload_gaze(id, "t_ms,x_px,y_px,valid\n0,1,2,1\n11,1,2,1\n"), 2u);
  EXPECT_TRUE(fs::exists(store.session_dir(id) / "gaze.csv"));
  EXPECT_EQ(code_of([&] { svc.upload_gaze(id, "t_ms,x_px,y_px,valid\n0,1,x,1\n"); }), ErrorCode::MalformedInput);
}
