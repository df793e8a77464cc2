#pragma once

#include <filesystem>
#include <memory>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "fixation_oracle.hpp"
#include "genread/bundle.hpp"
#include "genread/mock_providers.hpp"
#include "genread/service.hpp"

namespace fixtures {

inline genread::Bundle mock_bundle(std::uint64_t seed, int story_words = 500) {
  genread::ArtifactStore store;
  genread::MockTextProvider text({seed, std::nullopt});
  genread::MockImageProvider image(store, seed);
  genread::MockEmbeddingProvider embed(genread::kDefaultEmbeddingDims, genread::kDefaultTokenBudget, seed);
  genread::GenerationSettings settings;
  settings.seed = seed;
  settings.story_words = story_words;
  return genread::build_bundle({}, settings, {text, image, embed, store}, "1970-01-01T00:00:00Z", true);
}

inline std::vector<genread::Bundle> four_bundles() {
  std::vector<genread::Bundle> out;
  for (std::uint64_t s = 1; s <= 4; ++s) out.push_back(mock_bundle(s));
  return out;
}

// Fresh, empty directory unique to this process.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("genread_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Settable clock shared with an ExperimentService.
struct StepClock {
  std::shared_ptr<std::int64_t> now = std::make_shared<std::int64_t>(1'000'000);
  genread::ServiceClock fn() const {
    auto p = now;
    return [p] { return *p; };
  }
  void advance(std::int64_t ms) const { *now += ms; }
};

inline nlohmann::json answers(int n, const std::string& fill = "3") {
  nlohmann::json a = nlohmann::json::object();
  for (int q = 1; q <= n; ++q) a["Q" + std::to_string(q)] = fill;
  return a;
}

// Answers matching the key for the first `correct` questions, wrong after.
inline std::vector<int> post_test_answers(const genread::QuestionSet& q, int correct) {
  std::vector<int> out;
  for (const auto& x : q.questions) {
    out.push_back(static_cast<int>(out.size()) < correct ? x.correct_option : (x.correct_option + 1) % 4);
  }
  return out;
}

// Runs one participant from consent to done through the service, letting
// the server close every timed phase. Returns the session id.
inline std::string drive_session(genread::ExperimentService& svc, const StepClock& clock, int group,
                                 const std::vector<int>& correct, const std::string& q3 = "3",
                                 const std::string& q4 = "3") {
  using namespace genread;
  const auto id = svc.create_session()["session_id"].get<std::string>();
  clock.advance(4000);
  svc.submit(id, std::string(events::kConsentGiven), nlohmann::json::object());
  clock.advance(60000);
  svc.submit(id, std::string(events::kPreSurveySubmitted), {{"answers", answers(10)}});
  clock.advance(30000);
  svc.submit(id, std::string(events::kCalibrationDone), nlohmann::json::object());
  clock.advance(1000);
  auto st = svc.submit(id, std::string(events::kGroupSelected), {{"group_id", group}});
  for (int slot = 1; slot <= 4; ++slot) {
    const auto& plan = st.slots[static_cast<std::size_t>(slot - 1)];
    clock.advance(static_cast<std::int64_t>(plan.time_limit_s) * 1000);
    const auto problems = svc.distraction_problems(id);
    nlohmann::json given = nlohmann::json::array();
    for (std::size_t i = 0; i < problems.size() / 2; ++i) given.push_back(problems[i].expected);
    clock.advance(30000);
    svc.submit(id, std::string(events::kDistractionSubmitted), {{"answers", given}});
    clock.advance(30000);
    clock.advance(80000);
    const auto& q = svc.bundle(plan.story_id).questions;
    st = svc.submit(id, std::string(events::kPostTestSubmitted),
                    {{"answers", post_test_answers(q, correct[static_cast<std::size_t>(slot - 1)])}});
  }
  clock.advance(45000);
  nlohmann::json post = answers(5);
  post["Q3"] = q3;
  post["Q4"] = q4;
  svc.submit(id, std::string(events::kPostSurveySubmitted), {{"answers", post}});
  return id;
}

// Synthetic 90 Hz gaze covering the first seconds of every reading window.
inline std::string gaze_csv_for(const genread::SessionLog& log, std::uint64_t seed, std::size_t per_slot = 900) {
  std::ostringstream out;
  out << "t_ms,x_px,y_px,valid\n";
  out.precision(17);
  for (const auto& s : log.slots) {
    const auto pts = oracle::random_walk_stream(seed + static_cast<std::uint64_t>(s.slot), per_slot);
    for (const auto& p : pts) {
      out << s.reading_start_ms + p.t_ms << ',' << p.x_px << ',' << p.y_px << ',' << (p.valid ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

}  // namespace fixtures
