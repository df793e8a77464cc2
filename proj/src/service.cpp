#include "genread/service.hpp"

#include <algorithm>
#include <chrono>

#include "genread/errors.hpp"
#include "genread/gaze.hpp"
#include "genread/text_utils.hpp"

namespace genread {

using json = nlohmann::json;

ServiceClock system_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

ExperimentService::ExperimentService(std::vector<Bundle> bundles, SessionStore& store, ServiceClock clock,
                                     ServiceOptions options)
    : bundles_(std::move(bundles)), store_(store), clock_(std::move(clock)), options_(std::move(options)) {
  if (bundles_.size() != static_cast<std::size_t>(kSlotCount)) {
    fail(ErrorCode::ValidationFailed,
         "the experiment needs exactly 4 stories, got " + std::to_string(bundles_.size()));
  }
  require(options_.distraction_problems >= 1, "distraction_problems must be >= 1");
  std::sort(bundles_.begin(), bundles_.end(), [](const Bundle& a, const Bundle& b) { return a.bundle_id < b.bundle_id; });
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < bundles_.size(); ++i) {
    ids.push_back(bundles_[i].bundle_id);
    by_id_[bundles_[i].bundle_id] = i;
  }
  fixed_story_id_ = options_.fixed_story_id.value_or(ids.front());
  groups_ = build_group_assignments(ids, fixed_story_id_);

  for (const auto& id : store_.list()) {
    auto e = std::make_unique<Entry>();
    e->replay = replay_events(store_.read_events(id));
    sessions_.emplace(id, std::move(e));
  }
}

const Bundle& ExperimentService::bundle(const std::string& bundle_id) const {
  const auto it = by_id_.find(bundle_id);
  if (it == by_id_.end()) fail(ErrorCode::ReferenceNotFound, "unknown bundle " + bundle_id);
  return bundles_[it->second];
}

json ExperimentService::groups_json() const {
  json out = json::array();
  for (const auto& g : groups_) {
    json slots = json::array();
    for (const auto& s : g.slots()) {
      slots.push_back({{"slot", s.slot}, {"story_id", s.story_id}, {"condition", to_string(s.condition)}});
    }
    out.push_back({{"group_id", g.group_id}, {"slots", slots}});
  }
  return out;
}

ExperimentService::Entry& ExperimentService::entry(const std::string& session_id) {
  std::lock_guard lock(sessions_mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) fail(ErrorCode::UnknownSession, "unknown session " + session_id);
  return *it->second;
}

std::int64_t ExperimentService::now_for(const Entry& e) const {
  return std::max(clock_(), e.replay.state.last_event_ms);
}

void ExperimentService::record(Entry& e, SessionEvent event) {
  SessionReplay next = e.replay;
  apply_event(next, event);
  store_.record_event(e.replay.state.session_id, event);
  e.replay = std::move(next);
}

void ExperimentService::catch_up(Entry& e) {
  const auto now = clock_();
  while (e.replay.state.phase.timed() && e.replay.state.deadline_ms && now >= *e.replay.state.deadline_ms) {
    SessionEvent ev;
    ev.t_ms = *e.replay.state.deadline_ms;
    ev.type = std::string(events::kTimerExpired);
    ev.payload = {{"source", "server"}};
    record(e, std::move(ev));
  }
}

json ExperimentService::create_session() {
  std::lock_guard lock(sessions_mu_);
  std::string id;
  std::uint64_t h = 0;
  do {
    ++created_count_;
    h = fnv1a64(std::to_string(clock_()) + "|" + std::to_string(created_count_), options_.seed);
    id = "s-" + hex64(h).substr(0, 12);
  } while (sessions_.count(id) || store_.exists(id));

  SessionEvent created;
  created.t_ms = clock_();
  created.type = std::string(events::kSessionCreated);
  created.payload = {{"session_id", id}, {"distraction_seed", fnv1a64(id, options_.seed)}};
  store_.create(id, created);
  auto e = std::make_unique<Entry>();
  apply_event(e->replay, created);
  const auto state = e->replay.state;
  sessions_.emplace(id, std::move(e));
  return {{"session_id", id}, {"state", state}, {"groups", groups_json()}};
}

std::vector<DistractionProblem> ExperimentService::problems_for(const SessionState& s, int slot) const {
  return generate_distraction_problems(s.distraction_seed + static_cast<std::uint64_t>(slot),
                                       options_.distraction_problems);
}

json ExperimentService::enrich(const Entry& e, const std::string& type, const json& payload) const {
  const auto& s = e.replay.state;
  json out = payload.is_object() ? payload : json::object();
  if (type == events::kGroupSelected) {
    if (!payload.contains("group_id") || !payload.at("group_id").is_number_integer()) {
      fail(ErrorCode::ValidationFailed, "group_selected: group_id must be an integer 1..6");
    }
    const int g = payload.at("group_id").get<int>();
    if (g < 1 || g > kGroupCount) fail(ErrorCode::ValidationFailed, "group_selected: group_id must be 1..6");
    if (s.phase.kind != PhaseKind::GroupSelect) return out;  // rejected by the state machine
    json slots = json::array();
    for (const auto& slot : groups_[static_cast<std::size_t>(g - 1)].slots()) {
      const auto& b = bundle(slot.story_id);
      SlotPlan p;
      p.slot = slot.slot;
      p.story_id = slot.story_id;
      p.story_index = static_cast<int>(by_id_.at(slot.story_id)) + 1;
      p.condition = slot.condition;
      // C3 readers also get the summary, but the limit follows the story
      p.word_count = b.story.word_count;
      p.time_limit_s = reading_time_limit(b.story.word_count);
      slots.push_back(p);
    }
    out["slots"] = slots;
  } else if (type == events::kDistractionSubmitted) {
    if (s.phase.kind != PhaseKind::Distraction) return out;
    std::vector<std::optional<int>> answers;
    for (const auto& a : payload.value("answers", json::array())) {
      answers.push_back(a.is_number_integer() ? std::optional<int>(a.get<int>()) : std::nullopt);
    }
    const auto problems = problems_for(s, s.phase.slot);
    out["score"] = score_distraction(problems, answers);
    out["n_problems"] = problems.size();
  } else if (type == events::kPostTestSubmitted) {
    if (s.phase.kind != PhaseKind::PostTest) return out;
    const auto raw = payload.value("answers", json::array());
    std::vector<int> answers;
    for (const auto& a : raw) {
      if (!a.is_number_integer()) fail(ErrorCode::ValidationFailed, "post_test_submitted: answers must be integers");
      answers.push_back(a.get<int>());
    }
    const auto* plan = s.current_slot();
    out["correct"] = score_post_test(answers, bundle(plan->story_id).questions);
  }
  return out;
}

SessionState ExperimentService::submit(const std::string& session_id, const std::string& type, const json& payload) {
  auto& e = entry(session_id);
  std::lock_guard lock(e.mu);
  const auto phase_before = e.replay.state.history.size();
  catch_up(e);
  if (type == events::kSessionCreated) fail(ErrorCode::IllegalTransition, "session_created is issued by the server");
  if (type == events::kTimerExpired) {
    // the server already closed the phase if its deadline passed
    if (e.replay.state.history.size() != phase_before) return e.replay.state;
    // a client timer for a phase the server already closed is a no-op
    const auto& st = e.replay.state;
    const std::string named = payload.is_object() ? payload.value("phase", std::string()) : std::string();
    if (!named.empty() && named != st.phase.to_string()) {
      for (const auto& h : st.history) {
        if (h.phase == named) return st;
      }
    }
    if (e.replay.state.phase.timed()) fail(ErrorCode::IllegalTransition, "deadline not reached");
  }
  SessionEvent ev;
  ev.t_ms = now_for(e);
  ev.type = type;
  ev.payload = enrich(e, type, payload);
  record(e, std::move(ev));
  return e.replay.state;
}

SessionState ExperimentService::state(const std::string& session_id) {
  auto& e = entry(session_id);
  std::lock_guard lock(e.mu);
  catch_up(e);
  return e.replay.state;
}

SessionLog ExperimentService::log(const std::string& session_id) {
  auto& e = entry(session_id);
  std::lock_guard lock(e.mu);
  catch_up(e);
  return e.replay.log;
}

std::vector<SessionEvent> ExperimentService::events(const std::string& session_id) {
  auto& e = entry(session_id);
  std::lock_guard lock(e.mu);
  catch_up(e);
  return store_.read_events(session_id);
}

std::vector<DistractionProblem> ExperimentService::distraction_problems(const std::string& session_id) {
  auto& e = entry(session_id);
  std::lock_guard lock(e.mu);
  catch_up(e);
  const auto& s = e.replay.state;
  if (s.phase.kind != PhaseKind::Distraction) {
    fail(ErrorCode::IllegalTransition, "no distraction task in phase " + s.phase.to_string());
  }
  return problems_for(s, s.phase.slot);
}

std::size_t ExperimentService::upload_gaze(const std::string& session_id, const std::string& csv) {
  auto& e = entry(session_id);
  std::lock_guard lock(e.mu);
  const auto points = parse_gaze_csv(csv);
  store_.write_gaze(session_id, csv);
  return points.size();
}

json ExperimentService::state_view(const std::string& session_id) {
  auto& e = entry(session_id);
  std::lock_guard lock(e.mu);
  catch_up(e);
  const auto& s = e.replay.state;
  json j = s;
  j["server_time_ms"] = now_for(e);
  if (s.deadline_ms) j["remaining_ms"] = std::max<std::int64_t>(0, *s.deadline_ms - now_for(e));
  if (const auto* plan = s.current_slot()) {
    const std::string base = "/bundles/" + plan->story_id;
    j["content"] = {{"bundle_id", plan->story_id},
                    {"condition", to_string(plan->condition)},
                    {"condition_url", base + "/condition/" + std::string(to_string(plan->condition))},
                    {"questions_url", base + "/questions"}};
  }
  return j;
}

}  // namespace genread
