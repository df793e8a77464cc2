#include "genread/experiment.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>

#include "genread/errors.hpp"
#include "genread/text_utils.hpp"

namespace genread {

using nlohmann::json;

std::string_view to_string(ReadingCondition c) {
  switch (c) {
    case ReadingCondition::C1: return "C1";
    case ReadingCondition::C2: return "C2";
    case ReadingCondition::C3: return "C3";
    case ReadingCondition::C4: return "C4";
  }
  return "C1";
}

std::string_view condition_label(ReadingCondition c) {
  switch (c) {
    case ReadingCondition::C1: return "Baseline";
    case ReadingCondition::C2: return "IGenAI Image";
    case ReadingCondition::C3: return "TGenAI Summary";
    case ReadingCondition::C4: return "IGenAI Summary";
  }
  return "Baseline";
}

ReadingCondition condition_from_string(std::string_view s) {
  for (auto c : kAllConditions) {
    if (to_string(c) == s) return c;
  }
  fail(ErrorCode::MalformedInput, "unknown reading condition '" + std::string(s) + "'");
}

std::vector<GroupAssignment::Slot> GroupAssignment::slots() const {
  std::vector<Slot> out;
  out.push_back({1, fixed_story_id, ReadingCondition::C1});
  int slot = 2;
  for (auto c : {ReadingCondition::C2, ReadingCondition::C3, ReadingCondition::C4}) {
    out.push_back({slot++, rotating.at(c), c});
  }
  return out;
}

void GroupAssignment::validate() const {
  if (group_id < 1 || group_id > kGroupCount) fail(ErrorCode::ValidationFailed, "group id out of range");
  std::set<std::string> stories;
  for (auto c : {ReadingCondition::C2, ReadingCondition::C3, ReadingCondition::C4}) {
    auto it = rotating.find(c);
    if (it == rotating.end()) fail(ErrorCode::ValidationFailed, "group mapping misses a condition");
    if (it->second == fixed_story_id) fail(ErrorCode::ValidationFailed, "fixed story inside the rotating mapping");
    stories.insert(it->second);
  }
  if (rotating.size() != 3 || stories.size() != 3) fail(ErrorCode::ValidationFailed, "group mapping is not a bijection");
}

std::vector<GroupAssignment> build_group_assignments(const std::vector<std::string>& story_ids,
                                                     const std::string& fixed_story_id) {
  require(story_ids.size() == kSlotCount, "build_group_assignments: exactly 4 story ids required");
  const std::set<std::string> unique(story_ids.begin(), story_ids.end());
  if (unique.size() != story_ids.size()) fail(ErrorCode::DuplicateStoryIds, "build_group_assignments: duplicate story ids");
  if (!unique.count(fixed_story_id)) {
    fail(ErrorCode::ValidationFailed, "build_group_assignments: fixed story '" + fixed_story_id + "' not among the stories");
  }
  std::vector<std::string> rotating;
  for (const auto& id : story_ids) {
    if (id != fixed_story_id) rotating.push_back(id);
  }

  std::array<int, 3> perm = {0, 1, 2};
  std::vector<GroupAssignment> out;
  int group = 1;
  do {
    GroupAssignment g;
    g.group_id = group++;
    g.fixed_story_id = fixed_story_id;
    g.rotating[ReadingCondition::C2] = rotating[static_cast<std::size_t>(perm[0])];
    g.rotating[ReadingCondition::C3] = rotating[static_cast<std::size_t>(perm[1])];
    g.rotating[ReadingCondition::C4] = rotating[static_cast<std::size_t>(perm[2])];
    out.push_back(std::move(g));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

int reading_time_limit(std::size_t word_count) {
  require(word_count >= 1, "reading_time_limit: word_count must be >= 1");
  const auto num = word_count * 60;
  return static_cast<int>((num + kReadingWordsPerMinute - 1) / kReadingWordsPerMinute);
}

std::string DistractionProblem::text() const {
  const char* sym = op == ArithmeticOp::Add ? " + " : op == ArithmeticOp::Subtract ? " - " : " × ";
  return std::to_string(lhs) + sym + std::to_string(rhs);
}

std::vector<DistractionProblem> generate_distraction_problems(std::uint64_t seed, int n) {
  require(n >= 1, "generate_distraction_problems: n must be >= 1");
  SeededRng rng(seed);
  std::vector<DistractionProblem> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    DistractionProblem p;
    p.op = static_cast<ArithmeticOp>(rng.between(0, 2));
    p.lhs = static_cast<int>(rng.between(kDistractionOperandMin, kDistractionOperandMax));
    p.rhs = static_cast<int>(rng.between(kDistractionOperandMin, kDistractionOperandMax));
    if (p.op == ArithmeticOp::Subtract && p.lhs < p.rhs) std::swap(p.lhs, p.rhs);
    switch (p.op) {
      case ArithmeticOp::Add: p.expected = p.lhs + p.rhs; break;
      case ArithmeticOp::Subtract: p.expected = p.lhs - p.rhs; break;
      case ArithmeticOp::Multiply: p.expected = p.lhs * p.rhs; break;
    }
    out.push_back(p);
  }
  return out;
}

int score_distraction(const std::vector<DistractionProblem>& problems, const std::vector<std::optional<int>>& answers) {
  int score = 0;
  for (std::size_t i = 0; i < problems.size() && i < answers.size(); ++i) {
    if (answers[i] && *answers[i] == problems[i].expected) ++score;
  }
  return score;
}

int score_post_test(const std::vector<int>& answers, const QuestionSet& qset) {
  if (answers.size() != kQuestionsPerSet) {
    fail(ErrorCode::AnswerCountMismatch, "post-test: expected 10 answers, got " + std::to_string(answers.size()));
  }
  qset.validate();
  int correct = 0;
  for (const auto& q : qset.questions) {
    if (answers[static_cast<std::size_t>(q.index - 1)] == q.correct_option) ++correct;
  }
  return correct;
}

// --- state machine -----------------------------------------------------------

std::string Phase::to_string() const {
  switch (kind) {
    case PhaseKind::Consent: return "consent";
    case PhaseKind::PreSurvey: return "pre_survey";
    case PhaseKind::Calibration: return "calibration";
    case PhaseKind::GroupSelect: return "group_select";
    case PhaseKind::Reading: return "reading(" + std::to_string(slot) + ")";
    case PhaseKind::Distraction: return "distraction(" + std::to_string(slot) + ")";
    case PhaseKind::PostTest: return "post_test(" + std::to_string(slot) + ")";
    case PhaseKind::PostSurvey: return "post_survey";
    case PhaseKind::Done: return "done";
  }
  return "unknown";
}

const SlotPlan* SessionState::current_slot() const {
  if (phase.slot < 1 || phase.slot > static_cast<int>(slots.size())) return nullptr;
  return &slots[static_cast<std::size_t>(phase.slot - 1)];
}

namespace {

[[noreturn]] void illegal(const SessionState& s, const SessionEvent& e, const std::string& why = "") {
  fail(ErrorCode::IllegalTransition,
       "event '" + e.type + "' not allowed in phase " + s.phase.to_string() + (why.empty() ? "" : ": " + why));
}

void require_answers(const SessionEvent& e, int count) {
  const auto it = e.payload.find("answers");
  if (it == e.payload.end() || !it->is_object()) fail(ErrorCode::ValidationFailed, e.type + ": missing answers map");
  for (int q = 1; q <= count; ++q) {
    if (!it->contains("Q" + std::to_string(q))) {
      fail(ErrorCode::ValidationFailed, e.type + ": missing answer Q" + std::to_string(q));
    }
  }
}

void enter(SessionState& s, Phase next, std::int64_t t, std::optional<std::int64_t> deadline = std::nullopt) {
  s.phase = next;
  s.phase_entered_ms = t;
  s.deadline_ms = deadline;
  s.history.push_back({next.to_string(), t});
}

void enter_reading(SessionState& s, int slot, std::int64_t t) {
  const auto& plan = s.slots[static_cast<std::size_t>(slot - 1)];
  enter(s, {PhaseKind::Reading, slot}, t, t + static_cast<std::int64_t>(plan.time_limit_s) * 1000);
}

std::map<std::string, std::string> answer_map(const json& answers) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : answers.items()) out[k] = v.is_string() ? v.get<std::string>() : v.dump();
  return out;
}

}  // namespace

SessionState initial_state(const SessionEvent& created) {
  if (created.type != events::kSessionCreated) {
    fail(ErrorCode::IllegalTransition, "first event must be session_created, got '" + created.type + "'");
  }
  SessionState s;
  s.session_id = created.payload.at("session_id").get<std::string>();
  s.distraction_seed = created.payload.value("distraction_seed", std::uint64_t{0});
  s.last_event_ms = created.t_ms;
  enter(s, {PhaseKind::Consent, 0}, created.t_ms);
  return s;
}

SessionState advance_session(const SessionState& state, const SessionEvent& e) {
  if (e.t_ms < state.last_event_ms) illegal(state, e, "timestamp goes backwards");
  SessionState s = state;
  s.last_event_ms = e.t_ms;
  const auto& type = e.type;

  switch (state.phase.kind) {
    case PhaseKind::Consent:
      if (type != events::kConsentGiven) illegal(state, e);
      enter(s, {PhaseKind::PreSurvey, 0}, e.t_ms);
      return s;

    case PhaseKind::PreSurvey:
      if (type != events::kPreSurveySubmitted) illegal(state, e);
      require_answers(e, 10);
      enter(s, {PhaseKind::Calibration, 0}, e.t_ms);
      return s;

    case PhaseKind::Calibration:
      if (type != events::kCalibrationDone) illegal(state, e);
      enter(s, {PhaseKind::GroupSelect, 0}, e.t_ms);
      return s;

    case PhaseKind::GroupSelect: {
      if (type != events::kGroupSelected) illegal(state, e);
      const int group = e.payload.value("group_id", 0);
      if (group < 1 || group > kGroupCount) fail(ErrorCode::ValidationFailed, "group_selected: group_id must be 1..6");
      std::vector<SlotPlan> slots;
      try {
        slots = e.payload.at("slots").get<std::vector<SlotPlan>>();
      } catch (const json::exception& ex) {
        fail(ErrorCode::ValidationFailed, std::string("group_selected: bad slot plan: ") + ex.what());
      }
      if (slots.size() != kSlotCount) fail(ErrorCode::ValidationFailed, "group_selected: exactly 4 slots required");
      for (int i = 0; i < kSlotCount; ++i) {
        const auto& p = slots[static_cast<std::size_t>(i)];
        if (p.slot != i + 1 || p.time_limit_s <= 0) fail(ErrorCode::ValidationFailed, "group_selected: bad slot plan");
      }
      s.group_id = group;
      s.slots = std::move(slots);
      enter_reading(s, 1, e.t_ms);
      return s;
    }

    case PhaseKind::Reading:
      if (type != events::kTimerExpired) illegal(state, e, "reading ends only at its deadline");
      if (e.t_ms < *state.deadline_ms) illegal(state, e, "deadline not reached");
      s.distraction_submitted = false;
      enter(s, {PhaseKind::Distraction, state.phase.slot}, e.t_ms, e.t_ms + kDistractionMillis);
      return s;

    case PhaseKind::Distraction:
      if (type == events::kDistractionSubmitted) {
        if (state.distraction_submitted) illegal(state, e, "already submitted");
        if (e.t_ms > *state.deadline_ms) illegal(state, e, "submitted after the deadline");
        if (!e.payload.contains("score")) fail(ErrorCode::ValidationFailed, "distraction_submitted: missing score");
        s.distraction_submitted = true;
        return s;
      }
      if (type != events::kTimerExpired) illegal(state, e);
      if (e.t_ms < *state.deadline_ms) illegal(state, e, "deadline not reached");
      enter(s, {PhaseKind::PostTest, state.phase.slot}, e.t_ms);
      return s;

    case PhaseKind::PostTest: {
      if (type != events::kPostTestSubmitted) illegal(state, e);
      const auto answers = e.payload.value("answers", json::array());
      if (answers.size() != kQuestionsPerSet) {
        fail(ErrorCode::AnswerCountMismatch, "post_test_submitted: expected 10 answers");
      }
      const int correct = e.payload.value("correct", -1);
      if (correct < 0 || correct > static_cast<int>(kQuestionsPerSet)) {
        fail(ErrorCode::ValidationFailed, "post_test_submitted: correct must be 0..10");
      }
      if (state.phase.slot < kSlotCount) {
        enter_reading(s, state.phase.slot + 1, e.t_ms);
      } else {
        enter(s, {PhaseKind::PostSurvey, 0}, e.t_ms);
      }
      return s;
    }

    case PhaseKind::PostSurvey:
      if (type != events::kPostSurveySubmitted) illegal(state, e);
      require_answers(e, 5);
      enter(s, {PhaseKind::Done, 0}, e.t_ms);
      return s;

    case PhaseKind::Done:
      illegal(state, e, "session finished");
  }
  illegal(state, e);
}

void apply_event(SessionReplay& r, const SessionEvent& e) {
  if (e.type == events::kSessionCreated) {
    r.state = initial_state(e);
    r.log = {};
    r.log.session_id = r.state.session_id;
    return;
  }
  const SessionState before = r.state;
  r.state = advance_session(before, e);
  auto& log = r.log;
  auto slot_log = [&](int slot) -> SlotLog& { return log.slots.at(static_cast<std::size_t>(slot - 1)); };

  if (e.type == events::kPreSurveySubmitted) {
    log.pre_survey = answer_map(e.payload.at("answers"));
  } else if (e.type == events::kGroupSelected) {
    log.group_number = r.state.group_id;
    log.slots.clear();
    for (const auto& p : r.state.slots) {
      SlotLog sl;
      sl.slot = p.slot;
      sl.story_id = p.story_id;
      sl.story_index = p.story_index;
      sl.condition = p.condition;
      log.slots.push_back(sl);
    }
    slot_log(1).reading_start_ms = e.t_ms;
  } else if (e.type == events::kTimerExpired && before.phase.kind == PhaseKind::Reading) {
    auto& sl = slot_log(before.phase.slot);
    sl.reading_end_ms = e.t_ms;
    sl.reading_seconds = static_cast<double>(e.t_ms - sl.reading_start_ms) / 1000.0;
  } else if (e.type == events::kDistractionSubmitted) {
    slot_log(before.phase.slot).distraction_score = e.payload.at("score").get<int>();
  } else if (e.type == events::kPostTestSubmitted) {
    auto& sl = slot_log(before.phase.slot);
    sl.question_seconds = static_cast<double>(e.t_ms - before.phase_entered_ms) / 1000.0;
    sl.correct_answers = e.payload.at("correct").get<int>();
    sl.answers = e.payload.at("answers").get<std::vector<int>>();
    if (r.state.phase.kind == PhaseKind::Reading) slot_log(r.state.phase.slot).reading_start_ms = e.t_ms;
  } else if (e.type == events::kPostSurveySubmitted) {
    log.post_survey = answer_map(e.payload.at("answers"));
    log.done = true;
  }
}

SessionReplay replay_events(const std::vector<SessionEvent>& stream) {
  if (stream.empty()) fail(ErrorCode::MalformedInput, "replay: empty event stream");
  SessionReplay r;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if ((i == 0) != (stream[i].type == events::kSessionCreated)) {
      fail(ErrorCode::IllegalTransition, "replay: session_created must be the first and only creation event");
    }
    apply_event(r, stream[i]);
  }
  return r;
}

void SessionLog::validate() const {
  for (const auto& s : slots) {
    if (s.correct_answers < 0 || s.correct_answers > static_cast<int>(kQuestionsPerSet)) {
      fail(ErrorCode::ValidationFailed, "session log: correct_answers out of range");
    }
  }
  if (done && slots.size() != kSlotCount) fail(ErrorCode::ValidationFailed, "session log: finished with != 4 slots");
}

// --- persistence -------------------------------------------------------------

SessionStore::SessionStore(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) fail(ErrorCode::StorageFailure, "session store: cannot create " + root_.string() + ": " + ec.message());
}

std::filesystem::path SessionStore::session_dir(const std::string& session_id) const {
  return root_ / session_id;
}

void SessionStore::create(const std::string& session_id, const SessionEvent& created) {
  require(!session_id.empty() && session_id.find('/') == std::string::npos && session_id.find("..") == std::string::npos,
          "session store: invalid session id");
  {
    std::lock_guard lock(mu_);
    std::error_code ec;
    std::filesystem::create_directories(session_dir(session_id), ec);
    if (ec) fail(ErrorCode::StorageFailure, "session store: " + ec.message());
    if (std::filesystem::exists(session_dir(session_id) / "events.jsonl")) {
      fail(ErrorCode::StorageFailure, "session store: session already exists: " + session_id);
    }
    next_seq_[session_id] = 0;
  }
  record_event(session_id, created);
}

bool SessionStore::exists(const std::string& session_id) const {
  return std::filesystem::exists(session_dir(session_id) / "events.jsonl");
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(root_)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "events.jsonl")) {
      out.push_back(entry.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t SessionStore::record_event(const std::string& session_id, SessionEvent event) {
  std::lock_guard lock(mu_);
  const auto path = session_dir(session_id) / "events.jsonl";
  auto it = next_seq_.find(session_id);
  if (it == next_seq_.end()) {
    if (!std::filesystem::exists(path)) fail(ErrorCode::UnknownSession, "unknown session: " + session_id);
    it = next_seq_.emplace(session_id, read_event_file(path).size()).first;
  }
  event.seq = it->second;
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) fail(ErrorCode::StorageFailure, "cannot open " + path.string() + " for append");
  out << json(event).dump() << '\n';
  out.flush();
  if (!out) fail(ErrorCode::StorageFailure, "append to " + path.string() + " failed");
  return it->second++;
}

std::vector<SessionEvent> SessionStore::read_events(const std::string& session_id) const {
  const auto path = session_dir(session_id) / "events.jsonl";
  if (!std::filesystem::exists(path)) fail(ErrorCode::UnknownSession, "unknown session: " + session_id);
  std::lock_guard lock(mu_);
  return read_event_file(path);
}

void SessionStore::write_gaze(const std::string& session_id, const std::string& csv) {
  if (!exists(session_id)) fail(ErrorCode::UnknownSession, "unknown session: " + session_id);
  std::lock_guard lock(mu_);
  const auto path = session_dir(session_id) / "gaze.csv";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << csv;
  if (!out) fail(ErrorCode::StorageFailure, "cannot write " + path.string());
}

std::vector<SessionEvent> read_event_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot read " + path.string());
  std::vector<SessionEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line).get<SessionEvent>());
    } catch (const json::exception& e) {
      fail(ErrorCode::MalformedInput, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// --- JSON --------------------------------------------------------------------

void to_json(json& j, const SessionEvent& e) {
  j = {{"seq", e.seq}, {"t_ms", e.t_ms}, {"type", e.type}, {"payload", e.payload}};
}

void from_json(const json& j, SessionEvent& e) {
  e.seq = j.at("seq").get<std::uint64_t>();
  e.t_ms = j.at("t_ms").get<std::int64_t>();
  e.type = j.at("type").get<std::string>();
  e.payload = j.value("payload", json::object());
}

void to_json(json& j, const SlotPlan& p) {
  j = {{"slot", p.slot},
       {"story_id", p.story_id},
       {"story_index", p.story_index},
       {"condition", to_string(p.condition)},
       {"word_count", p.word_count},
       {"time_limit_s", p.time_limit_s}};
}

void from_json(const json& j, SlotPlan& p) {
  p.slot = j.at("slot").get<int>();
  p.story_id = j.at("story_id").get<std::string>();
  p.story_index = j.at("story_index").get<int>();
  p.condition = condition_from_string(j.at("condition").get<std::string>());
  p.word_count = j.at("word_count").get<std::size_t>();
  p.time_limit_s = j.at("time_limit_s").get<int>();
}

void to_json(json& j, const SessionState& s) {
  json history = json::array();
  for (const auto& h : s.history) history.push_back({{"phase", h.phase}, {"entered_ms", h.entered_ms}});
  j = {{"session_id", s.session_id},
       {"group_id", s.group_id},
       {"phase", s.phase.to_string()},
       {"slot", s.phase.slot},
       {"phase_entered_ms", s.phase_entered_ms},
       {"deadline_ms", s.deadline_ms ? json(*s.deadline_ms) : json(nullptr)},
       {"distraction_submitted", s.distraction_submitted},
       {"slots", s.slots},
       {"history", history}};
}

void to_json(json& j, const SlotLog& s) {
  j = {{"slot", s.slot},
       {"story_id", s.story_id},
       {"story_index", s.story_index},
       {"condition", to_string(s.condition)},
       {"reading_seconds", s.reading_seconds},
       {"question_seconds", s.question_seconds},
       {"distraction_score", s.distraction_score},
       {"correct_answers", s.correct_answers},
       {"answers", s.answers},
       {"reading_start_ms", s.reading_start_ms},
       {"reading_end_ms", s.reading_end_ms}};
}

void from_json(const json& j, SlotLog& s) {
  s.slot = j.at("slot").get<int>();
  s.story_id = j.at("story_id").get<std::string>();
  s.story_index = j.at("story_index").get<int>();
  s.condition = condition_from_string(j.at("condition").get<std::string>());
  s.reading_seconds = j.at("reading_seconds").get<double>();
  s.question_seconds = j.at("question_seconds").get<double>();
  s.distraction_score = j.at("distraction_score").get<int>();
  s.correct_answers = j.at("correct_answers").get<int>();
  s.answers = j.at("answers").get<std::vector<int>>();
  s.reading_start_ms = j.at("reading_start_ms").get<std::int64_t>();
  s.reading_end_ms = j.at("reading_end_ms").get<std::int64_t>();
}

void to_json(json& j, const SessionLog& s) {
  j = {{"session_id", s.session_id},
       {"group_number", s.group_number},
       {"slots", s.slots},
       {"pre_survey", s.pre_survey},
       {"post_survey", s.post_survey},
       {"done", s.done}};
}

void from_json(const json& j, SessionLog& s) {
  s.session_id = j.at("session_id").get<std::string>();
  s.group_number = j.at("group_number").get<int>();
  s.slots = j.at("slots").get<std::vector<SlotLog>>();
  s.pre_survey = j.at("pre_survey").get<std::map<std::string, std::string>>();
  s.post_survey = j.at("post_survey").get<std::map<std::string, std::string>>();
  s.done = j.at("done").get<bool>();
}

void to_json(json& j, const DistractionProblem& p) {
  j = {{"text", p.text()}, {"lhs", p.lhs}, {"rhs", p.rhs},
       {"op", p.op == ArithmeticOp::Add ? "+" : p.op == ArithmeticOp::Subtract ? "-" : "*"}};
}

}  // namespace genread
