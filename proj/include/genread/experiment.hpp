#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genread/content.hpp"

namespace genread {

enum class ReadingCondition { C1, C2, C3, C4 };

inline constexpr ReadingCondition kAllConditions[] = {ReadingCondition::C1, ReadingCondition::C2,
                                                     ReadingCondition::C3, ReadingCondition::C4};

std::string_view to_string(ReadingCondition c);         // "C1".."C4"
std::string_view condition_label(ReadingCondition c);   // "Baseline", "IGenAI Image", ...
ReadingCondition condition_from_string(std::string_view s);

// Group g (1..6): the fixed story is read under C1, the three rotating stories
// under C2, C3, C4 following the g-th lexicographic permutation.
struct GroupAssignment {
  int group_id = 0;
  std::string fixed_story_id;
  std::map<ReadingCondition, std::string> rotating;  // C2..C4 -> story id

  struct Slot {
    int slot = 0;  // 1..4
    std::string story_id;
    ReadingCondition condition = ReadingCondition::C1;
  };
  // Presentation order: C1 (fixed story) first, then C2, C3, C4.
  std::vector<Slot> slots() const;
  void validate() const;
};

inline constexpr int kGroupCount = 6;
inline constexpr int kSlotCount = 4;

std::vector<GroupAssignment> build_group_assignments(const std::vector<std::string>& story_ids,
                                                     const std::string& fixed_story_id);

inline constexpr int kReadingWordsPerMinute = 250;

// ceil(word_count / 250 * 60) seconds. For C3 pass the story's word count.
int reading_time_limit(std::size_t word_count);

inline constexpr std::int64_t kDistractionMillis = 60'000;

// --- distraction task ------------------------------------------------------

enum class ArithmeticOp { Add, Subtract, Multiply };

struct DistractionProblem {
  int lhs = 0;
  int rhs = 0;
  ArithmeticOp op = ArithmeticOp::Add;
  int expected = 0;

  std::string text() const;  // e.g. "12 × 7"
  friend bool operator==(const DistractionProblem&, const DistractionProblem&) = default;
};

inline constexpr int kDistractionOperandMin = 2;
inline constexpr int kDistractionOperandMax = 99;

std::vector<DistractionProblem> generate_distraction_problems(std::uint64_t seed, int n);

// Number of answers equal to the expected result; missing answers count wrong.
int score_distraction(const std::vector<DistractionProblem>& problems, const std::vector<std::optional<int>>& answers);

// Throws AnswerCountMismatch unless exactly 10 answers are given.
int score_post_test(const std::vector<int>& answers, const QuestionSet& qset);

// --- session state machine -------------------------------------------------

enum class PhaseKind { Consent, PreSurvey, Calibration, GroupSelect, Reading, Distraction, PostTest, PostSurvey, Done };

struct Phase {
  PhaseKind kind = PhaseKind::Consent;
  int slot = 0;  // 1..4 for reading/distraction/post_test

  std::string to_string() const;  // "reading(2)", "consent", ...
  bool timed() const { return kind == PhaseKind::Reading || kind == PhaseKind::Distraction; }
  friend bool operator==(const Phase&, const Phase&) = default;
};

namespace events {
inline constexpr std::string_view kSessionCreated = "session_created";
inline constexpr std::string_view kConsentGiven = "consent_given";
inline constexpr std::string_view kPreSurveySubmitted = "pre_survey_submitted";
inline constexpr std::string_view kCalibrationDone = "calibration_done";
inline constexpr std::string_view kGroupSelected = "group_selected";
inline constexpr std::string_view kTimerExpired = "timer_expired";
inline constexpr std::string_view kDistractionSubmitted = "distraction_submitted";
inline constexpr std::string_view kPostTestSubmitted = "post_test_submitted";
inline constexpr std::string_view kPostSurveySubmitted = "post_survey_submitted";
}  // namespace events

struct SessionEvent {
  std::uint64_t seq = 0;
  std::int64_t t_ms = 0;  // server timestamp
  std::string type;
  nlohmann::json payload = nlohmann::json::object();

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

struct SlotPlan {
  int slot = 0;
  std::string story_id;
  int story_index = 0;  // 1-based position in the served story list
  ReadingCondition condition = ReadingCondition::C1;
  std::size_t word_count = 0;  // story words; drives the time limit
  int time_limit_s = 0;

  friend bool operator==(const SlotPlan&, const SlotPlan&) = default;
};

struct PhaseStamp {
  std::string phase;
  std::int64_t entered_ms = 0;
  friend bool operator==(const PhaseStamp&, const PhaseStamp&) = default;
};

struct SessionState {
  std::string session_id;
  std::uint64_t distraction_seed = 0;
  int group_id = 0;
  Phase phase;
  std::vector<SlotPlan> slots;
  std::int64_t phase_entered_ms = 0;
  std::optional<std::int64_t> deadline_ms;  // set on entry to a timed phase, never moved
  bool distraction_submitted = false;
  std::int64_t last_event_ms = 0;
  std::vector<PhaseStamp> history;

  const SlotPlan* current_slot() const;
  friend bool operator==(const SessionState&, const SessionState&) = default;
};

// Starts a session from its session_created event.
SessionState initial_state(const SessionEvent& created);

// Pure transition. Throws IllegalTransition for events the current phase does
// not accept (including early timer expiry) and ValidationFailed for
// malformed payloads.
SessionState advance_session(const SessionState& state, const SessionEvent& event);

struct SlotLog {
  int slot = 0;
  std::string story_id;
  int story_index = 0;
  ReadingCondition condition = ReadingCondition::C1;
  double reading_seconds = 0.0;
  double question_seconds = 0.0;
  int distraction_score = 0;
  int correct_answers = 0;
  std::vector<int> answers;
  std::int64_t reading_start_ms = 0;
  std::int64_t reading_end_ms = 0;

  friend bool operator==(const SlotLog&, const SlotLog&) = default;
};

struct SessionLog {
  std::string session_id;
  int group_number = 0;
  std::vector<SlotLog> slots;
  std::map<std::string, std::string> pre_survey;
  std::map<std::string, std::string> post_survey;
  bool done = false;

  void validate() const;
  friend bool operator==(const SessionLog&, const SessionLog&) = default;
};

struct SessionReplay {
  SessionState state;
  SessionLog log;
};

// Applies one event to both state and log.
void apply_event(SessionReplay& replay, const SessionEvent& event);

// Pure fold over a recorded stream; the first event must be session_created.
SessionReplay replay_events(const std::vector<SessionEvent>& events);

// --- persistence -------------------------------------------------------------

// One directory per session under root: events.jsonl (append-only) plus any
// uploaded gaze.csv.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path session_dir(const std::string& session_id) const;

  // Creates the directory and writes the session_created event.
  void create(const std::string& session_id, const SessionEvent& created);
  bool exists(const std::string& session_id) const;
  std::vector<std::string> list() const;

  // Appends with the next sequence number and returns it. Throws
  // UnknownSession or StorageFailure.
  std::uint64_t record_event(const std::string& session_id, SessionEvent event);
  std::vector<SessionEvent> read_events(const std::string& session_id) const;

  void write_gaze(const std::string& session_id, const std::string& csv);

 private:
  std::filesystem::path root_;
  mutable std::mutex mu_;
  std::map<std::string, std::uint64_t> next_seq_;
};

std::vector<SessionEvent> read_event_file(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const SessionEvent& e);
void from_json(const nlohmann::json& j, SessionEvent& e);
void to_json(nlohmann::json& j, const SlotPlan& p);
void from_json(const nlohmann::json& j, SlotPlan& p);
void to_json(nlohmann::json& j, const SessionState& s);
void to_json(nlohmann::json& j, const SlotLog& s);
void from_json(const nlohmann::json& j, SlotLog& s);
void to_json(nlohmann::json& j, const SessionLog& s);
void from_json(const nlohmann::json& j, SessionLog& s);
void to_json(nlohmann::json& j, const DistractionProblem& p);

}  // namespace genread
