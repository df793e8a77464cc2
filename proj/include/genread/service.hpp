#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "genread/bundle.hpp"
#include "genread/experiment.hpp"

namespace genread {

// Milliseconds on the server's clock. Injectable so tests can step time.
using ServiceClock = std::function<std::int64_t()>;

ServiceClock system_clock_ms();

struct ServiceOptions {
  std::optional<std::string> fixed_story_id;  // default: the lowest story id
  int distraction_problems = 40;
  std::uint64_t seed = 0;
};

// Hosts the experiment over exactly four bundles. Every session has its own
// lock; the event file on disk is the source of truth and in-memory state is
// its fold. Timed phases are closed by the server: any request touching a
// session first records the timer_expired events whose deadlines have passed.
class ExperimentService {
 public:
  ExperimentService(std::vector<Bundle> bundles, SessionStore& store, ServiceClock clock, ServiceOptions options = {});

  const std::vector<GroupAssignment>& groups() const { return groups_; }
  const std::vector<Bundle>& bundles() const { return bundles_; }
  const Bundle& bundle(const std::string& bundle_id) const;  // throws ReferenceNotFound
  const std::string& fixed_story_id() const { return fixed_story_id_; }

  // {session_id, state, groups: [{group_id, slots: [...]}]}
  nlohmann::json create_session();

  // Client events carry only what the participant supplied; the service adds
  // slot plans and scores before recording. Returns the state afterwards.
  // A timer_expired whose payload names an already closed phase
  // ({"phase": "reading(2)"}) is accepted and changes nothing.
  SessionState submit(const std::string& session_id, const std::string& type, const nlohmann::json& payload);

  SessionState state(const std::string& session_id);
  SessionLog log(const std::string& session_id);
  std::vector<SessionEvent> events(const std::string& session_id);

  // Problems of the session's current distraction phase.
  std::vector<DistractionProblem> distraction_problems(const std::string& session_id);

  // Parses (rejecting malformed CSV) and stores the upload; returns the sample count.
  std::size_t upload_gaze(const std::string& session_id, const std::string& csv);

  // State plus what the client needs to render the current phase.
  nlohmann::json state_view(const std::string& session_id);

 private:
  struct Entry {
    std::mutex mu;
    SessionReplay replay;
  };

  Entry& entry(const std::string& session_id);
  void record(Entry& e, SessionEvent event);
  void catch_up(Entry& e);
  std::int64_t now_for(const Entry& e) const;
  nlohmann::json enrich(const Entry& e, const std::string& type, const nlohmann::json& payload) const;
  std::vector<DistractionProblem> problems_for(const SessionState& s, int slot) const;
  nlohmann::json groups_json() const;

  std::vector<Bundle> bundles_;
  std::map<std::string, std::size_t> by_id_;
  std::string fixed_story_id_;
  std::vector<GroupAssignment> groups_;
  SessionStore& store_;
  ServiceClock clock_;
  ServiceOptions options_;

  std::mutex sessions_mu_;
  std::map<std::string, std::unique_ptr<Entry>> sessions_;
  std::uint64_t created_count_ = 0;
};

}  // namespace genread
