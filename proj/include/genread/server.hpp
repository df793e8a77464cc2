#pragma once

#include <memory>
#include <string>

#include "genread/service.hpp"

namespace genread {

// HTTP status for an error code: 404 unknown ids, 409 illegal transitions,
// 400 bad input, 500 otherwise.
int http_status_for(ErrorCode code);

// JSON API over an ExperimentService.
//
//   GET  /health
//   GET  /bundles
//   GET  /bundles/{id}/condition/{C1..C4}
//   GET  /bundles/{id}/questions
//   GET  /bundles/{id}/images/{artifact}
//   POST /sessions
//   POST /sessions/{id}/events        {"type": ..., "payload": {...}}
//   GET  /sessions/{id}/state
//   GET  /sessions/{id}/log
//   GET  /sessions/{id}/events
//   GET  /sessions/{id}/distraction
//   POST /sessions/{id}/gaze          text/csv body
class ApiServer {
 public:
  explicit ApiServer(ExperimentService& service);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds to host:port (port 0 picks a free port) and returns the bound port.
  // Throws IoFailure when the port cannot be bound.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void run();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace genread
