#include "genread/server.hpp"

#include <httplib.h>

#include "genread/errors.hpp"

namespace genread {

using json = nlohmann::json;

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::ReferenceNotFound:
      return 404;
    case ErrorCode::IllegalTransition:
      return 409;
    case ErrorCode::PreconditionViolated:
    case ErrorCode::ValidationFailed:
    case ErrorCode::AnswerCountMismatch:
    case ErrorCode::MalformedInput:
    case ErrorCode::ConstraintUnsatisfied:
      return 400;
    default:
      return 500;
  }
}

struct ApiServer::Impl {
  explicit Impl(ExperimentService& s) : service(s) {}
  ExperimentService& service;
  httplib::Server http;
};

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_json(res, {{"error", to_string(e.code())}, {"message", e.what()}}, http_status_for(e.code()));
    } catch (const json::exception& e) {
      send_json(res, {{"error", "malformed_input"}, {"message", e.what()}}, 400);
    } catch (const std::exception& e) {
      send_json(res, {{"error", "internal"}, {"message", e.what()}}, 500);
    }
  };
}

}  // namespace

ApiServer::ApiServer(ExperimentService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& svc = impl_->service;
  auto& http = impl_->http;

  http.Get("/health", guarded([&svc](const httplib::Request&, httplib::Response& res) {
             send_json(res, {{"status", "ok"}, {"bundles", svc.bundles().size()}});
           }));

  http.Get("/bundles", guarded([&svc](const httplib::Request&, httplib::Response& res) {
             json arr = json::array();
             for (const auto& b : svc.bundles()) {
               arr.push_back({{"bundle_id", b.bundle_id},
                              {"title", b.story.title},
                              {"word_count", b.story.word_count},
                              {"fixed", b.bundle_id == svc.fixed_story_id()}});
             }
             send_json(res, {{"bundles", arr}});
           }));

  http.Get("/bundles/:id/condition/:cond", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const auto& b = svc.bundle(req.path_params.at("id"));
             ReadingCondition c;
             try {
               c = condition_from_string(req.path_params.at("cond"));
             } catch (const Error&) {
               fail(ErrorCode::ReferenceNotFound, "unknown condition " + req.path_params.at("cond"));
             }
             send_json(res, condition_payload(b, c));
           }));

  http.Get("/bundles/:id/questions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             send_json(res, questions_payload(svc.bundle(req.path_params.at("id"))));
           }));

  http.Get("/bundles/:id/images/:artifact", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const auto& b = svc.bundle(req.path_params.at("id"));
             const auto it = b.artifacts.find(req.path_params.at("artifact"));
             if (it == b.artifacts.end()) fail(ErrorCode::ReferenceNotFound, "unknown image " + req.path_params.at("artifact"));
             res.set_content(std::string(it->second.bytes.begin(), it->second.bytes.end()), it->second.media_type);
           }));

  http.Post("/sessions", guarded([&svc](const httplib::Request&, httplib::Response& res) {
              send_json(res, svc.create_session(), 201);
            }));

  http.Post("/sessions/:id/events", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              json body;
              try {
                body = json::parse(req.body);
              } catch (const json::exception& e) {
                fail(ErrorCode::MalformedInput, std::string("event body: ") + e.what());
              }
              if (!body.is_object() || !body.contains("type") || !body.at("type").is_string()) {
                fail(ErrorCode::MalformedInput, "event body needs a string 'type'");
              }
              svc.submit(req.path_params.at("id"), body.at("type").get<std::string>(),
                         body.value("payload", json::object()));
              send_json(res, svc.state_view(req.path_params.at("id")));
            }));

  http.Get("/sessions/:id/state", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             send_json(res, svc.state_view(req.path_params.at("id")));
           }));

  http.Get("/sessions/:id/log", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             send_json(res, svc.log(req.path_params.at("id")));
           }));

  http.Get("/sessions/:id/events", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             send_json(res, svc.events(req.path_params.at("id")));
           }));

  http.Get("/sessions/:id/distraction", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             json problems = json::array();
             for (const auto& p : svc.distraction_problems(req.path_params.at("id"))) problems.push_back(p);
             send_json(res, {{"duration_ms", kDistractionMillis}, {"problems", problems}});
           }));

  http.Post("/sessions/:id/gaze", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              const auto n = svc.upload_gaze(req.path_params.at("id"), req.body);
              send_json(res, {{"samples", n}});
            }));
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  int bound = -1;
  if (port == 0) {
    bound = impl_->http.bind_to_any_port(host);
  } else if (impl_->http.bind_to_port(host, port)) {
    bound = port;
  }
  if (bound <= 0) fail(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void ApiServer::run() { impl_->http.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_) impl_->http.stop();
}

void ApiServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace genread
