#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "fixtures.hpp"
#include "genread/errors.hpp"
#include "genread/server.hpp"

using namespace genread;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::vector<Bundle>& bundles() {
  static const auto b = fixtures::four_bundles();
  return b;
}

struct ServerTest : ::testing::Test {
  fs::path root = fixtures::temp_dir("server");
  SessionStore store{root};
  fixtures::StepClock clock;
  ExperimentService svc{bundles(), store, clock.fn()};
  ApiServer server{svc};
  int port = server.bind("127.0.0.1", 0);
  std::thread worker{[this] { server.run(); }};
  httplib::Client client{"127.0.0.1", port};

  ServerTest() { server.wait_until_ready(); }
  ~ServerTest() override {
    server.stop();
    worker.join();
    fs::remove_all(root);
  }

  json post_event(const std::string& id, const std::string& type, const json& payload, int expect = 200) {
    const auto r = client.Post("/sessions/" + id + "/events", json{{"type", type}, {"payload", payload}}.dump(),
                               "application/json");
    EXPECT_TRUE(r);
    if (!r) return {};
    EXPECT_EQ(r->status, expect) << r->body;
    return json::parse(r->body);
  }
};

}  // namespace

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status_for(ErrorCode::UnknownSession), 404);
  EXPECT_EQ(http_status_for(ErrorCode::ReferenceNotFound), 404);
  EXPECT_EQ(http_status_for(ErrorCode::IllegalTransition), 409);
  EXPECT_EQ(http_status_for(ErrorCode::ValidationFailed), 400);
  EXPECT_EQ(http_status_for(ErrorCode::MalformedInput), 400);
  EXPECT_EQ(http_status_for(ErrorCode::AnswerCountMismatch), 400);
  EXPECT_EQ(http_status_for(ErrorCode::StorageFailure), 500);
}

TEST_F(ServerTest, HealthAndBundles) {
  auto r = client.Get("/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["bundles"], 4);

  r = client.Get("/bundles");
  ASSERT_TRUE(r);
  EXPECT_EQ(json::parse(r->body)["bundles"].size(), 4u);

  const auto& b = svc.bundles()[0];
  r = client.Get("/bundles/" + b.bundle_id + "/condition/C4");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200);
  const auto c4 = json::parse(r->body);
  ASSERT_EQ(c4["summary_images"].size(), 5u);

  r = client.Get(c4["summary_images"][0]["url"].get<std::string>());
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "image/x-portable-pixmap");
  EXPECT_EQ(r->body.substr(0, 2), "P6");

  r = client.Get("/bundles/" + b.bundle_id + "/questions");
  ASSERT_TRUE(r);
  EXPECT_EQ(json::parse(r->body)["questions"].size(), 10u);
}

TEST_F(ServerTest, ErrorsCarryStatusAndCode) {
  auto r = client.Get("/bundles/nope/questions");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(json::parse(r->body)["error"], "ReferenceNotFound");

  r = client.Get("/bundles/" + svc.bundles()[0].bundle_id + "/condition/C9");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);

  r = client.Get("/sessions/s-000000000000/state");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);

  r = client.Post("/sessions", "", "application/json");
  ASSERT_TRUE(r);
  const auto id = json::parse(r->body)["session_id"].get<std::string>();
  r = client.Post("/sessions/" + id + "/events", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  post_event(id, "calibration_done", json::object(), 409);
}

TEST_F(ServerTest, WalkThroughReadingAndDistraction) {
  auto r = client.Post("/sessions", "", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 201);
  const auto created = json::parse(r->body);
  EXPECT_EQ(created["groups"].size(), 6u);
  const auto id = created["session_id"].get<std::string>();

  post_event(id, "consent_given", json::object());
  post_event(id, "pre_survey_submitted", {{"answers", fixtures::answers(10)}});
  post_event(id, "calibration_done", json::object());
  const auto view = post_event(id, "group_selected", {{"group_id", 3}});
  EXPECT_EQ(view["phase"], "reading(1)");
  const auto limit = view["slots"][0]["time_limit_s"].get<std::int64_t>();
  EXPECT_EQ(view["remaining_ms"], limit * 1000);
  EXPECT_EQ(view["content"]["condition"], "C1");

  r = client.Get(view["content"]["condition_url"].get<std::string>());
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);

  r = client.Get("/sessions/" + id + "/distraction");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 409);

  clock.advance(limit * 1000);
  r = client.Get("/sessions/" + id + "/state");
  ASSERT_TRUE(r);
  EXPECT_EQ(json::parse(r->body)["phase"], "distraction(1)");
  r = client.Get("/sessions/" + id + "/distraction");
  ASSERT_TRUE(r);
  const auto d = json::parse(r->body);
  EXPECT_EQ(d["problems"].size(), 40u);
  EXPECT_EQ(d["duration_ms"], 60000);
  EXPECT_FALSE(d["problems"][0].contains("expected"));

  r = client.Get("/sessions/" + id + "/events");
  ASSERT_TRUE(r);
  const auto ev = json::parse(r->body);
  EXPECT_EQ(ev.back()["type"], "timer_expired");

  r = client.Get("/sessions/" + id + "/log");
  ASSERT_TRUE(r);
  EXPECT_EQ(json::parse(r->body)["group_number"], 3);
}

TEST_F(ServerTest, GazeUpload) {
  auto r = client.Post("/sessions", "", "application/json");
  const auto id = json::parse(r->body)["session_id"].get<std::string>();
  r = client.Post("/sessions/" + id + "/gaze", "t_ms,x_px,y_px,valid\n0,1,2,1\n", "text/csv");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["samples"], 1);
  r = client.Post("/sessions/" + id + "/gaze", "t_ms,x_px,y_px,valid\n0,1\n", "text/csv");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  EXPECT_NE(json::parse(r->body)["message"].get<std::string>().find("line 2"), std::string::npos);
}
