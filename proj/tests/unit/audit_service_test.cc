// Copyright 2026 The lmp2 Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lmp2/audit_service.h"

#include <filesystem>
#include <fstream>
#include <latch>
#include <thread>

#include "gtest/gtest.h"
#include "httplib.h"
#include "lmp2/errors.h"
#include "lmp2/mock_model.h"
#include "test_support.h"

namespace lmp2 {
namespace {

using namespace std::chrono_literals;
using nlohmann::json;
using testing::RecordingBackend;
using testing::ScriptedBackend;
using testing::shipped_catalog;

ServiceConfig test_config(const std::string& data_dir = {}) {
  ServiceConfig c;
  c.provider.model_id = MockModel::kModelId;
  c.provider.requests_per_minute = 0;
  c.provider.retry.initial_backoff = 1ms;
  c.job_workers = 1;
  c.data_dir = data_dir;
  return c;
}

std::shared_ptr<MockModel> planted_mock() {
  MockModelConfig cfg;
  cfg.planted[{"Harry Potter", "spouse_name"}] = {"Ginny", 0.8};
  cfg.planted[{"Harry Potter", "eye_color"}] = {"green", 0.9};
  cfg.defaults["handedness"] = {"ambidextrous", 0.9};
  auto m = std::make_shared<MockModel>(cfg);
  m->use_formats_from(shipped_catalog());
  return m;
}

const std::string kThreeSelections = R"({
  "subject_name": "Harry Potter", "consent": true,
  "selections": [
    {"property_id": "spouse_name", "true_prefixes": ["Gi"]},
    {"property_id": "eye_color", "true_prefixes": ["gr"]},
    {"property_id": "handedness"}]})";

// Blocks every provider call until released.
class Gate {
 public:
  void release() {
    {
      std::lock_guard lock(mu_);
      open_ = true;
    }
    cv_.notify_all();
  }
  void wait() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return open_; });
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  bool open_ = false;
};

TEST(ServiceTest, FullLifecycle) {
  const auto dir = testing::scratch_dir("service");
  auto recorder = std::make_shared<RecordingBackend>(planted_mock());
  AuditService svc(shipped_catalog(), test_config(dir), recorder);

  const auto created = svc.create_job(kThreeSelections);
  ASSERT_EQ(created.status, 202) << created.body;
  const std::string id = created.json()["job_id"];
  ASSERT_TRUE(svc.wait_until_terminal(id, 30s));

  const auto job = svc.get_job(id).json();
  EXPECT_EQ(job["status"], "complete");
  ASSERT_EQ(job["cards"].size(), 3u);
  for (const auto& card : job["cards"]) {
    double sum = 0;
    for (const auto& p : card["top_predictions"]) sum += p["strength"].get<double>();
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(card["evidence_ref"], "pkg-" + id);
  }
  EXPECT_EQ(job["cards"][0]["top_predictions"][0]["candidate"], "ginny");
  EXPECT_EQ(job["cards"][2]["provenance_label"], "guessed");
  EXPECT_EQ(recorder->calls(), 630u);

  const auto fb = svc.submit_feedback(id, R"({"property_id": "spouse_name",
      "correctness": "correct", "privacy_violation": false, "emotions": ["neutral"]})");
  EXPECT_EQ(fb.status, 200) << fb.body;
  EXPECT_EQ(fb.json()["version"], 1);
  const auto again = svc.submit_feedback(id, R"({"property_id": "spouse_name",
      "correctness": "partially", "privacy_violation": true,
      "emotions": ["creeped_out", "worried"], "free_text": "hm"})");
  EXPECT_EQ(again.json()["version"], 2);
  EXPECT_EQ(svc.feedback_for(id).size(), 2u);

  const auto e1 = svc.export_evidence(id);
  const auto e2 = svc.export_evidence(id);
  ASSERT_EQ(e1.status, 200);
  EXPECT_EQ(e1.body, e2.body);
  const auto pkg = parse_package(e1.body);
  EXPECT_EQ(pkg.call_counts().total, 630u);
  EXPECT_EQ(pkg.cards().size(), 3u);

  // Prefixes are gone from the job record once sealed.
  EXPECT_TRUE(svc.retained_prefixes().empty());
  // Evidence and feedback were persisted.
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    (void)entry;
    ++files;
  }
  EXPECT_EQ(files, 2u);
}

TEST(ServiceTest, ValidationHappensBeforeAnyProbe) {
  auto recorder = std::make_shared<RecordingBackend>(planted_mock());
  AuditService svc(shipped_catalog(), test_config(), recorder);
  EXPECT_EQ(svc.create_job(R"({"subject_name": "A B", "consent": false,
      "selections": [{"property_id": "spouse_name"}]})").status, 400);
  EXPECT_EQ(svc.create_job(R"({"subject_name": "A B",
      "selections": [{"property_id": "spouse_name"}]})").status, 400);
  EXPECT_EQ(svc.create_job(R"({"subject_name": "  ", "consent": true,
      "selections": [{"property_id": "spouse_name"}]})").status, 400);
  const auto full = svc.create_job(R"({"subject_name": "A B", "consent": true,
      "selections": [{"property_id": "spouse_name", "true_prefixes": ["Ginny"]}]})");
  EXPECT_EQ(full.status, 400);
  EXPECT_EQ(full.body.find("Ginny"), std::string::npos);
  EXPECT_EQ(svc.create_job(R"({"subject_name": "A B", "consent": true,
      "selections": [{"property_id": "nope"}]})").status, 404);
  EXPECT_EQ(svc.create_job(R"({"subject_name": "A B", "consent": true,
      "selections": []})").status, 400);
  EXPECT_EQ(svc.create_job("not json").status, 400);
  std::this_thread::sleep_for(20ms);
  EXPECT_EQ(recorder->calls(), 0u);
  EXPECT_EQ(svc.health().json()["jobs"]["queued"], 0);
}

TEST(ServiceTest, QueuedAndRunningJobsRejectFeedbackAndExport) {
  auto gate = std::make_shared<Gate>();
  auto mock = planted_mock();
  auto backend = std::make_shared<ScriptedBackend>([gate, mock](const ProbeSpec& p, int) {
    gate->wait();
    return mock->send(p, {});
  });
  AuditService svc(shipped_catalog(), test_config(), backend);
  const std::string body = R"({"subject_name": "A B", "consent": true,
      "selections": [{"property_id": "eye_color", "true_prefixes": ["gr"]}]})";
  const std::string first = svc.create_job(body).json()["job_id"];
  const std::string second = svc.create_job(body).json()["job_id"];

  // One worker: the first job blocks in the provider, the second waits.
  for (int i = 0; i < 200 && svc.get_job(first).json()["status"] != "running"; ++i) {
    std::this_thread::sleep_for(5ms);
  }
  EXPECT_EQ(svc.get_job(first).json()["status"], "running");
  const auto queued = svc.get_job(second).json();
  EXPECT_EQ(queued["status"], "queued");
  EXPECT_FALSE(queued.contains("cards"));

  const std::string fb = R"({"property_id": "eye_color", "correctness": "correct",
      "privacy_violation": false, "emotions": ["neutral"]})";
  EXPECT_EQ(svc.submit_feedback(first, fb).status, 409);
  EXPECT_EQ(svc.export_evidence(first).status, 409);
  EXPECT_EQ(svc.export_evidence(second).status, 409);
  EXPECT_EQ(svc.get_job("job-missing").status, 404);
  EXPECT_EQ(svc.submit_feedback("job-missing", fb).status, 404);
  EXPECT_EQ(svc.export_evidence("job-missing").status, 404);

  gate->release();
  ASSERT_TRUE(svc.wait_until_terminal(second, 30s));
  EXPECT_EQ(svc.get_job(first).json()["status"], "complete");
}

TEST(ServiceTest, FeedbackVocabularyIsClosed) {
  AuditService svc(shipped_catalog(), test_config(), planted_mock());
  const std::string id = svc.create_job(kThreeSelections).json()["job_id"];
  ASSERT_TRUE(svc.wait_until_terminal(id, 30s));
  EXPECT_EQ(svc.submit_feedback(id, R"({"property_id": "spouse_name",
      "correctness": "correct", "privacy_violation": false,
      "emotions": ["furious"]})").status, 400);
  EXPECT_EQ(svc.submit_feedback(id, R"({"property_id": "spouse_name",
      "correctness": "maybe", "privacy_violation": false, "emotions": []})").status, 400);
  EXPECT_EQ(svc.submit_feedback(id, R"({"property_id": "spouse_name",
      "correctness": "unsure", "emotions": []})").status, 400);
  EXPECT_EQ(svc.submit_feedback(id, R"({"property_id": "blood_type",
      "correctness": "unsure", "privacy_violation": false, "emotions": []})").status,
            404);
  EXPECT_EQ(svc.submit_feedback(id, R"({"property_id": "spouse_name",
      "correctness": "unsure", "privacy_violation": false,
      "emotions": ["happy", "embarrassed", "angry"]})").status, 200);
}

TEST(ServiceTest, IdempotencyKeyReturnsSameJob) {
  AuditService svc(shipped_catalog(), test_config(), planted_mock());
  const auto a = svc.create_job(kThreeSelections, "key-1").json()["job_id"];
  const auto b = svc.create_job(kThreeSelections, "key-1").json()["job_id"];
  const auto c = svc.create_job(kThreeSelections, "key-2").json()["job_id"];
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(ServiceTest, ProviderOutageFailsJob) {
  auto backend = std::make_shared<ScriptedBackend>([](const ProbeSpec&, int) {
    BackendReply r;
    r.status = 503;
    return r;
  });
  AuditService svc(shipped_catalog(), test_config(), backend);
  const std::string id = svc.create_job(kThreeSelections).json()["job_id"];
  ASSERT_TRUE(svc.wait_until_terminal(id, 60s));
  const auto job = svc.get_job(id).json();
  EXPECT_EQ(job["status"], "failed");
  EXPECT_TRUE(job.contains("error"));
  EXPECT_EQ(svc.export_evidence(id).status, 409);
}

TEST(ServiceTest, CatalogAndHealth) {
  AuditService svc(shipped_catalog(), test_config(), planted_mock());
  const auto catalog = svc.get_catalog().json();
  EXPECT_EQ(catalog["properties"].size(), 50u);
  EXPECT_EQ(catalog["feedback_vocabulary"]["emotions"].size(), 6u);
  EXPECT_EQ(catalog["categories"]["HighSensitivity"].size(), 6u);
  EXPECT_EQ(svc.health().json()["status"], "ok");
}

TEST(ServiceConfigTest, FileAndEnvironment) {
  const auto cfg = load_service_config(R"({"port": 9001,
      "provider": {"model_id": "gpt-x", "base_url": "https://example.test/v1",
                   "max_parallelism": 2, "requests_per_minute": 30},
      "probes": {"paraphrases": 3, "counterfactuals": 10, "seed": 5},
      "aggregation": {"top_k": 4, "lambda": 0.5}})");
  EXPECT_EQ(cfg.port, 9001);
  EXPECT_EQ(cfg.provider.model_id, "gpt-x");
  EXPECT_EQ(cfg.provider.max_parallelism, 2u);
  EXPECT_EQ(cfg.probes.counterfactuals, 10u);
  EXPECT_EQ(cfg.aggregation.lambda, 0.5);
  auto env_cfg = cfg;
  ::setenv("LMP2_TOP_K", "3", 1);
  ::setenv("LMP2_RPM", "12", 1);
  apply_env_overrides(env_cfg);
  ::unsetenv("LMP2_TOP_K");
  ::unsetenv("LMP2_RPM");
  EXPECT_EQ(env_cfg.aggregation.top_k, 3u);
  EXPECT_EQ(env_cfg.provider.requests_per_minute, 12u);
  EXPECT_THROW(load_service_config("{"), ParseError);
  EXPECT_THROW(load_service_config(R"({"port": "x"})"), InvalidConfig);
}

TEST(ServerTest, HttpRoutes) {
  AuditService svc(shipped_catalog(), test_config(), planted_mock());
  AuditServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  server.start();
  httplib::Client client("127.0.0.1", port);

  auto health = client.Get("/api/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(client.Get("/api/catalog")->status, 200);

  httplib::Headers key{{"Idempotency-Key", "abc"}};
  auto created = client.Post("/api/jobs", key, kThreeSelections, "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 202);
  const std::string id = json::parse(created->body)["job_id"];
  auto repeat = client.Post("/api/jobs", key, kThreeSelections, "application/json");
  EXPECT_EQ(json::parse(repeat->body)["job_id"], id);

  EXPECT_EQ(client.Post("/api/jobs", R"({"consent": false})", "application/json")->status,
            400);
  ASSERT_TRUE(svc.wait_until_terminal(id, 30s));
  auto job = client.Get("/api/jobs/" + id);
  EXPECT_EQ(json::parse(job->body)["status"], "complete");
  auto fb = client.Post("/api/jobs/" + id + "/feedback",
                        R"({"property_id": "eye_color", "correctness": "incorrect",
                            "privacy_violation": true, "emotions": ["angry"]})",
                        "application/json");
  EXPECT_EQ(fb->status, 200);
  auto ev = client.Get("/api/jobs/" + id + "/evidence");
  EXPECT_EQ(ev->status, 200);
  EXPECT_NE(ev->get_header_value("Content-Disposition").find("evidence_" + id), std::string::npos);
  EXPECT_EQ(client.Get("/api/jobs/unknown")->status, 404);
  EXPECT_EQ(client.Get("/api/nothing")->status, 404);
  server.stop();
}

}  // namespace
}  // namespace lmp2
