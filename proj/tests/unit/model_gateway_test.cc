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

#include "lmp2/model_gateway.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "gtest/gtest.h"
#include "httplib.h"
#include "lmp2/errors.h"
#include "lmp2/http_backend.h"
#include "lmp2/mock_model.h"
#include "lmp2/rate_limiter.h"
#include "test_support.h"

namespace lmp2 {
namespace {

using namespace std::chrono_literals;
using testing::ScriptedBackend;
using testing::shipped_catalog;

ProviderConfig fast_config(std::size_t parallelism = 4) {
  ProviderConfig c;
  c.model_id = "test-model";
  c.max_parallelism = parallelism;
  c.requests_per_minute = 0;
  c.retry.initial_backoff = 1ms;
  c.retry.max_backoff = 5ms;
  return c;
}

ProbeSet spouse_set(std::size_t p = 5, std::size_t c = 20) {
  return build_probe_set(shipped_catalog().at("spouse_name"), "Harry Potter",
                         {"Gi"}, {p, c, 1});
}

BackendReply ok_reply(const std::string& text) {
  BackendReply r;
  r.status = 200;
  r.text = text;
  r.model_version = "v1";
  return r;
}

BackendReply status_reply(int status) {
  BackendReply r;
  r.status = status;
  r.error = "HTTP " + std::to_string(status);
  return r;
}

TEST(GatewayTest, MockRunIsOneToOne) {
  auto mock = std::make_shared<MockModel>(MockModelConfig{});
  mock->use_formats_from(shipped_catalog());
  ModelGateway gw(fast_config(), mock);
  const auto set = spouse_set();
  const auto r = gw.run_probe_set(set);
  EXPECT_EQ(r.completions.size(), 210u);
  EXPECT_EQ(r.call_count(), 210u);
  EXPECT_EQ(r.attempts.size(), 210u);
  EXPECT_FALSE(r.partial());
  for (std::size_t i = 0; i < set.probes.size(); ++i) {
    EXPECT_EQ(r.completions[i].probe_id, set.probes[i].probe_id);
  }
  EXPECT_NO_THROW(require_complete(r));
}

TEST(GatewayTest, RetriesThrottlingThenSucceeds) {
  std::atomic<int> seen{0};
  auto backend = std::make_shared<ScriptedBackend>([&](const ProbeSpec&, int) {
    return ++seen <= 2 ? status_reply(429) : ok_reply("Ginny");
  });
  ModelGateway gw(fast_config(1), backend);
  const auto set = spouse_set(1, 0);
  const auto r = gw.run({set.probes[0]});
  ASSERT_EQ(r.completions.size(), 1u);
  EXPECT_EQ(r.completions[0].attempt_count, 3);
  EXPECT_EQ(r.completions[0].normalized_candidate, "ginny");
  EXPECT_EQ(r.attempts.size(), 3u);
}

TEST(GatewayTest, ExhaustedRetriesOnEveryProbeIsUnavailable) {
  auto backend = std::make_shared<ScriptedBackend>(
      [](const ProbeSpec&, int) { return status_reply(503); });
  ModelGateway gw(fast_config(), backend);
  const auto set = spouse_set(1, 3);
  try {
    gw.run(set.probes);
    FAIL() << "expected ProviderUnavailable";
  } catch (const ProviderUnavailable& e) {
    ASSERT_EQ(e.failures().size(), set.probes.size());
    for (const auto& f : e.failures()) {
      EXPECT_EQ(f.attempt_count, 3);
      EXPECT_EQ(f.last_status, 503);
      EXPECT_EQ(f.error_kind, "RetriesExhausted");
    }
  }
  EXPECT_EQ(backend->calls(), static_cast<int>(3 * set.probes.size()));
}

TEST(GatewayTest, PartialFailuresAreReported) {
  auto backend = std::make_shared<ScriptedBackend>([](const ProbeSpec& p, int) {
    return p.probe_id.ends_with(":c0") ? status_reply(400) : ok_reply("x");
  });
  ModelGateway gw(fast_config(), backend);
  const auto set = spouse_set(2, 3);
  const auto r = gw.run(set.probes);
  EXPECT_EQ(r.failures.size(), 4u);  // 2 paraphrases x 2 arms
  EXPECT_EQ(r.call_count(), set.probes.size());
  EXPECT_TRUE(r.partial());
  for (const auto& f : r.failures) EXPECT_EQ(f.attempt_count, 1);  // 400 not retried
  EXPECT_THROW(require_complete(r), PartialFailure);
}

TEST(GatewayTest, AuthFailureAborts) {
  auto backend = std::make_shared<ScriptedBackend>(
      [](const ProbeSpec&, int) { return status_reply(401); });
  ModelGateway gw(fast_config(), backend);
  EXPECT_THROW(gw.run(spouse_set(1, 3).probes), AuthError);
}

TEST(GatewayTest, ParallelismIsBounded) {
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  auto backend = std::make_shared<ScriptedBackend>([&](const ProbeSpec&, int) {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(2ms);
    --in_flight;
    return ok_reply("x");
  });
  ModelGateway gw(fast_config(3), backend);
  gw.run(spouse_set(2, 10).probes);
  EXPECT_LE(peak.load(), 3);
  EXPECT_GE(peak.load(), 1);
}

TEST(GatewayTest, RateLimitHoldsOverRecordedAttempts) {
  auto backend = std::make_shared<ScriptedBackend>(
      [](const ProbeSpec&, int) { return ok_reply("x"); });
  constexpr std::size_t kMax = 5;
  constexpr auto kWindow = 100ms;
  auto limiter = std::make_shared<RateLimiter>(kMax, kWindow);
  ModelGateway gw(fast_config(4), backend, limiter);
  const auto r = gw.run(spouse_set(1, 19).probes);  // 40 probes
  ASSERT_EQ(r.attempts.size(), 40u);
  for (std::size_t i = 0; i + kMax < r.attempts.size(); ++i) {
    // Any kMax + 1 consecutive starts must span at least one window.
    EXPECT_GE(r.attempts[i + kMax].started_at - r.attempts[i].started_at,
              kWindow)
        << "window starting at attempt " << i;
  }
}

TEST(GatewayTest, CallLogRecordsEveryAttempt) {
  const auto dir = testing::scratch_dir("calllog");
  auto log = std::make_shared<CallLog>(dir + "/calls.jsonl");
  std::atomic<int> seen{0};
  auto backend = std::make_shared<ScriptedBackend>([&](const ProbeSpec&, int) {
    return ++seen == 1 ? status_reply(500) : ok_reply("x");
  });
  ModelGateway gw(fast_config(1), backend, nullptr, log);
  gw.run(spouse_set(1, 1).probes);
  std::ifstream in(dir + "/calls.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("request"));
    EXPECT_TRUE(j.contains("started_at"));
    ++lines;
  }
  EXPECT_EQ(lines, 5);  // four probes, one retried
}

TEST(MeanNllTest, AveragesNegatedLogprobs) {
  EXPECT_EQ(mean_nll({}), std::nullopt);
  EXPECT_DOUBLE_EQ(*mean_nll({{"a", -1.0}, {"b", -3.0}}), 2.0);
}

TEST(CompletionJsonTest, RoundTrip) {
  const auto probe = spouse_set(1, 0).probes[0];
  Completion c = make_completion(probe, " Ginny.", std::vector<TokenLogprob>{{"G", -0.5}},
                                 "m", "v");
  c.timestamp = parse_utc("2026-01-02T03:04:05.006Z");
  EXPECT_EQ(completion_from_json(completion_to_json(c)), c);
}

// Local OpenAI-compatible endpoint.
class FakeProvider {
 public:
  FakeProvider() {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   last_auth_ = req.get_header_value("Authorization");
                   last_body_ = req.body;
                   const int n = ++calls_;
                   if (n <= throttle_) {
                     res.status = 429;
                     res.set_content("{\"error\":\"slow down\"}", "application/json");
                     return;
                   }
                   if (garbage_) {
                     res.set_content("not json", "text/plain");
                     return;
                   }
                   res.set_content(R"({"model": "fake-2026-10",
                     "choices": [{"message": {"role": "assistant", "content": "Ginny."},
                       "logprobs": {"content": [{"token": "Ginny", "logprob": -0.25},
                                                {"token": ".", "logprob": -0.75}]}}]})",
                                   "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeProvider() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1";
  }

  int throttle_ = 0;
  bool garbage_ = false;
  std::atomic<int> calls_{0};
  std::string last_auth_;
  std::string last_body_;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

TEST(HttpBackendTest, ThrottledTwiceThenSucceeds) {
  FakeProvider provider;
  provider.throttle_ = 2;
  ::setenv("LMP2_TEST_KEY", "sk-test", 1);
  ProviderConfig cfg = fast_config(1);
  cfg.base_url = provider.base_url();
  cfg.api_key_env = "LMP2_TEST_KEY";
  ModelGateway gw(cfg, std::make_shared<HttpChatBackend>(cfg));
  const auto r = gw.run({spouse_set(1, 0).probes[0]});
  ASSERT_EQ(r.completions.size(), 1u);
  const auto& c = r.completions[0];
  EXPECT_EQ(c.attempt_count, 3);
  EXPECT_EQ(c.normalized_candidate, "ginny");
  EXPECT_EQ(c.model_version, "fake-2026-10");
  ASSERT_TRUE(c.mean_nll.has_value());
  EXPECT_DOUBLE_EQ(*c.mean_nll, 0.5);
  EXPECT_EQ(provider.last_auth_, "Bearer sk-test");
  const auto body = nlohmann::json::parse(provider.last_body_);
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["messages"][0]["content"], spouse_set(1, 0).probes[0].prompt_text);
}

TEST(HttpBackendTest, MalformedBodyIsRetriedThenFails) {
  FakeProvider provider;
  provider.garbage_ = true;
  ProviderConfig cfg = fast_config(1);
  cfg.base_url = provider.base_url();
  ModelGateway gw(cfg, std::make_shared<HttpChatBackend>(cfg));
  EXPECT_THROW(gw.run({spouse_set(1, 0).probes[0]}), ProviderUnavailable);
  EXPECT_EQ(provider.calls_.load(), 3);
}

TEST(HttpBackendTest, UnreachableProviderIsTransportError) {
  ProviderConfig cfg = fast_config(1);
  cfg.base_url = "http://127.0.0.1:1/v1";
  cfg.timeout = 200ms;
  cfg.retry.max_attempts = 2;
  ModelGateway gw(cfg, std::make_shared<HttpChatBackend>(cfg));
  try {
    gw.run({spouse_set(1, 0).probes[0]});
    FAIL();
  } catch (const ProviderUnavailable& e) {
    ASSERT_EQ(e.failures().size(), 1u);
    EXPECT_EQ(e.failures()[0].last_status, 0);
  }
}

TEST(HttpBackendTest, RejectsUrlWithoutScheme) {
  ProviderConfig cfg = fast_config(1);
  cfg.base_url = "localhost:8080";
  EXPECT_THROW(HttpChatBackend{cfg}, InvalidConfig);
}

}  // namespace
}  // namespace lmp2
