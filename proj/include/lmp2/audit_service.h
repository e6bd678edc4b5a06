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

// Self-audit service: job submission with client-computed prefixes,
// asynchronous probing, Results Cards, feedback capture and evidence export.
//
// AuditService is transport-free; AuditServer binds it to HTTP/JSON routes.
// Full ground-truth values never reach this layer: prefixes longer than
// kMaxPrefixLength are rejected and accepted prefixes are dropped from the
// job record once its evidence is sealed.
#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "lmp2/aggregation.h"
#include "lmp2/catalog.h"
#include "lmp2/evidence.h"
#include "lmp2/mock_model.h"
#include "lmp2/model_gateway.h"
#include "lmp2/probe_builder.h"
#include "lmp2/util.h"

namespace httplib {
class Server;
}

namespace lmp2 {

enum class Correctness { kCorrect, kPartially, kIncorrect, kUnsure };
enum class Emotion { kNeutral, kCreepedOut, kWorried, kAngry, kHappy, kEmbarrassed };

std::string_view to_string(Correctness c);
std::string_view to_string(Emotion e);
// Throw ValidationError on values outside the closed vocabularies.
Correctness parse_correctness(std::string_view s);
Emotion parse_emotion(std::string_view s);

struct Selection {
  std::string property_id;
  std::vector<std::string> true_prefixes;
};

struct Feedback {
  std::string job_id;
  std::string property_id;
  Correctness correctness = Correctness::kUnsure;
  bool privacy_violation = false;
  std::set<Emotion> emotions;
  std::string free_text;
  // 1 for the first submission on a card, then increasing.
  std::size_t version = 0;
  TimePoint received_at;
};

nlohmann::json feedback_to_json(const Feedback& f);

struct ServiceConfig {
  std::string catalog_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  ProviderConfig provider;
  ProbeConfig probes;
  AggregationConfig aggregation;
  // Jobs probed concurrently; the rate limiter is shared by all of them.
  std::size_t job_workers = 2;
  // When set, sealed packages and feedback are also written here.
  std::string data_dir;
  std::string call_log_path;
  std::optional<MockModelConfig> mock;
  std::size_t max_prefixes_per_selection = 10;
};

// Reads the JSON config document. Missing keys keep their defaults.
// Throws ParseError / InvalidConfig.
ServiceConfig load_service_config(std::string_view document);
ServiceConfig load_service_config_file(const std::string& path);
// LMP2_MODEL, LMP2_BASE_URL, LMP2_MAX_PARALLELISM, LMP2_RPM, LMP2_TOP_K,
// LMP2_LAMBDA, LMP2_PARAPHRASES, LMP2_COUNTERFACTUALS, LMP2_SEED, LMP2_PORT.
void apply_env_overrides(ServiceConfig& config);

struct ApiResponse {
  int status = 200;
  std::string body;
  std::map<std::string, std::string> headers;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

class AuditService {
 public:
  // Starts the job workers. `backend` answers every probe.
  AuditService(Catalog catalog, ServiceConfig config,
               std::shared_ptr<ChatBackend> backend);
  ~AuditService();

  AuditService(const AuditService&) = delete;
  AuditService& operator=(const AuditService&) = delete;

  ApiResponse get_catalog() const;
  // 202 with the job id; 400 / 404 on invalid requests. A repeated
  // idempotency key returns the original job id.
  ApiResponse create_job(std::string_view body,
                         const std::string& idempotency_key = {});
  ApiResponse get_job(const std::string& job_id) const;
  ApiResponse submit_feedback(const std::string& job_id, std::string_view body);
  ApiResponse export_evidence(const std::string& job_id) const;
  ApiResponse health() const;

  // Blocks until the job is terminal or the timeout expires.
  bool wait_until_terminal(const std::string& job_id,
                           std::chrono::milliseconds timeout) const;

  // Copies of the feedback recorded for a job, in arrival order.
  std::vector<Feedback> feedback_for(const std::string& job_id) const;

  // Every prefix still held in memory, for privacy scans.
  std::vector<std::string> retained_prefixes() const;

  const Catalog& catalog() const { return catalog_; }
  const ServiceConfig& config() const { return config_; }

  void shutdown();

 private:
  struct Job {
    std::string job_id;
    std::string subject_name;
    TimePoint consent_at;
    std::vector<Selection> selections;
    JobStatus status = JobStatus::kQueued;
    std::vector<ResultsCard> cards;
    std::string error;
    TimePoint created_at;
    TimePoint updated_at;
    std::vector<Feedback> feedback;
  };

  void worker_loop(std::stop_token stop);
  void run_job(const std::string& job_id);
  void finish_job(const std::string& job_id, JobTrace trace,
                  const std::string& error);
  nlohmann::json job_json(const Job& job) const;
  std::string new_job_id();

  Catalog catalog_;
  ServiceConfig config_;
  ModelGateway gateway_;
  EvidenceStore evidence_;

  mutable std::mutex mu_;
  mutable std::condition_variable_any changed_;
  std::map<std::string, Job> jobs_;
  std::map<std::string, std::string> idempotency_;
  std::deque<std::string> queue_;
  std::uint64_t id_state_;
  std::mutex feedback_file_mu_;
  std::vector<std::jthread> workers_;
};

// HTTP/JSON binding of AuditService.
class AuditServer {
 public:
  explicit AuditServer(AuditService& service);
  ~AuditServer();

  // Binds to host:port (port 0 picks a free port) and returns the bound
  // port, or -1.
  int bind(const std::string& host, int port);
  // Serves until stop(). Blocking.
  void listen();
  void start();  // listen() on a background thread
  void stop();

 private:
  AuditService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

// Builds the backend named by config.provider.model_id: the mock model for
// "mock", the HTTP provider otherwise.
std::shared_ptr<ChatBackend> make_backend(const ServiceConfig& config,
                                          const Catalog& catalog);

}  // namespace lmp2
