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

// Provider-agnostic completion client. Fans a probe set out over a bounded
// worker pool, respects a shared per-provider rate limit, retries transient
// failures and records full call metadata for every attempt.
#pragma once

#include <chrono>
#include <cstddef>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmp2/errors.h"
#include "lmp2/probe_builder.h"
#include "lmp2/rate_limiter.h"
#include "lmp2/util.h"

namespace lmp2 {

inline constexpr const char* kApiKeyEnvVar = "LMP2_API_KEY";

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;

  friend bool operator==(const TokenLogprob&, const TokenLogprob&) = default;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};
};

struct ProviderConfig {
  std::string base_url;
  std::string model_id;
  // Name of the environment variable holding the bearer token.
  std::string api_key_env = kApiKeyEnvVar;
  std::size_t max_parallelism = 4;
  std::size_t requests_per_minute = 60;
  RetryPolicy retry;
  double temperature = 1.0;
  std::chrono::milliseconds timeout{30000};
  bool request_logprobs = true;
};

// Throws InvalidConfig.
void validate(const ProviderConfig& config);

struct Completion {
  std::string probe_id;
  std::string property_id;
  SubjectMode subject_mode = SubjectMode::kNamed;
  std::string raw_text;
  std::string normalized_candidate;
  bool verbose = false;
  std::optional<std::vector<TokenLogprob>> token_logprobs;
  std::optional<double> mean_nll;
  std::string model_id;
  std::string model_version;
  TimePoint timestamp;
  double latency_ms = 0.0;
  int attempt_count = 1;

  friend bool operator==(const Completion&, const Completion&) = default;
};

struct FailureRecord {
  std::string probe_id;
  std::string property_id;
  SubjectMode subject_mode = SubjectMode::kNamed;
  std::string error_kind;
  std::string message;
  int last_status = 0;
  int attempt_count = 0;
  TimePoint timestamp;

  friend bool operator==(const FailureRecord&, const FailureRecord&) = default;
};

// One provider call. Timestamps share the limiter's time base.
struct AttemptRecord {
  std::string probe_id;
  int attempt = 1;
  TimePoint started_at;
  TimePoint finished_at;
  int status = 0;
};

struct RunResult {
  std::vector<Completion> completions;
  std::vector<FailureRecord> failures;
  std::vector<AttemptRecord> attempts;

  std::size_t call_count() const {
    return completions.size() + failures.size();
  }
  bool partial() const { return !failures.empty(); }
};

// -(mean token log-probability); nullopt for an empty list.
std::optional<double> mean_nll(const std::vector<TokenLogprob>& logprobs);

// Builds a Completion from a provider answer, filling the normalized
// candidate and mean NLL.
Completion make_completion(const ProbeSpec& probe, std::string raw_text,
                           std::optional<std::vector<TokenLogprob>> logprobs,
                           std::string model_id, std::string model_version);

nlohmann::json completion_to_json(const Completion& c);
Completion completion_from_json(const nlohmann::json& j);
nlohmann::json failure_to_json(const FailureRecord& f);
FailureRecord failure_from_json(const nlohmann::json& j);

class ProviderUnavailable : public Error {
 public:
  ProviderUnavailable(const std::string& message,
                      std::vector<FailureRecord> failures)
      : Error("ProviderUnavailable", message), failures_(std::move(failures)) {}

  const std::vector<FailureRecord>& failures() const { return failures_; }

 private:
  std::vector<FailureRecord> failures_;
};

class PartialFailure : public Error {
 public:
  explicit PartialFailure(RunResult result)
      : Error("PartialFailure",
              std::to_string(result.failures.size()) + " of " +
                  std::to_string(result.call_count()) + " probes failed"),
        result_(std::move(result)) {}

  const RunResult& result() const { return result_; }

 private:
  RunResult result_;
};

// Throws PartialFailure when any probe failed.
void require_complete(const RunResult& result);

struct RequestOptions {
  std::string model_id;
  double temperature = 1.0;
  bool want_logprobs = true;
  std::chrono::milliseconds timeout{30000};
};

struct BackendReply {
  // HTTP status; 0 for transport errors such as timeouts.
  int status = 0;
  std::string text;
  std::optional<std::vector<TokenLogprob>> logprobs;
  std::string model_version;
  std::string error;
  // Undecoded response body, kept for the raw call log.
  std::string raw_body;

  bool ok() const { return status >= 200 && status < 300; }
};

// A chat-completion provider. Implementations must be safe to call from
// several threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual BackendReply send(const ProbeSpec& probe,
                            const RequestOptions& options) = 0;
};

// Append-only JSON Lines record of every provider call, written before any
// aggregation happens so runs can be replayed from the raw trace.
class CallLog {
 public:
  explicit CallLog(const std::string& path);

  void append(const nlohmann::json& record);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::mutex mu_;
  std::ofstream out_;
};

class ModelGateway {
 public:
  // `limiter` may be shared by several gateways addressing one provider;
  // when null a limiter is built from `config.requests_per_minute`.
  ModelGateway(ProviderConfig config, std::shared_ptr<ChatBackend> backend,
               std::shared_ptr<RateLimiter> limiter = nullptr,
               std::shared_ptr<CallLog> call_log = nullptr);

  // One Completion or FailureRecord per probe. Throws AuthError on
  // rejected credentials and ProviderUnavailable when every probe failed.
  RunResult run(const std::vector<ProbeSpec>& probes) const;
  RunResult run_probe_set(const ProbeSet& set) const { return run(set.probes); }

  const ProviderConfig& config() const { return config_; }

 private:
  ProviderConfig config_;
  std::shared_ptr<ChatBackend> backend_;
  std::shared_ptr<RateLimiter> limiter_;
  std::shared_ptr<CallLog> call_log_;
};

}  // namespace lmp2
