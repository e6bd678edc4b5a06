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
#include <cmath>
#include <thread>

#include "lmp2/normalize.h"

namespace lmp2 {

using nlohmann::json;

namespace {

bool is_auth_failure(int status) { return status == 401 || status == 403; }

bool is_retryable(int status) {
  return status == 0 || status == 408 || status == 429 || status >= 500;
}

std::chrono::milliseconds backoff_for(const RetryPolicy& policy, int attempt) {
  const double scaled =
      static_cast<double>(policy.initial_backoff.count()) *
      std::pow(policy.backoff_multiplier, static_cast<double>(attempt - 1));
  const double capped =
      std::min(scaled, static_cast<double>(policy.max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(capped));
}

json logprobs_to_json(const std::optional<std::vector<TokenLogprob>>& lp) {
  if (!lp) return nullptr;
  json arr = json::array();
  for (const auto& t : *lp) arr.push_back({{"token", t.token}, {"logprob", t.logprob}});
  return arr;
}

}  // namespace

void validate(const ProviderConfig& config) {
  if (config.max_parallelism < 1) {
    throw InvalidConfig("max_parallelism must be at least 1");
  }
  if (config.retry.max_attempts < 1) {
    throw InvalidConfig("retry max_attempts must be at least 1");
  }
  if (config.model_id.empty()) throw InvalidConfig("model_id is empty");
}

std::optional<double> mean_nll(const std::vector<TokenLogprob>& logprobs) {
  if (logprobs.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& t : logprobs) sum += t.logprob;
  return std::max(0.0, -sum / static_cast<double>(logprobs.size()));
}

Completion make_completion(const ProbeSpec& probe, std::string raw_text,
                           std::optional<std::vector<TokenLogprob>> logprobs,
                           std::string model_id, std::string model_version) {
  Completion c;
  c.probe_id = probe.probe_id;
  c.property_id = probe.property_id;
  c.subject_mode = probe.subject_mode;
  const auto normalized = analyze_candidate(raw_text);
  c.raw_text = std::move(raw_text);
  c.normalized_candidate = normalized.text;
  c.verbose = normalized.verbose;
  if (logprobs && !logprobs->empty()) {
    c.mean_nll = mean_nll(*logprobs);
    c.token_logprobs = std::move(logprobs);
  }
  c.model_id = std::move(model_id);
  c.model_version = std::move(model_version);
  c.timestamp = Clock::now();
  return c;
}

json completion_to_json(const Completion& c) {
  return json{
      {"probe_id", c.probe_id},
      {"property_id", c.property_id},
      {"subject_mode", to_string(c.subject_mode)},
      {"raw_text", c.raw_text},
      {"normalized_candidate", c.normalized_candidate},
      {"verbose", c.verbose},
      {"token_logprobs", logprobs_to_json(c.token_logprobs)},
      {"mean_nll", c.mean_nll ? json(*c.mean_nll) : json(nullptr)},
      {"model_id", c.model_id},
      {"model_version", c.model_version},
      {"timestamp", format_utc(c.timestamp)},
      {"latency_ms", c.latency_ms},
      {"attempt_count", c.attempt_count},
  };
}

Completion completion_from_json(const json& j) {
  Completion c;
  c.probe_id = j.at("probe_id").get<std::string>();
  c.property_id = j.at("property_id").get<std::string>();
  c.subject_mode = parse_subject_mode(j.at("subject_mode").get<std::string>());
  c.raw_text = j.at("raw_text").get<std::string>();
  c.normalized_candidate = j.at("normalized_candidate").get<std::string>();
  c.verbose = j.at("verbose").get<bool>();
  if (const auto& lp = j.at("token_logprobs"); !lp.is_null()) {
    std::vector<TokenLogprob> tokens;
    for (const auto& t : lp) {
      tokens.push_back({t.at("token").get<std::string>(),
                        t.at("logprob").get<double>()});
    }
    c.token_logprobs = std::move(tokens);
  }
  if (const auto& nll = j.at("mean_nll"); !nll.is_null()) {
    c.mean_nll = nll.get<double>();
  }
  c.model_id = j.at("model_id").get<std::string>();
  c.model_version = j.at("model_version").get<std::string>();
  c.timestamp = parse_utc(j.at("timestamp").get<std::string>());
  c.latency_ms = j.at("latency_ms").get<double>();
  c.attempt_count = j.at("attempt_count").get<int>();
  return c;
}

json failure_to_json(const FailureRecord& f) {
  return json{
      {"probe_id", f.probe_id},
      {"property_id", f.property_id},
      {"subject_mode", to_string(f.subject_mode)},
      {"error_kind", f.error_kind},
      {"message", f.message},
      {"last_status", f.last_status},
      {"attempt_count", f.attempt_count},
      {"timestamp", format_utc(f.timestamp)},
  };
}

FailureRecord failure_from_json(const json& j) {
  FailureRecord f;
  f.probe_id = j.at("probe_id").get<std::string>();
  f.property_id = j.at("property_id").get<std::string>();
  f.subject_mode = parse_subject_mode(j.at("subject_mode").get<std::string>());
  f.error_kind = j.at("error_kind").get<std::string>();
  f.message = j.at("message").get<std::string>();
  f.last_status = j.at("last_status").get<int>();
  f.attempt_count = j.at("attempt_count").get<int>();
  f.timestamp = parse_utc(j.at("timestamp").get<std::string>());
  return f;
}

void require_complete(const RunResult& result) {
  if (result.partial()) throw PartialFailure(result);
}

CallLog::CallLog(const std::string& path)
    : path_(path), out_(path, std::ios::app) {
  if (!out_) throw IOError("cannot open call log " + path);
}

void CallLog::append(const json& record) {
  std::lock_guard lock(mu_);
  out_ << record.dump() << '\n';
  out_.flush();
}

ModelGateway::ModelGateway(ProviderConfig config,
                           std::shared_ptr<ChatBackend> backend,
                           std::shared_ptr<RateLimiter> limiter,
                           std::shared_ptr<CallLog> call_log)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      limiter_(std::move(limiter)),
      call_log_(std::move(call_log)) {
  validate(config_);
  if (!backend_) throw InvalidConfig("no chat backend");
  if (!limiter_) {
    limiter_ = std::make_shared<RateLimiter>(config_.requests_per_minute);
  }
}

RunResult ModelGateway::run(const std::vector<ProbeSpec>& probes) const {
  if (probes.empty()) throw InvalidConfig("empty probe list");

  const RequestOptions options{config_.model_id, config_.temperature,
                               config_.request_logprobs, config_.timeout};
  // Attempt timestamps are taken on the limiter's steady clock and mapped to
  // wall time through one fixed origin.
  const auto steady_origin = RateLimiter::SteadyClock::now();
  const auto wall_origin = Clock::now();
  auto to_wall = [&](RateLimiter::SteadyClock::time_point t) {
    return wall_origin +
           std::chrono::duration_cast<Clock::duration>(t - steady_origin);
  };

  std::vector<std::optional<Completion>> done(probes.size());
  std::vector<std::optional<FailureRecord>> failed(probes.size());
  std::vector<AttemptRecord> attempts;
  std::mutex attempts_mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> auth_rejected{false};
  std::string auth_message;

  auto worker = [&] {
    for (;;) {
      if (auth_rejected.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= probes.size()) return;
      const ProbeSpec& probe = probes[i];
      for (int attempt = 1;; ++attempt) {
        const auto start = limiter_->acquire();
        BackendReply reply;
        try {
          reply = backend_->send(probe, options);
        } catch (const std::exception& e) {
          reply.status = 0;
          reply.error = e.what();
        }
        const auto end = RateLimiter::SteadyClock::now();
        {
          std::lock_guard lock(attempts_mu);
          attempts.push_back(
              {probe.probe_id, attempt, to_wall(start), to_wall(end), reply.status});
        }
        if (call_log_) {
          call_log_->append(json{
              {"probe_id", probe.probe_id},
              {"attempt", attempt},
              {"request",
               {{"model", options.model_id},
                {"prompt", probe.prompt_text},
                {"temperature", options.temperature}}},
              {"response",
               {{"status", reply.status},
                {"text", reply.text},
                {"error", reply.error},
                {"model_version", reply.model_version},
                {"logprobs", logprobs_to_json(reply.logprobs)}}},
              {"started_at", format_utc(to_wall(start))},
              {"finished_at", format_utc(to_wall(end))},
          });
        }
        if (reply.ok()) {
          Completion c = make_completion(probe, reply.text, reply.logprobs,
                                         config_.model_id, reply.model_version);
          c.timestamp = to_wall(end);
          c.latency_ms =
              std::chrono::duration<double, std::milli>(end - start).count();
          c.attempt_count = attempt;
          done[i] = std::move(c);
          break;
        }
        if (is_auth_failure(reply.status)) {
          std::lock_guard lock(attempts_mu);
          if (!auth_rejected.exchange(true)) auth_message = reply.error;
          failed[i] = FailureRecord{probe.probe_id, probe.property_id,
                                    probe.subject_mode, "AuthError", reply.error,
                                    reply.status, attempt, to_wall(end)};
          return;
        }
        if (!is_retryable(reply.status) ||
            attempt >= config_.retry.max_attempts) {
          failed[i] = FailureRecord{
              probe.probe_id, probe.property_id, probe.subject_mode,
              is_retryable(reply.status) ? "RetriesExhausted" : "ProviderError",
              reply.error, reply.status, attempt, to_wall(end)};
          break;
        }
        std::this_thread::sleep_for(backoff_for(config_.retry, attempt));
      }
    }
  };

  {
    const std::size_t n = std::min(config_.max_parallelism, probes.size());
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }

  if (auth_rejected.load()) {
    throw AuthError("provider rejected credentials: " + auth_message);
  }

  RunResult result;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (done[i]) result.completions.push_back(std::move(*done[i]));
    if (failed[i]) result.failures.push_back(std::move(*failed[i]));
  }
  result.attempts = std::move(attempts);
  std::sort(result.attempts.begin(), result.attempts.end(),
            [](const AttemptRecord& a, const AttemptRecord& b) {
              return a.started_at < b.started_at;
            });
  if (result.completions.empty()) {
    throw ProviderUnavailable(
        "all " + std::to_string(probes.size()) + " probes failed",
        std::move(result.failures));
  }
  return result;
}

}  // namespace lmp2
