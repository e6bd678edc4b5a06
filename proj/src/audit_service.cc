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

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "httplib.h"
#include "lmp2/errors.h"
#include "lmp2/http_backend.h"

namespace lmp2 {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kCorrectnessNames = {
    "correct", "partially", "incorrect", "unsure"};
constexpr std::array<std::string_view, 6> kEmotionNames = {
    "neutral", "creeped_out", "worried", "angry", "happy", "embarrassed"};

ApiResponse respond(int status, const json& body) {
  return {status, body.dump(), {}};
}

ApiResponse error_response(int status, std::string_view kind,
                           const std::string& message) {
  return respond(status, json{{"error", {{"kind", kind}, {"message", message}}}});
}

std::size_t get_size(const json& j, const char* key, std::size_t fallback) {
  return j.contains(key) ? j.at(key).get<std::size_t>() : fallback;
}

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return (v != nullptr && *v != '\0') ? v : nullptr;
}

std::size_t env_size(const char* name, std::size_t fallback) {
  const char* v = env(name);
  if (v == nullptr) return fallback;
  try {
    return static_cast<std::size_t>(std::stoull(v));
  } catch (const std::exception&) {
    throw InvalidConfig(std::string(name) + " is not a number");
  }
}

}  // namespace

std::string_view to_string(Correctness c) {
  return kCorrectnessNames[static_cast<std::size_t>(c)];
}

std::string_view to_string(Emotion e) {
  return kEmotionNames[static_cast<std::size_t>(e)];
}

Correctness parse_correctness(std::string_view s) {
  for (std::size_t i = 0; i < kCorrectnessNames.size(); ++i) {
    if (kCorrectnessNames[i] == s) return static_cast<Correctness>(i);
  }
  throw ValidationError("unknown correctness '" + std::string(s) + "'");
}

Emotion parse_emotion(std::string_view s) {
  for (std::size_t i = 0; i < kEmotionNames.size(); ++i) {
    if (kEmotionNames[i] == s) return static_cast<Emotion>(i);
  }
  throw ValidationError("unknown emotion '" + std::string(s) + "'");
}

json feedback_to_json(const Feedback& f) {
  json emotions = json::array();
  for (auto e : f.emotions) emotions.push_back(to_string(e));
  return json{{"job_id", f.job_id},
              {"property_id", f.property_id},
              {"correctness", to_string(f.correctness)},
              {"privacy_violation", f.privacy_violation},
              {"emotions", emotions},
              {"free_text", f.free_text},
              {"version", f.version},
              {"received_at", format_utc(f.received_at)}};
}

ServiceConfig load_service_config(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("service config is not valid JSON: ") + e.what());
  }
  ServiceConfig c;
  c.provider.model_id = MockModel::kModelId;
  try {
    c.catalog_path = doc.value("catalog", c.catalog_path);
    c.host = doc.value("host", c.host);
    c.port = doc.value("port", c.port);
    c.job_workers = get_size(doc, "job_workers", c.job_workers);
    c.data_dir = doc.value("data_dir", c.data_dir);
    c.call_log_path = doc.value("call_log", c.call_log_path);
    c.max_prefixes_per_selection =
        get_size(doc, "max_prefixes_per_selection", c.max_prefixes_per_selection);
    if (doc.contains("provider")) {
      const auto& p = doc["provider"];
      auto& pc = c.provider;
      pc.model_id = p.value("model_id", pc.model_id);
      pc.base_url = p.value("base_url", pc.base_url);
      pc.api_key_env = p.value("api_key_env", pc.api_key_env);
      pc.max_parallelism = get_size(p, "max_parallelism", pc.max_parallelism);
      pc.requests_per_minute =
          get_size(p, "requests_per_minute", pc.requests_per_minute);
      pc.temperature = p.value("temperature", pc.temperature);
      pc.request_logprobs = p.value("request_logprobs", pc.request_logprobs);
      pc.timeout = std::chrono::milliseconds(
          p.value("timeout_ms", static_cast<std::int64_t>(pc.timeout.count())));
      pc.retry.max_attempts = get_size(p, "max_attempts", pc.retry.max_attempts);
      pc.retry.initial_backoff = std::chrono::milliseconds(p.value(
          "initial_backoff_ms",
          static_cast<std::int64_t>(pc.retry.initial_backoff.count())));
    }
    if (doc.contains("probes")) {
      const auto& p = doc["probes"];
      c.probes.paraphrases = get_size(p, "paraphrases", c.probes.paraphrases);
      c.probes.counterfactuals =
          get_size(p, "counterfactuals", c.probes.counterfactuals);
      c.probes.seed = p.value("seed", c.probes.seed);
    }
    if (doc.contains("aggregation")) {
      const auto& a = doc["aggregation"];
      c.aggregation.top_k = get_size(a, "top_k", c.aggregation.top_k);
      c.aggregation.lambda = a.value("lambda", c.aggregation.lambda);
    }
    if (doc.contains("mock")) c.mock = mock_config_from_json(doc["mock"]);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("service config: ") + e.what());
  }
  return c;
}

ServiceConfig load_service_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_service_config(buf.str());
}

void apply_env_overrides(ServiceConfig& c) {
  if (const char* v = env("LMP2_MODEL")) c.provider.model_id = v;
  if (const char* v = env("LMP2_BASE_URL")) c.provider.base_url = v;
  c.provider.max_parallelism =
      env_size("LMP2_MAX_PARALLELISM", c.provider.max_parallelism);
  c.provider.requests_per_minute =
      env_size("LMP2_RPM", c.provider.requests_per_minute);
  c.aggregation.top_k = env_size("LMP2_TOP_K", c.aggregation.top_k);
  if (const char* v = env("LMP2_LAMBDA")) {
    try {
      c.aggregation.lambda = std::stod(v);
    } catch (const std::exception&) {
      throw InvalidConfig("LMP2_LAMBDA is not a number");
    }
  }
  c.probes.paraphrases = env_size("LMP2_PARAPHRASES", c.probes.paraphrases);
  c.probes.counterfactuals =
      env_size("LMP2_COUNTERFACTUALS", c.probes.counterfactuals);
  c.probes.seed = env_size("LMP2_SEED", c.probes.seed);
  c.port = static_cast<int>(env_size("LMP2_PORT", static_cast<std::size_t>(c.port)));
}

std::shared_ptr<ChatBackend> make_backend(const ServiceConfig& config,
                                          const Catalog& catalog) {
  if (config.provider.model_id == MockModel::kModelId) {
    auto mock = std::make_shared<MockModel>(config.mock.value_or(MockModelConfig{}));
    mock->use_formats_from(catalog);
    return mock;
  }
  return std::make_shared<HttpChatBackend>(config.provider);
}

AuditService::AuditService(Catalog catalog, ServiceConfig config,
                           std::shared_ptr<ChatBackend> backend)
    : catalog_(std::move(catalog)),
      config_(std::move(config)),
      gateway_(config_.provider, std::move(backend), nullptr,
               config_.call_log_path.empty()
                   ? nullptr
                   : std::make_shared<CallLog>(config_.call_log_path)),
      id_state_(std::random_device{}()) {
  if (config_.job_workers < 1) throw InvalidConfig("job_workers must be at least 1");
  if (config_.aggregation.top_k < 1) throw InvalidConfig("top_k must be at least 1");
  if (config_.probes.paraphrases < 1) {
    throw InvalidConfig("paraphrases must be at least 1");
  }
  if (!config_.data_dir.empty()) {
    std::filesystem::create_directories(config_.data_dir);
  }
  id_state_ = (id_state_ << 32) ^ static_cast<std::uint64_t>(
                                      Clock::now().time_since_epoch().count());
  for (std::size_t i = 0; i < config_.job_workers; ++i) {
    workers_.emplace_back([this](std::stop_token st) { worker_loop(st); });
  }
}

AuditService::~AuditService() { shutdown(); }

void AuditService::shutdown() {
  for (auto& w : workers_) w.request_stop();
  changed_.notify_all();
  workers_.clear();
}

std::string AuditService::new_job_id() {
  char buf[24];
  std::snprintf(buf, sizeof buf, "job-%016llx",
                static_cast<unsigned long long>(splitmix64(id_state_++)));
  return buf;
}

ApiResponse AuditService::get_catalog() const {
  json body = catalog_to_json(catalog_);
  json categories = json::object();
  for (const auto& [category, specs] : properties_by_category(catalog_)) {
    json ids = json::array();
    for (const auto& spec : specs) ids.push_back(spec.property_id);
    categories[std::string(to_string(category))] = ids;
  }
  body["categories"] = categories;
  body["feedback_vocabulary"] = {
      {"correctness", kCorrectnessNames},
      {"emotions", kEmotionNames},
  };
  body["max_prefix_length"] = kMaxPrefixLength;
  return respond(200, body);
}

ApiResponse AuditService::create_job(std::string_view body,
                                     const std::string& idempotency_key) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    return error_response(400, "ValidationError", "request body is not valid JSON");
  }
  if (!doc.is_object()) {
    return error_response(400, "ValidationError", "request body must be an object");
  }
  if (!idempotency_key.empty()) {
    std::lock_guard lock(mu_);
    if (auto it = idempotency_.find(idempotency_key); it != idempotency_.end()) {
      const Job& job = jobs_.at(it->second);
      return respond(202, json{{"job_id", job.job_id},
                               {"status", to_string(job.status)}});
    }
  }

  const auto consent = doc.find("consent");
  if (consent == doc.end() || !consent->is_boolean() || !consent->get<bool>()) {
    return error_response(400, "ValidationError",
                          "consent must be acknowledged before any probe is issued");
  }
  const auto name = doc.find("subject_name");
  if (name == doc.end() || !name->is_string() || is_blank(name->get<std::string>())) {
    return error_response(400, "ValidationError", "subject name is blank");
  }
  const auto selections = doc.find("selections");
  if (selections == doc.end() || !selections->is_array() || selections->empty()) {
    return error_response(400, "ValidationError", "at least one selection is required");
  }

  Job job;
  job.subject_name = trim(name->get<std::string>());
  std::set<std::string> seen;
  for (const auto& s : *selections) {
    if (!s.is_object() || !s.contains("property_id") ||
        !s["property_id"].is_string()) {
      return error_response(400, "ValidationError", "selection needs a property_id");
    }
    Selection sel;
    sel.property_id = s["property_id"].get<std::string>();
    if (catalog_.find(sel.property_id) == nullptr) {
      return error_response(404, "UnknownProperty",
                            "unknown property '" + sel.property_id + "'");
    }
    if (!seen.insert(sel.property_id).second) {
      return error_response(400, "ValidationError",
                            "property '" + sel.property_id + "' selected twice");
    }
    if (s.contains("true_prefixes")) {
      const auto& prefixes = s["true_prefixes"];
      if (!prefixes.is_array() ||
          prefixes.size() > config_.max_prefixes_per_selection) {
        return error_response(400, "ValidationError",
                              "true_prefixes must be a short list");
      }
      for (const auto& p : prefixes) {
        if (!p.is_string()) {
          return error_response(400, "ValidationError", "prefix must be a string");
        }
        const std::string prefix = p.get<std::string>();
        if (is_blank(prefix) || prefix != trim(prefix)) {
          return error_response(400, "ValidationError", "prefix is malformed");
        }
        if (utf8_length(prefix) > kMaxPrefixLength) {
          // Never echo the value back: it is likely a full ground truth.
          return error_response(
              400, "ValidationError",
              "prefix exceeds " + std::to_string(kMaxPrefixLength) +
                  " characters; submit prefixes, not full values");
        }
        sel.true_prefixes.push_back(prefix);
      }
    }
    job.selections.push_back(std::move(sel));
  }

  std::string job_id;
  {
    std::lock_guard lock(mu_);
    if (!idempotency_key.empty()) {
      if (auto it = idempotency_.find(idempotency_key); it != idempotency_.end()) {
        return respond(202, json{{"job_id", it->second},
                                 {"status", to_string(jobs_.at(it->second).status)}});
      }
    }
    job_id = new_job_id();
    job.job_id = job_id;
    job.consent_at = job.created_at = job.updated_at = Clock::now();
    jobs_.emplace(job_id, std::move(job));
    if (!idempotency_key.empty()) idempotency_[idempotency_key] = job_id;
    queue_.push_back(job_id);
  }
  changed_.notify_all();
  return respond(202, json{{"job_id", job_id}, {"status", "queued"}});
}

json AuditService::job_json(const Job& job) const {
  json selections = json::array();
  for (const auto& s : job.selections) {
    selections.push_back({{"property_id", s.property_id},
                          {"prefix_count", s.true_prefixes.size()}});
  }
  json out{{"job_id", job.job_id},
           {"subject_name", job.subject_name},
           {"consent_at", format_utc(job.consent_at)},
           {"status", to_string(job.status)},
           {"selections", selections},
           {"created_at", format_utc(job.created_at)},
           {"updated_at", format_utc(job.updated_at)}};
  if (job.status == JobStatus::kComplete) {
    json cards = json::array();
    for (const auto& c : job.cards) cards.push_back(card_to_json(c));
    out["cards"] = cards;
    out["evidence_ref"] = package_id_for(job.job_id);
  }
  if (!job.error.empty()) out["error"] = job.error;
  return out;
}

ApiResponse AuditService::get_job(const std::string& job_id) const {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return error_response(404, "NotFound", "unknown job");
  return respond(200, job_json(it->second));
}

ApiResponse AuditService::submit_feedback(const std::string& job_id,
                                          std::string_view body) {
  Feedback fb;
  {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return error_response(404, "NotFound", "unknown job");
    if (it->second.status != JobStatus::kComplete) {
      return error_response(409, "JobNotComplete",
                            "feedback is accepted once the job is complete");
    }
  }
  try {
    const json doc = json::parse(body);
    fb.job_id = job_id;
    fb.property_id = doc.at("property_id").get<std::string>();
    fb.correctness = parse_correctness(doc.at("correctness").get<std::string>());
    fb.privacy_violation = doc.at("privacy_violation").get<bool>();
    for (const auto& e : doc.at("emotions")) {
      fb.emotions.insert(parse_emotion(e.get<std::string>()));
    }
    fb.free_text = doc.value("free_text", std::string());
  } catch (const json::exception& e) {
    return error_response(400, "ValidationError",
                          std::string("malformed feedback: ") + e.what());
  } catch (const ValidationError& e) {
    return error_response(400, "ValidationError", e.what());
  }

  json line;
  {
    std::lock_guard lock(mu_);
    Job& job = jobs_.at(job_id);
    const bool has_card =
        std::any_of(job.cards.begin(), job.cards.end(), [&](const ResultsCard& c) {
          return c.property_id == fb.property_id;
        });
    if (!has_card) {
      return error_response(404, "NotFound",
                            "job has no card for '" + fb.property_id + "'");
    }
    fb.version = 1 + static_cast<std::size_t>(std::count_if(
                         job.feedback.begin(), job.feedback.end(),
                         [&](const Feedback& f) {
                           return f.property_id == fb.property_id;
                         }));
    fb.received_at = Clock::now();
    job.feedback.push_back(fb);
    line = feedback_to_json(fb);
  }
  if (!config_.data_dir.empty()) {
    std::lock_guard lock(feedback_file_mu_);
    std::ofstream out(std::filesystem::path(config_.data_dir) / "feedback.jsonl",
                      std::ios::app);
    out << line.dump() << '\n';
  }
  return respond(200, json{{"job_id", fb.job_id},
                           {"property_id", fb.property_id},
                           {"version", fb.version},
                           {"received_at", line["received_at"]}});
}

ApiResponse AuditService::export_evidence(const std::string& job_id) const {
  {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return error_response(404, "NotFound", "unknown job");
    if (it->second.status != JobStatus::kComplete) {
      return error_response(409, "JobNotComplete",
                            "evidence is exported once the job is complete");
    }
  }
  const EvidencePackage* pkg = evidence_.find(job_id);
  if (pkg == nullptr) return error_response(404, "NotFound", "no evidence package");
  ApiResponse r{200, export_document(*pkg), {}};
  r.headers["Content-Disposition"] =
      "attachment; filename=\"" + evidence_file_name(*pkg) + "\"";
  r.headers["X-Content-Hash"] = pkg->content_hash();
  return r;
}

ApiResponse AuditService::health() const {
  std::map<std::string, std::size_t> counts = {
      {"queued", 0}, {"running", 0}, {"complete", 0}, {"failed", 0}};
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, job] : jobs_) ++counts[std::string(to_string(job.status))];
  }
  return respond(200, json{{"status", "ok"},
                           {"catalog_version", catalog_.version()},
                           {"model_id", config_.provider.model_id},
                           {"jobs", counts}});
}

bool AuditService::wait_until_terminal(const std::string& job_id,
                                       std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  return changed_.wait_for(lock, timeout, [&] {
    auto it = jobs_.find(job_id);
    return it == jobs_.end() || is_terminal(it->second.status);
  });
}

std::vector<Feedback> AuditService::feedback_for(const std::string& job_id) const {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(job_id);
  return it == jobs_.end() ? std::vector<Feedback>{} : it->second.feedback;
}

std::vector<std::string> AuditService::retained_prefixes() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, job] : jobs_) {
    for (const auto& s : job.selections) {
      out.insert(out.end(), s.true_prefixes.begin(), s.true_prefixes.end());
    }
  }
  return out;
}

void AuditService::worker_loop(std::stop_token stop) {
  while (true) {
    std::string job_id;
    {
      std::unique_lock lock(mu_);
      if (!changed_.wait(lock, stop, [&] { return !queue_.empty(); })) return;
      job_id = queue_.front();
      queue_.pop_front();
      Job& job = jobs_.at(job_id);
      job.status = JobStatus::kRunning;
      job.updated_at = Clock::now();
    }
    changed_.notify_all();
    run_job(job_id);
  }
}

void AuditService::run_job(const std::string& job_id) {
  std::string subject;
  std::vector<Selection> selections;
  {
    std::lock_guard lock(mu_);
    const Job& job = jobs_.at(job_id);
    subject = job.subject_name;
    selections = job.selections;
  }

  JobTrace trace;
  trace.job_id = job_id;
  trace.catalog_version = catalog_.version();
  trace.model_id = config_.provider.model_id;
  trace.config = {config_.probes.paraphrases, config_.probes.counterfactuals,
                  config_.aggregation.top_k,  config_.aggregation.lambda,
                  config_.probes.seed,        config_.provider.temperature};
  std::string error;
  try {
    std::vector<ProbeSpec> probes;
    for (const auto& sel : selections) {
      const auto& spec = catalog_.at(sel.property_id);
      const std::string set_id = job_id + "-" + sel.property_id;
      trace.probe_sets.push_back(
          sel.true_prefixes.empty()
              ? build_counterfactual_probe_set(spec, subject, config_.probes, set_id)
              : build_probe_set(spec, subject, sel.true_prefixes, config_.probes,
                                set_id));
      const auto& set = trace.probe_sets.back().probes;
      probes.insert(probes.end(), set.begin(), set.end());
    }
    RunResult run = gateway_.run(probes);
    trace.completions = std::move(run.completions);
    trace.failures = std::move(run.failures);
    trace.attempts = std::move(run.attempts);
    for (const auto& sel : selections) {
      const auto& spec = catalog_.at(sel.property_id);
      const std::string prefix = job_id + "-" + sel.property_id + ":";
      const auto failed = static_cast<std::size_t>(std::count_if(
          trace.failures.begin(), trace.failures.end(),
          [&](const FailureRecord& f) { return f.probe_id.starts_with(prefix); }));
      trace.cards.push_back(
          aggregate_property(spec, trace.completions, config_.aggregation, failed));
    }
    trace.status = JobStatus::kComplete;
  } catch (const ProviderUnavailable& e) {
    trace.failures = e.failures();
    trace.status = JobStatus::kFailed;
    error = e.what();
  } catch (const std::exception& e) {
    trace.status = JobStatus::kFailed;
    error = e.what();
  }
  finish_job(job_id, std::move(trace), error);
}

void AuditService::finish_job(const std::string& job_id, JobTrace trace,
                              const std::string& error) {
  std::vector<ResultsCard> cards;
  std::string seal_error;
  try {
    const EvidencePackage& pkg = evidence_.seal(trace);
    cards = pkg.cards();
    if (!config_.data_dir.empty()) export_package(pkg, config_.data_dir);
  } catch (const std::exception& e) {
    seal_error = e.what();
  }
  {
    std::lock_guard lock(mu_);
    Job& job = jobs_.at(job_id);
    job.status = seal_error.empty() ? trace.status : JobStatus::kFailed;
    job.error = !error.empty() ? error : seal_error;
    job.cards = std::move(cards);
    // Prefixes are only needed to build probes; the sealed package keeps
    // the prompts that were actually sent.
    for (auto& s : job.selections) s.true_prefixes.clear();
    job.updated_at = Clock::now();
  }
  changed_.notify_all();
}

AuditServer::AuditServer(AuditService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto send = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    res.set_content(r.body, "application/json");
  };
  auto& s = *server_;
  s.Get("/api/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, service_.health());
  });
  s.Get("/api/catalog", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, service_.get_catalog());
  });
  s.Post("/api/jobs", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.create_job(req.body, req.get_header_value("Idempotency-Key")));
  });
  s.Get(R"(/api/jobs/([^/]+))",
        [this, send](const httplib::Request& req, httplib::Response& res) {
          send(res, service_.get_job(req.matches[1]));
        });
  s.Post(R"(/api/jobs/([^/]+)/feedback)",
         [this, send](const httplib::Request& req, httplib::Response& res) {
           send(res, service_.submit_feedback(req.matches[1], req.body));
         });
  s.Get(R"(/api/jobs/([^/]+)/evidence)",
        [this, send](const httplib::Request& req, httplib::Response& res) {
          send(res, service_.export_evidence(req.matches[1]));
        });
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(json{{"error", {{"kind", "NotFound"}, {"message", "no such route"}}}}
                          .dump(),
                      "application/json");
    }
  });
}

AuditServer::~AuditServer() { stop(); }

int AuditServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

void AuditServer::listen() { server_->listen_after_bind(); }

void AuditServer::start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void AuditServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace lmp2
