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

#include "lmp2/evidence.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "lmp2/errors.h"

namespace lmp2 {

using nlohmann::json;

namespace {

TimePoint to_millis(TimePoint t) {
  return std::chrono::floor<std::chrono::milliseconds>(t);
}

json snapshot_to_json(const RunSnapshot& s) {
  return json{{"paraphrases", s.paraphrases}, {"counterfactuals", s.counterfactuals},
              {"top_k", s.top_k},             {"lambda", s.lambda},
              {"seed", s.seed},               {"temperature", s.temperature}};
}

RunSnapshot snapshot_from_json(const json& j) {
  RunSnapshot s;
  s.paraphrases = j.at("paraphrases").get<std::size_t>();
  s.counterfactuals = j.at("counterfactuals").get<std::size_t>();
  s.top_k = j.at("top_k").get<std::size_t>();
  s.lambda = j.at("lambda").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.temperature = j.at("temperature").get<double>();
  return s;
}

json attempt_to_json(const AttemptRecord& a) {
  return json{{"probe_id", a.probe_id},
              {"attempt", a.attempt},
              {"started_at", format_utc(a.started_at)},
              {"finished_at", format_utc(a.finished_at)},
              {"status", a.status}};
}

AttemptRecord attempt_from_json(const json& j) {
  return AttemptRecord{j.at("probe_id").get<std::string>(),
                       j.at("attempt").get<int>(),
                       parse_utc(j.at("started_at").get<std::string>()),
                       parse_utc(j.at("finished_at").get<std::string>()),
                       j.at("status").get<int>()};
}

template <typename T, typename F>
json array_of(const std::vector<T>& items, F&& to) {
  json arr = json::array();
  for (const auto& item : items) arr.push_back(to(item));
  return arr;
}

}  // namespace

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::kQueued:
      return "queued";
    case JobStatus::kRunning:
      return "running";
    case JobStatus::kComplete:
      return "complete";
    case JobStatus::kFailed:
      return "failed";
  }
  return "queued";
}

JobStatus parse_job_status(std::string_view s) {
  if (s == "queued") return JobStatus::kQueued;
  if (s == "running") return JobStatus::kRunning;
  if (s == "complete") return JobStatus::kComplete;
  if (s == "failed") return JobStatus::kFailed;
  throw ParseError("unknown job status '" + std::string(s) + "'");
}

std::string package_id_for(const std::string& job_id) { return "pkg-" + job_id; }

std::vector<std::string> EvidencePackage::prompts() const {
  std::vector<std::string> out;
  for (const auto& set : probe_sets_) {
    for (const auto& p : set.probes) out.push_back(p.prompt_text);
  }
  return out;
}

json EvidencePackage::body_json() const {
  return json{
      {"schema", kEvidenceSchema},
      {"package_id", package_id_},
      {"job_id", job_id_},
      {"job_status", to_string(job_status_)},
      {"catalog_version", catalog_version_},
      {"config", snapshot_to_json(config_)},
      {"model_id", model_id_},
      {"model_versions", model_versions_},
      {"probe_sets", array_of(probe_sets_, probe_set_to_json)},
      {"completions", array_of(completions_, completion_to_json)},
      {"failures", array_of(failures_, failure_to_json)},
      {"attempts", array_of(attempts_, attempt_to_json)},
      {"cards", array_of(cards_, card_to_json)},
      {"call_count",
       {{"total", call_counts_.total},
        {"named", call_counts_.named},
        {"generic", call_counts_.generic}}},
      {"created_at", format_utc(created_at_)},
  };
}

json EvidencePackage::to_json() const {
  json doc = body_json();
  doc["content_hash"] = content_hash_;
  return doc;
}

EvidencePackage seal_package(const JobTrace& trace, TimePoint created_at) {
  if (!is_terminal(trace.status)) {
    throw JobNotTerminal("job " + trace.job_id + " is " +
                         std::string(to_string(trace.status)));
  }
  EvidencePackage pkg;
  pkg.package_id_ = package_id_for(trace.job_id);
  pkg.job_id_ = trace.job_id;
  pkg.job_status_ = trace.status;
  pkg.catalog_version_ = trace.catalog_version;
  pkg.config_ = trace.config;
  pkg.model_id_ = trace.model_id;
  pkg.probe_sets_ = trace.probe_sets;
  pkg.completions_ = trace.completions;
  pkg.failures_ = trace.failures;
  pkg.attempts_ = trace.attempts;
  pkg.cards_ = trace.cards;
  pkg.created_at_ = to_millis(created_at);

  for (auto& c : pkg.completions_) {
    c.timestamp = to_millis(c.timestamp);
    if (std::find(pkg.model_versions_.begin(), pkg.model_versions_.end(),
                  c.model_version) == pkg.model_versions_.end()) {
      pkg.model_versions_.push_back(c.model_version);
    }
    ++(c.subject_mode == SubjectMode::kNamed ? pkg.call_counts_.named
                                             : pkg.call_counts_.generic);
  }
  for (auto& f : pkg.failures_) {
    f.timestamp = to_millis(f.timestamp);
    ++(f.subject_mode == SubjectMode::kNamed ? pkg.call_counts_.named
                                             : pkg.call_counts_.generic);
  }
  for (auto& a : pkg.attempts_) {
    a.started_at = to_millis(a.started_at);
    a.finished_at = to_millis(a.finished_at);
  }
  for (auto& card : pkg.cards_) card.evidence_ref = pkg.package_id_;
  pkg.call_counts_.total = pkg.completions_.size() + pkg.failures_.size();
  pkg.content_hash_ = sha256_hex(pkg.body_json().dump());
  return pkg;
}

std::string export_document(const EvidencePackage& package) {
  return package.to_json().dump(2) + "\n";
}

std::string evidence_file_name(const EvidencePackage& package) {
  return "evidence_" + package.job_id() + "_" +
         compact_utc(package.created_at()) + ".json";
}

std::filesystem::path export_package(const EvidencePackage& package,
                                     const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  const auto path = directory / evidence_file_name(package);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write " + path.string());
  out << export_document(package);
  if (!out) throw IOError("failed writing " + path.string());
  return path;
}

EvidencePackage parse_package(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("evidence document is not valid JSON: ") +
                     e.what());
  }
  EvidencePackage pkg;
  std::string stored_hash;
  try {
    if (doc.at("schema").get<std::string>() != kEvidenceSchema) {
      throw SchemaError("unsupported evidence schema");
    }
    pkg.package_id_ = doc.at("package_id").get<std::string>();
    pkg.job_id_ = doc.at("job_id").get<std::string>();
    pkg.job_status_ = parse_job_status(doc.at("job_status").get<std::string>());
    pkg.catalog_version_ = doc.at("catalog_version").get<std::string>();
    pkg.config_ = snapshot_from_json(doc.at("config"));
    pkg.model_id_ = doc.at("model_id").get<std::string>();
    pkg.model_versions_ = doc.at("model_versions").get<std::vector<std::string>>();
    for (const auto& s : doc.at("probe_sets")) {
      pkg.probe_sets_.push_back(probe_set_from_json(s));
    }
    for (const auto& c : doc.at("completions")) {
      pkg.completions_.push_back(completion_from_json(c));
    }
    for (const auto& f : doc.at("failures")) {
      pkg.failures_.push_back(failure_from_json(f));
    }
    for (const auto& a : doc.at("attempts")) {
      pkg.attempts_.push_back(attempt_from_json(a));
    }
    for (const auto& card : doc.at("cards")) {
      pkg.cards_.push_back(card_from_json(card));
    }
    const auto& counts = doc.at("call_count");
    pkg.call_counts_ = {counts.at("total").get<std::size_t>(),
                        counts.at("named").get<std::size_t>(),
                        counts.at("generic").get<std::size_t>()};
    pkg.created_at_ = parse_utc(doc.at("created_at").get<std::string>());
    stored_hash = doc.at("content_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("evidence document does not match schema: ") +
                      e.what());
  } catch (const ParseError& e) {
    throw SchemaError(std::string("evidence document does not match schema: ") +
                      e.what());
  }
  if (pkg.call_counts_.total != pkg.completions_.size() + pkg.failures_.size()) {
    throw SchemaError("call_count does not match completions + failures");
  }
  pkg.content_hash_ = sha256_hex(pkg.body_json().dump());
  if (pkg.content_hash_ != stored_hash) {
    throw IntegrityError("content hash mismatch: stored " + stored_hash +
                         ", computed " + pkg.content_hash_);
  }
  return pkg;
}

EvidencePackage import_package(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_package(buf.str());
}

std::vector<ResultsCard> replay_cards(const EvidencePackage& package,
                                      const Catalog& catalog) {
  if (catalog.version() != package.catalog_version()) {
    throw ValidationError("catalog version " + catalog.version() +
                          " does not match package catalog " +
                          package.catalog_version());
  }
  AggregationConfig config;
  config.top_k = package.config().top_k;
  config.lambda = package.config().lambda;
  std::vector<ResultsCard> cards;
  for (const auto& card : package.cards()) {
    std::size_t failed = 0;
    for (const auto& f : package.failures()) {
      if (f.property_id == card.property_id) ++failed;
    }
    ResultsCard replayed = aggregate_property(catalog.at(card.property_id),
                                              package.completions(), config, failed);
    replayed.evidence_ref = package.package_id();
    cards.push_back(std::move(replayed));
  }
  return cards;
}

const EvidencePackage& EvidenceStore::seal(const JobTrace& trace) {
  std::lock_guard lock(mu_);
  if (packages_.contains(trace.job_id)) {
    throw AlreadySealed("job " + trace.job_id + " is already sealed");
  }
  auto [it, inserted] = packages_.emplace(trace.job_id, seal_package(trace));
  return it->second;
}

const EvidencePackage* EvidenceStore::find(const std::string& job_id) const {
  std::lock_guard lock(mu_);
  auto it = packages_.find(job_id);
  return it == packages_.end() ? nullptr : &it->second;
}

}  // namespace lmp2
