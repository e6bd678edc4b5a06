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

// Sealed, exportable trace of one audit job: prompts, model identity and
// version, per-call timestamps, call counts, raw completions, failures and
// the derived Results Cards. The content hash is SHA-256 over the canonical
// serialization of everything except the hash itself.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmp2/aggregation.h"
#include "lmp2/catalog.h"
#include "lmp2/model_gateway.h"
#include "lmp2/probe_builder.h"

namespace lmp2 {

inline constexpr const char* kEvidenceSchema = "lmp2.evidence/1";

enum class JobStatus { kQueued, kRunning, kComplete, kFailed };

std::string_view to_string(JobStatus s);
JobStatus parse_job_status(std::string_view s);
inline bool is_terminal(JobStatus s) {
  return s == JobStatus::kComplete || s == JobStatus::kFailed;
}

struct RunSnapshot {
  std::size_t paraphrases = 5;
  std::size_t counterfactuals = 20;
  std::size_t top_k = kDefaultTopK;
  double lambda = kDefaultLambda;
  std::uint64_t seed = 0;
  double temperature = 1.0;

  friend bool operator==(const RunSnapshot&, const RunSnapshot&) = default;
};

// Everything a finished job hands to sealing.
struct JobTrace {
  std::string job_id;
  JobStatus status = JobStatus::kQueued;
  std::string catalog_version;
  RunSnapshot config;
  std::string model_id;
  std::vector<ProbeSet> probe_sets;
  std::vector<Completion> completions;
  std::vector<FailureRecord> failures;
  std::vector<AttemptRecord> attempts;
  std::vector<ResultsCard> cards;
};

struct CallCounts {
  std::size_t total = 0;
  std::size_t named = 0;
  std::size_t generic = 0;

  friend bool operator==(const CallCounts&, const CallCounts&) = default;
};

class EvidencePackage {
 public:
  const std::string& package_id() const { return package_id_; }
  const std::string& job_id() const { return job_id_; }
  JobStatus job_status() const { return job_status_; }
  const std::string& catalog_version() const { return catalog_version_; }
  const RunSnapshot& config() const { return config_; }
  const std::string& model_id() const { return model_id_; }
  // Distinct versions reported by the provider, in first-seen order.
  const std::vector<std::string>& model_versions() const {
    return model_versions_;
  }
  const std::vector<ProbeSet>& probe_sets() const { return probe_sets_; }
  const std::vector<Completion>& completions() const { return completions_; }
  const std::vector<FailureRecord>& failures() const { return failures_; }
  const std::vector<AttemptRecord>& attempts() const { return attempts_; }
  const std::vector<ResultsCard>& cards() const { return cards_; }
  const CallCounts& call_counts() const { return call_counts_; }
  TimePoint created_at() const { return created_at_; }
  const std::string& content_hash() const { return content_hash_; }

  // All prompts, in probe order.
  std::vector<std::string> prompts() const;

  // Canonical body without the hash.
  nlohmann::json body_json() const;
  nlohmann::json to_json() const;

  friend bool operator==(const EvidencePackage& a, const EvidencePackage& b) {
    return a.to_json() == b.to_json();
  }

 private:
  friend EvidencePackage seal_package(const JobTrace& trace, TimePoint created_at);
  friend EvidencePackage parse_package(const std::string& document);

  std::string package_id_;
  std::string job_id_;
  JobStatus job_status_ = JobStatus::kComplete;
  std::string catalog_version_;
  RunSnapshot config_;
  std::string model_id_;
  std::vector<std::string> model_versions_;
  std::vector<ProbeSet> probe_sets_;
  std::vector<Completion> completions_;
  std::vector<FailureRecord> failures_;
  std::vector<AttemptRecord> attempts_;
  std::vector<ResultsCard> cards_;
  CallCounts call_counts_;
  TimePoint created_at_;
  std::string content_hash_;
};

std::string package_id_for(const std::string& job_id);

// Throws JobNotTerminal. Cards are re-pointed at the new package.
EvidencePackage seal_package(const JobTrace& trace,
                             TimePoint created_at = Clock::now());

std::string export_document(const EvidencePackage& package);
// Writes evidence_<job_id>_<created_at>.json into `directory` and returns
// the path. Throws IOError.
std::filesystem::path export_package(const EvidencePackage& package,
                                     const std::filesystem::path& directory);

// Throws ParseError, SchemaError, IntegrityError (hash mismatch).
EvidencePackage parse_package(const std::string& document);
EvidencePackage import_package(const std::filesystem::path& path);

std::string evidence_file_name(const EvidencePackage& package);

// Re-aggregates the package's raw completions. Throws ValidationError when
// the catalog version does not match.
std::vector<ResultsCard> replay_cards(const EvidencePackage& package,
                                      const Catalog& catalog);

// Seals at most once per job.
class EvidenceStore {
 public:
  // Throws AlreadySealed, JobNotTerminal.
  const EvidencePackage& seal(const JobTrace& trace);
  // nullptr when the job was never sealed.
  const EvidencePackage* find(const std::string& job_id) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, EvidencePackage> packages_;
};

}  // namespace lmp2
