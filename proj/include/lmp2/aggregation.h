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

// Turns recorded completions into Results Cards.
//
//   raw_score        = freq * weight
//   calibrated_score = max(0, raw_score - lambda * baseline_raw_score)
//   strength_i       = score_i / sum(score_j) over the top-K candidates
//   confidence       = 1 - H(strengths) / ln(m)   (1 when m == 1)
//
// `weight` is the mean per-completion probability exp(-mean_nll) when every
// completion carries log-probabilities, otherwise a vote weight of 1. When
// calibration cancels every candidate the card falls back to raw scores and
// is flagged as a likely model default.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmp2/catalog.h"
#include "lmp2/model_gateway.h"

namespace lmp2 {

inline constexpr std::size_t kDefaultTopK = 5;
inline constexpr double kDefaultLambda = 1.0;

enum class WeightMode {
  kAuto,      // log-probabilities if every completion has them
  kLogprobs,  // require log-probabilities
  kVotes,     // every completion counts 1
};

enum class ProvenanceLabel { kDirect, kInferred, kGuessed, kIndeterminate };

std::string_view to_string(ProvenanceLabel label);
ProvenanceLabel parse_provenance_label(std::string_view s);

struct CandidateEvidence {
  std::string candidate;
  std::size_t count = 0;
  double freq = 0.0;
  double weight = 1.0;
  std::optional<double> mean_nll;
  double baseline_freq = 0.0;
  double baseline_raw_score = 0.0;
  double raw_score = 0.0;
  double calibrated_score = 0.0;
};

struct Tally {
  SubjectMode arm = SubjectMode::kNamed;
  std::size_t effective_sample_size = 0;
  // Sorted by candidate.
  std::vector<CandidateEvidence> candidates;
};

struct ScoredEvidence {
  std::vector<CandidateEvidence> candidates;
  std::size_t effective_sample_size = 0;
  std::size_t baseline_sample_size = 0;
  double lambda = kDefaultLambda;
  bool default_fallback = false;

  // The score used for ranking: calibrated, or raw under fallback.
  double ranking_score(const CandidateEvidence& c) const {
    return default_fallback ? c.raw_score : c.calibrated_score;
  }
};

struct Prediction {
  std::string candidate;
  double strength = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct ResultsCard {
  std::string property_id;
  std::vector<Prediction> top_predictions;
  double confidence = 0.0;
  ProvenanceLabel provenance_label = ProvenanceLabel::kIndeterminate;
  std::size_t effective_sample_size = 0;
  bool default_fallback = false;
  std::string evidence_ref;
  std::size_t failed_probes = 0;
  // Set when no evidence could be gathered for the property.
  std::optional<std::string> error;

  bool empty() const { return top_predictions.empty(); }
  friend bool operator==(const ResultsCard&, const ResultsCard&) = default;
};

struct AggregationConfig {
  std::size_t top_k = kDefaultTopK;
  double lambda = kDefaultLambda;
  WeightMode weight_mode = WeightMode::kAuto;
};

// Counts normalized candidates among the completions of `arm`; blank
// candidates are excluded and do not count toward the sample size. Throws
// EmptyEvidence when nothing remains.
Tally tally(std::span<const Completion> completions, SubjectMode arm,
            WeightMode mode = WeightMode::kAuto);

// `baseline` may be empty. Throws EmptyEvidence when `named` is empty.
ScoredEvidence score_and_calibrate(const Tally& named, const Tally& baseline,
                                   double lambda = kDefaultLambda);

// Top-K by ranking score (ties: lower mean NLL, then candidate), normalized
// to sum to 1. Zero scores are dropped unless `fallback`.
std::vector<Prediction> association_strengths(
    std::span<const CandidateEvidence> evidence, std::size_t top_k = kDefaultTopK,
    bool fallback = false);
std::vector<Prediction> association_strengths(const ScoredEvidence& evidence,
                                              std::size_t top_k = kDefaultTopK);

double confidence(std::span<const Prediction> strengths);

ProvenanceLabel provenance_label(const ScoredEvidence& evidence,
                                 const PropertySpec& spec);

ResultsCard build_results_card(const PropertySpec& spec,
                               const ScoredEvidence& evidence,
                               std::size_t top_k = kDefaultTopK);

// Card for a property that produced no usable completions.
ResultsCard error_card(const std::string& property_id, const std::string& message);

// Full pipeline for one property over the completions of both arms.
// Completions of other properties are ignored.
ResultsCard aggregate_property(const PropertySpec& spec,
                               std::span<const Completion> completions,
                               const AggregationConfig& config = {},
                               std::size_t failed_probes = 0);

nlohmann::json card_to_json(const ResultsCard& card);
ResultsCard card_from_json(const nlohmann::json& j);

}  // namespace lmp2
