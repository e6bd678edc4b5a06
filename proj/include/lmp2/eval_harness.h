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

// Batch evaluation over famous-like and synthetic-like subject sets.
//
// Precision is top-1 based: a card counts as a true positive when its top
// prediction matches any ground truth, otherwise as a false positive.
// Recall is top-K based over multi-valued truths: every truth matched by
// any displayed prediction is recovered, the rest are false negatives.
// Micro scores pool the counts over every subject-property pair.
#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmp2/aggregation.h"
#include "lmp2/catalog.h"
#include "lmp2/mock_model.h"
#include "lmp2/model_gateway.h"
#include "lmp2/probe_builder.h"

namespace lmp2 {

enum class SubjectSetKind { kFamousLike, kSyntheticLike, kCustom };

std::string_view to_string(SubjectSetKind kind);
SubjectSetKind parse_subject_set_kind(std::string_view s);

struct SubjectSet {
  SubjectSetKind kind = SubjectSetKind::kCustom;
  // Flattened (subject, property, truths); truths are empty for
  // synthetic-like subjects.
  std::vector<SubjectTriple> subjects;
  // Optional mock-model block shipped with fixture datasets.
  std::optional<MockModelConfig> mock;
};

// Throws ParseError / ValidationError. Properties must exist in `catalog`.
SubjectSet load_subject_set(std::string_view document, const Catalog& catalog);
SubjectSet load_subject_set_file(const std::string& path, const Catalog& catalog);

struct ScoreContribution {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t recovered = 0;

  friend bool operator==(const ScoreContribution&, const ScoreContribution&) = default;
};

ScoreContribution score_subject_property(const ResultsCard& card,
                                         const std::vector<std::string>& truths,
                                         ValueFormat format);

struct PropertyMetrics {
  std::string property_id;
  std::size_t sample_size = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t recovered = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  double mean_confidence = 0.0;
  std::size_t default_fallbacks = 0;
  std::size_t empty_cards = 0;

  double default_fallback_rate() const {
    return sample_size == 0 ? 0.0
                            : static_cast<double>(default_fallbacks) /
                                  static_cast<double>(sample_size);
  }
};

struct MicroMetrics {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t recovered = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

// Fills precision, recall and F1 from the counts; undefined ratios stay
// empty.
void finalize(PropertyMetrics& m);
void finalize(MicroMetrics& m);

inline constexpr std::size_t kHistogramBins = 10;

struct SubjectCard {
  std::string subject_name;
  ResultsCard card;
};

struct EvalReport {
  SubjectSetKind kind = SubjectSetKind::kCustom;
  std::string model_id;
  std::vector<std::string> model_versions;
  std::vector<PropertyMetrics> properties;  // first-appearance order
  MicroMetrics micro;
  std::vector<SubjectCard> cards;
  std::array<std::size_t, kHistogramBins> confidence_histogram{};
  double mean_confidence = 0.0;
  double default_fallback_rate = 0.0;
  double guessed_rate = 0.0;
  std::vector<std::string> top_properties;     // by mean precision, best first
  std::vector<std::string> bottom_properties;  // lowest first
  std::size_t probe_count = 0;
  std::size_t failure_count = 0;
  // Completions with the subject each one was issued for.
  std::vector<std::pair<std::string, Completion>> completions;

  bool partial() const { return failure_count > 0; }
};

struct EvalConfig {
  ProbeConfig probes;
  AggregationConfig aggregation;
};

// Ranks properties with defined precision; `n` best and `n` worst.
std::pair<std::vector<std::string>, std::vector<std::string>> rank_properties(
    const std::vector<PropertyMetrics>& metrics, std::size_t n = 5);

std::size_t histogram_bin(double confidence);

// Runs every subject-property probe set through the gateway in one batch
// and scores the resulting cards. Ground-truth scoring is skipped for
// subjects without truths.
EvalReport evaluate(const SubjectSet& set, const Catalog& catalog,
                    const ModelGateway& gateway, const EvalConfig& config);

std::string metrics_csv(const EvalReport& report, const Catalog& catalog);
std::string histogram_csv(const EvalReport& report);
nlohmann::json run_manifest(const EvalReport& report, const Catalog& catalog,
                            const EvalConfig& config);

// Writes metrics.csv, confidence_histogram.csv, run_manifest.json,
// cards.jsonl and completions.jsonl into `out_dir`.
void write_report(const EvalReport& report, const Catalog& catalog,
                  const EvalConfig& config, const std::filesystem::path& out_dir,
                  nlohmann::json manifest_extra = nlohmann::json::object());

}  // namespace lmp2
