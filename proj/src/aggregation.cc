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

#include "lmp2/aggregation.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "lmp2/errors.h"

namespace lmp2 {

using nlohmann::json;

namespace {

bool ranks_before(const CandidateEvidence& a, double score_a,
                  const CandidateEvidence& b, double score_b) {
  if (score_a != score_b) return score_a > score_b;
  if (a.mean_nll && b.mean_nll && *a.mean_nll != *b.mean_nll) {
    return *a.mean_nll < *b.mean_nll;
  }
  return a.candidate < b.candidate;
}

bool all_have_logprobs(std::span<const Completion> completions,
                       SubjectMode arm) {
  for (const auto& c : completions) {
    if (c.subject_mode == arm && !c.mean_nll) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(ProvenanceLabel label) {
  switch (label) {
    case ProvenanceLabel::kDirect:
      return "direct";
    case ProvenanceLabel::kInferred:
      return "inferred";
    case ProvenanceLabel::kGuessed:
      return "guessed";
    case ProvenanceLabel::kIndeterminate:
      break;
  }
  return "indeterminate";
}

ProvenanceLabel parse_provenance_label(std::string_view s) {
  if (s == "direct") return ProvenanceLabel::kDirect;
  if (s == "inferred") return ProvenanceLabel::kInferred;
  if (s == "guessed") return ProvenanceLabel::kGuessed;
  if (s == "indeterminate") return ProvenanceLabel::kIndeterminate;
  throw ParseError("unknown provenance label '" + std::string(s) + "'");
}

Tally tally(std::span<const Completion> completions, SubjectMode arm,
            WeightMode mode) {
  bool use_logprobs = false;
  if (mode == WeightMode::kAuto) {
    use_logprobs = all_have_logprobs(completions, arm);
  } else if (mode == WeightMode::kLogprobs) {
    if (!all_have_logprobs(completions, arm)) {
      throw ValidationError("log-probabilities required but missing");
    }
    use_logprobs = true;
  }

  struct Accum {
    std::size_t count = 0;
    double prob_sum = 0.0;
    double nll_sum = 0.0;
  };
  std::map<std::string, Accum> by_candidate;
  std::size_t total = 0;
  for (const auto& c : completions) {
    if (c.subject_mode != arm || c.normalized_candidate.empty()) continue;
    auto& acc = by_candidate[c.normalized_candidate];
    ++acc.count;
    ++total;
    if (use_logprobs) {
      acc.prob_sum += std::exp(-*c.mean_nll);
      acc.nll_sum += *c.mean_nll;
    }
  }
  if (total == 0) {
    throw EmptyEvidence(std::string("no usable completions in the ") +
                        std::string(to_string(arm)) + " arm");
  }

  Tally out;
  out.arm = arm;
  out.effective_sample_size = total;
  for (const auto& [candidate, acc] : by_candidate) {
    CandidateEvidence e;
    e.candidate = candidate;
    e.count = acc.count;
    e.freq = static_cast<double>(acc.count) / static_cast<double>(total);
    if (use_logprobs) {
      const double n = static_cast<double>(acc.count);
      e.weight = acc.prob_sum / n;
      e.mean_nll = acc.nll_sum / n;
    }
    out.candidates.push_back(std::move(e));
  }
  return out;
}

ScoredEvidence score_and_calibrate(const Tally& named, const Tally& baseline,
                                   double lambda) {
  if (named.candidates.empty()) {
    throw EmptyEvidence("named arm has no candidates");
  }
  std::map<std::string, const CandidateEvidence*> base;
  for (const auto& b : baseline.candidates) base[b.candidate] = &b;

  ScoredEvidence out;
  out.effective_sample_size = named.effective_sample_size;
  out.baseline_sample_size = baseline.effective_sample_size;
  out.lambda = lambda;
  bool any_positive = false;
  for (auto e : named.candidates) {
    e.raw_score = e.freq * e.weight;
    if (auto it = base.find(e.candidate); it != base.end()) {
      e.baseline_freq = it->second->freq;
      e.baseline_raw_score = it->second->freq * it->second->weight;
    } else {
      e.baseline_freq = 0.0;
      e.baseline_raw_score = 0.0;
    }
    e.calibrated_score = std::max(0.0, e.raw_score - lambda * e.baseline_raw_score);
    any_positive = any_positive || e.calibrated_score > 0.0;
    out.candidates.push_back(std::move(e));
  }
  out.default_fallback = !any_positive;
  return out;
}

std::vector<Prediction> association_strengths(
    std::span<const CandidateEvidence> evidence, std::size_t top_k,
    bool fallback) {
  auto score = [fallback](const CandidateEvidence& c) {
    return fallback ? c.raw_score : c.calibrated_score;
  };
  std::vector<const CandidateEvidence*> ranked;
  for (const auto& e : evidence) {
    if (fallback || score(e) > 0.0) ranked.push_back(&e);
  }
  std::sort(ranked.begin(), ranked.end(),
            [&](const CandidateEvidence* a, const CandidateEvidence* b) {
              return ranks_before(*a, score(*a), *b, score(*b));
            });
  if (ranked.size() > top_k) ranked.resize(top_k);

  double total = 0.0;
  for (const auto* e : ranked) total += score(*e);
  std::vector<Prediction> out;
  if (total <= 0.0) return out;
  out.reserve(ranked.size());
  for (const auto* e : ranked) out.push_back({e->candidate, score(*e) / total});
  return out;
}

std::vector<Prediction> association_strengths(const ScoredEvidence& evidence,
                                              std::size_t top_k) {
  return association_strengths(evidence.candidates, top_k,
                               evidence.default_fallback);
}

double confidence(std::span<const Prediction> strengths) {
  const std::size_t m = strengths.size();
  if (m == 0) return 0.0;
  if (m == 1) return 1.0;
  double entropy = 0.0;
  for (const auto& p : strengths) {
    if (p.strength > 0.0) entropy -= p.strength * std::log(p.strength);
  }
  const double c = 1.0 - entropy / std::log(static_cast<double>(m));
  return std::clamp(c, 0.0, 1.0);
}

ProvenanceLabel provenance_label(const ScoredEvidence& evidence,
                                 const PropertySpec& spec) {
  if (evidence.default_fallback) return ProvenanceLabel::kGuessed;
  const CandidateEvidence* top = nullptr;
  for (const auto& e : evidence.candidates) {
    if (top == nullptr ||
        ranks_before(e, e.calibrated_score, *top, top->calibrated_score)) {
      top = &e;
    }
  }
  if (top == nullptr || top->calibrated_score <= 0.0) {
    return ProvenanceLabel::kIndeterminate;
  }
  return spec.cardinality_class == CardinalityClass::kOpen
             ? ProvenanceLabel::kDirect
             : ProvenanceLabel::kInferred;
}

ResultsCard build_results_card(const PropertySpec& spec,
                               const ScoredEvidence& evidence,
                               std::size_t top_k) {
  ResultsCard card;
  card.property_id = spec.property_id;
  card.top_predictions = association_strengths(evidence, top_k);
  card.confidence = confidence(card.top_predictions);
  card.provenance_label = provenance_label(evidence, spec);
  card.effective_sample_size = evidence.effective_sample_size;
  card.default_fallback = evidence.default_fallback;
  return card;
}

ResultsCard error_card(const std::string& property_id,
                       const std::string& message) {
  ResultsCard card;
  card.property_id = property_id;
  card.error = message;
  return card;
}

ResultsCard aggregate_property(const PropertySpec& spec,
                               std::span<const Completion> completions,
                               const AggregationConfig& config,
                               std::size_t failed_probes) {
  std::vector<Completion> own;
  for (const auto& c : completions) {
    if (c.property_id == spec.property_id) own.push_back(c);
  }
  // Log-probabilities are only used when both arms carry them throughout.
  WeightMode mode = config.weight_mode;
  if (mode == WeightMode::kAuto) {
    const bool all = std::all_of(own.begin(), own.end(), [](const Completion& c) {
      return c.mean_nll.has_value();
    });
    mode = all ? WeightMode::kLogprobs : WeightMode::kVotes;
  }

  ResultsCard card;
  try {
    const Tally named = tally(own, SubjectMode::kNamed, mode);
    Tally baseline{SubjectMode::kGeneric, 0, {}};
    try {
      baseline = tally(own, SubjectMode::kGeneric, mode);
    } catch (const EmptyEvidence&) {
      // No baseline evidence: calibration subtracts nothing.
    }
    card = build_results_card(
        spec, score_and_calibrate(named, baseline, config.lambda), config.top_k);
  } catch (const EmptyEvidence& e) {
    card = error_card(spec.property_id, e.what());
  }
  card.failed_probes = failed_probes;
  return card;
}

json card_to_json(const ResultsCard& card) {
  json preds = json::array();
  for (const auto& p : card.top_predictions) {
    preds.push_back({{"candidate", p.candidate}, {"strength", p.strength}});
  }
  return json{
      {"property_id", card.property_id},
      {"top_predictions", std::move(preds)},
      {"confidence", card.confidence},
      {"provenance_label", to_string(card.provenance_label)},
      {"effective_sample_size", card.effective_sample_size},
      {"default_fallback", card.default_fallback},
      {"evidence_ref", card.evidence_ref},
      {"failed_probes", card.failed_probes},
      {"error", card.error ? json(*card.error) : json(nullptr)},
  };
}

ResultsCard card_from_json(const json& j) {
  ResultsCard card;
  card.property_id = j.at("property_id").get<std::string>();
  for (const auto& p : j.at("top_predictions")) {
    card.top_predictions.push_back(
        {p.at("candidate").get<std::string>(), p.at("strength").get<double>()});
  }
  card.confidence = j.at("confidence").get<double>();
  card.provenance_label =
      parse_provenance_label(j.at("provenance_label").get<std::string>());
  card.effective_sample_size = j.at("effective_sample_size").get<std::size_t>();
  card.default_fallback = j.at("default_fallback").get<bool>();
  card.evidence_ref = j.at("evidence_ref").get<std::string>();
  card.failed_probes = j.at("failed_probes").get<std::size_t>();
  if (const auto& err = j.at("error"); !err.is_null()) {
    card.error = err.get<std::string>();
  }
  return card;
}

}  // namespace lmp2
