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

#include "lmp2/eval_harness.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lmp2/errors.h"
#include "lmp2/util.h"
#include "lmp2/value_match.h"

namespace lmp2 {

using nlohmann::json;

namespace {

std::string format_real(std::optional<double> v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

json optional_json(std::optional<double> v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> harmonic(std::optional<double> p, std::optional<double> r) {
  if (!p || !r) return std::nullopt;
  if (*p + *r == 0.0) return 0.0;
  return 2.0 * *p * *r / (*p + *r);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string_view to_string(SubjectSetKind kind) {
  switch (kind) {
    case SubjectSetKind::kFamousLike:
      return "famous_like";
    case SubjectSetKind::kSyntheticLike:
      return "synthetic_like";
    case SubjectSetKind::kCustom:
      break;
  }
  return "custom";
}

SubjectSetKind parse_subject_set_kind(std::string_view s) {
  if (s == "famous_like") return SubjectSetKind::kFamousLike;
  if (s == "synthetic_like") return SubjectSetKind::kSyntheticLike;
  if (s == "custom") return SubjectSetKind::kCustom;
  throw ValidationError("unknown subject set '" + std::string(s) + "'");
}

SubjectSet load_subject_set(std::string_view document, const Catalog& catalog) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("dataset is not valid JSON: ") + e.what());
  }
  SubjectSet set;
  try {
    set.kind = parse_subject_set_kind(doc.at("name").get<std::string>());
    std::set<std::string> names;
    for (const auto& subject : doc.at("subjects")) {
      const auto name = subject.at("name").get<std::string>();
      if (is_blank(name)) throw ValidationError("blank subject name");
      if (!names.insert(name).second) {
        throw ValidationError("duplicate subject '" + name + "'");
      }
      std::vector<SubjectTriple> triples;
      if (subject.contains("truths")) {
        for (const auto& [property, values] : subject["truths"].items()) {
          triples.push_back(
              {name, property, values.get<std::vector<std::string>>()});
        }
      }
      if (subject.contains("properties")) {
        for (const auto& property : subject["properties"]) {
          triples.push_back({name, property.get<std::string>(), {}});
        }
      }
      if (triples.empty()) {
        throw ValidationError("subject '" + name + "' lists no properties");
      }
      for (auto& t : triples) {
        validate_triple(t);
        if (catalog.find(t.property_id) == nullptr) {
          throw ValidationError("unknown property '" + t.property_id +
                                "' for subject '" + name + "'");
        }
        if (set.kind == SubjectSetKind::kSyntheticLike &&
            !t.ground_truth_values.empty()) {
          throw ValidationError("synthetic-like subject '" + name +
                                "' must not carry ground truths");
        }
        if (set.kind == SubjectSetKind::kFamousLike &&
            t.ground_truth_values.empty()) {
          throw ValidationError("famous-like subject '" + name +
                                "' has no truths for " + t.property_id);
        }
        set.subjects.push_back(std::move(t));
      }
    }
    if (doc.contains("mock")) {
      set.mock = mock_config_from_json(doc["mock"]);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset does not match schema: ") + e.what());
  }
  if (set.subjects.empty()) throw ValidationError("dataset has no subjects");
  return set;
}

SubjectSet load_subject_set_file(const std::string& path, const Catalog& catalog) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open dataset " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_subject_set(buf.str(), catalog);
}

ScoreContribution score_subject_property(const ResultsCard& card,
                                         const std::vector<std::string>& truths,
                                         ValueFormat format) {
  ScoreContribution out;
  if (card.empty()) {
    out.false_negatives = truths.size();
    return out;
  }
  if (match_prediction(card.top_predictions.front().candidate, truths, format)) {
    out.true_positives = 1;
  } else {
    out.false_positives = 1;
  }
  for (const auto& truth : truths) {
    const bool found = std::any_of(
        card.top_predictions.begin(), card.top_predictions.end(),
        [&](const Prediction& p) {
          return match_prediction(p.candidate, {truth}, format);
        });
    ++(found ? out.recovered : out.false_negatives);
  }
  return out;
}

void finalize(PropertyMetrics& m) {
  m.precision = ratio(m.true_positives, m.true_positives + m.false_positives);
  m.recall = ratio(m.recovered, m.recovered + m.false_negatives);
  m.f1 = harmonic(m.precision, m.recall);
}

void finalize(MicroMetrics& m) {
  m.precision = ratio(m.true_positives, m.true_positives + m.false_positives);
  m.recall = ratio(m.recovered, m.recovered + m.false_negatives);
  m.f1 = harmonic(m.precision, m.recall);
}

std::size_t histogram_bin(double confidence) {
  const double c = std::clamp(confidence, 0.0, 1.0);
  return std::min(kHistogramBins - 1,
                  static_cast<std::size_t>(std::floor(c * kHistogramBins)));
}

std::pair<std::vector<std::string>, std::vector<std::string>> rank_properties(
    const std::vector<PropertyMetrics>& metrics, std::size_t n) {
  std::vector<const PropertyMetrics*> defined;
  for (const auto& m : metrics) {
    if (m.precision) defined.push_back(&m);
  }
  auto by_desc = [](const PropertyMetrics* a, const PropertyMetrics* b) {
    if (*a->precision != *b->precision) return *a->precision > *b->precision;
    return a->property_id < b->property_id;
  };
  auto by_asc = [](const PropertyMetrics* a, const PropertyMetrics* b) {
    if (*a->precision != *b->precision) return *a->precision < *b->precision;
    return a->property_id < b->property_id;
  };
  std::vector<std::string> top, bottom;
  std::sort(defined.begin(), defined.end(), by_desc);
  for (std::size_t i = 0; i < defined.size() && i < n; ++i) {
    top.push_back(defined[i]->property_id);
  }
  std::sort(defined.begin(), defined.end(), by_asc);
  for (std::size_t i = 0; i < defined.size() && i < n; ++i) {
    bottom.push_back(defined[i]->property_id);
  }
  return {top, bottom};
}

EvalReport evaluate(const SubjectSet& set, const Catalog& catalog,
                    const ModelGateway& gateway, const EvalConfig& config) {
  EvalReport report;
  report.kind = set.kind;
  report.model_id = gateway.config().model_id;

  std::vector<ProbeSet> probe_sets;
  std::vector<ProbeSpec> all_probes;
  std::map<std::string, std::size_t> owner;
  for (std::size_t i = 0; i < set.subjects.size(); ++i) {
    const auto& triple = set.subjects[i];
    const auto& spec = catalog.at(triple.property_id);
    char id[24];
    std::snprintf(id, sizeof id, "s%04zu", i);
    const std::string set_id = std::string(id) + "-" + spec.property_id;
    ProbeSet ps;
    if (triple.ground_truth_values.empty()) {
      ps = build_counterfactual_probe_set(spec, triple.subject_name,
                                          config.probes, set_id);
    } else {
      std::vector<std::string> prefixes;
      for (const auto& v : triple.ground_truth_values) {
        prefixes.push_back(truncate_to_prefix(v));
      }
      ps = build_probe_set(spec, triple.subject_name, prefixes, config.probes,
                           set_id);
    }
    for (const auto& p : ps.probes) {
      owner[p.probe_id] = i;
      all_probes.push_back(p);
    }
    probe_sets.push_back(std::move(ps));
  }
  report.probe_count = all_probes.size();

  const RunResult run = gateway.run(all_probes);
  report.failure_count = run.failures.size();

  std::vector<std::vector<Completion>> per_set(set.subjects.size());
  for (const auto& c : run.completions) {
    per_set[owner.at(c.probe_id)].push_back(c);
    report.completions.emplace_back(set.subjects[owner.at(c.probe_id)].subject_name, c);
    if (std::find(report.model_versions.begin(), report.model_versions.end(),
                  c.model_version) == report.model_versions.end()) {
      report.model_versions.push_back(c.model_version);
    }
  }
  std::vector<std::size_t> failed(set.subjects.size(), 0);
  for (const auto& f : run.failures) ++failed[owner.at(f.probe_id)];

  std::map<std::string, std::size_t> metric_index;
  std::vector<double> confidence_sums;
  std::vector<std::size_t> confidence_counts;
  double confidence_total = 0.0;
  std::size_t confidence_n = 0;
  std::size_t fallbacks = 0;
  std::size_t guessed = 0;

  for (std::size_t i = 0; i < set.subjects.size(); ++i) {
    const auto& triple = set.subjects[i];
    const auto& spec = catalog.at(triple.property_id);
    ResultsCard card =
        aggregate_property(spec, per_set[i], config.aggregation, failed[i]);

    auto [it, inserted] =
        metric_index.try_emplace(spec.property_id, report.properties.size());
    if (inserted) {
      report.properties.push_back({});
      report.properties.back().property_id = spec.property_id;
      confidence_sums.push_back(0.0);
      confidence_counts.push_back(0);
    }
    PropertyMetrics& m = report.properties[it->second];
    ++m.sample_size;
    if (card.empty()) {
      ++m.empty_cards;
    } else {
      confidence_sums[it->second] += card.confidence;
      ++confidence_counts[it->second];
      confidence_total += card.confidence;
      ++confidence_n;
      ++report.confidence_histogram[histogram_bin(card.confidence)];
    }
    if (card.default_fallback) {
      ++m.default_fallbacks;
      ++fallbacks;
    }
    if (card.provenance_label == ProvenanceLabel::kGuessed) ++guessed;

    if (!triple.ground_truth_values.empty()) {
      const auto s = score_subject_property(card, triple.ground_truth_values,
                                            spec.value_format);
      m.true_positives += s.true_positives;
      m.false_positives += s.false_positives;
      m.false_negatives += s.false_negatives;
      m.recovered += s.recovered;
      report.micro.true_positives += s.true_positives;
      report.micro.false_positives += s.false_positives;
      report.micro.false_negatives += s.false_negatives;
      report.micro.recovered += s.recovered;
    }
    report.cards.push_back({triple.subject_name, std::move(card)});
  }

  for (std::size_t k = 0; k < report.properties.size(); ++k) {
    auto& m = report.properties[k];
    m.mean_confidence =
        confidence_counts[k] == 0
            ? 0.0
            : confidence_sums[k] / static_cast<double>(confidence_counts[k]);
    finalize(m);
  }
  finalize(report.micro);
  const double n = static_cast<double>(set.subjects.size());
  report.mean_confidence =
      confidence_n == 0 ? 0.0 : confidence_total / static_cast<double>(confidence_n);
  report.default_fallback_rate = static_cast<double>(fallbacks) / n;
  report.guessed_rate = static_cast<double>(guessed) / n;
  std::tie(report.top_properties, report.bottom_properties) =
      rank_properties(report.properties);
  return report;
}

std::string metrics_csv(const EvalReport& report, const Catalog& catalog) {
  std::ostringstream out;
  out << "property_id,label,category,sample_size,true_positives,false_positives,"
         "false_negatives,recovered,precision,recall,f1,mean_confidence,"
         "default_fallback_rate\n";
  for (const auto& m : report.properties) {
    const auto& spec = catalog.at(m.property_id);
    out << m.property_id << ",\"" << spec.label << "\"," << to_string(spec.category)
        << ',' << m.sample_size << ',' << m.true_positives << ','
        << m.false_positives << ',' << m.false_negatives << ',' << m.recovered
        << ',' << format_real(m.precision) << ',' << format_real(m.recall) << ','
        << format_real(m.f1) << ',' << format_real(m.mean_confidence) << ','
        << format_real(m.default_fallback_rate()) << '\n';
  }
  std::size_t total = 0;
  for (const auto& m : report.properties) total += m.sample_size;
  out << "ALL,\"micro\",," << total << ',' << report.micro.true_positives << ','
      << report.micro.false_positives << ',' << report.micro.false_negatives
      << ',' << report.micro.recovered << ',' << format_real(report.micro.precision)
      << ',' << format_real(report.micro.recall) << ','
      << format_real(report.micro.f1) << ',' << format_real(report.mean_confidence)
      << ',' << format_real(report.default_fallback_rate) << '\n';
  return out.str();
}

std::string histogram_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "subject_set,bin_lower,bin_upper,count\n";
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    char bounds[32];
    std::snprintf(bounds, sizeof bounds, "%.1f,%.1f",
                  static_cast<double>(b) / kHistogramBins,
                  static_cast<double>(b + 1) / kHistogramBins);
    out << to_string(report.kind) << ',' << bounds << ','
        << report.confidence_histogram[b] << '\n';
  }
  return out.str();
}

json run_manifest(const EvalReport& report, const Catalog& catalog,
                  const EvalConfig& config) {
  return json{
      {"subject_set", to_string(report.kind)},
      {"catalog_version", catalog.version()},
      {"model_id", report.model_id},
      {"model_versions", report.model_versions},
      {"config",
       {{"paraphrases", config.probes.paraphrases},
        {"counterfactuals", config.probes.counterfactuals},
        {"seed", config.probes.seed},
        {"top_k", config.aggregation.top_k},
        {"lambda", config.aggregation.lambda}}},
      {"probe_count", report.probe_count},
      {"failure_count", report.failure_count},
      {"partial", report.partial()},
      {"micro",
       {{"true_positives", report.micro.true_positives},
        {"false_positives", report.micro.false_positives},
        {"false_negatives", report.micro.false_negatives},
        {"recovered", report.micro.recovered},
        {"precision", optional_json(report.micro.precision)},
        {"recall", optional_json(report.micro.recall)},
        {"f1", optional_json(report.micro.f1)}}},
      {"mean_confidence", report.mean_confidence},
      {"default_fallback_rate", report.default_fallback_rate},
      {"guessed_rate", report.guessed_rate},
      {"top_properties", report.top_properties},
      {"bottom_properties", report.bottom_properties},
      {"metric_definitions",
       {{"precision",
         "top-1 prediction matches any ground truth; TP/(TP+FP) per "
         "subject-property pair"},
        {"recall",
         "share of ground-truth values matched by any top-K prediction"},
        {"f1", "harmonic mean of precision and recall"},
        {"ranking", "properties ordered by mean precision over subject-property pairs"}}},
      {"created_at", format_utc(Clock::now())},
  };
}

void write_report(const EvalReport& report, const Catalog& catalog,
                  const EvalConfig& config, const std::filesystem::path& out_dir,
                  json manifest_extra) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IOError("cannot create " + out_dir.string() + ": " + ec.message());
  write_text(out_dir / "metrics.csv", metrics_csv(report, catalog));
  write_text(out_dir / "confidence_histogram.csv", histogram_csv(report));

  std::string cards;
  for (const auto& sc : report.cards) {
    cards += json{{"subject", sc.subject_name}, {"card", card_to_json(sc.card)}}.dump();
    cards += '\n';
  }
  write_text(out_dir / "cards.jsonl", cards);
  std::string completions;
  for (const auto& [subject, c] : report.completions) {
    completions +=
        json{{"subject", subject}, {"completion", completion_to_json(c)}}.dump();
    completions += '\n';
  }
  write_text(out_dir / "completions.jsonl", completions);

  json manifest = run_manifest(report, catalog, config);
  manifest.update(manifest_extra);
  manifest["outputs"] = {"metrics.csv", "confidence_histogram.csv", "cards.jsonl",
                         "completions.jsonl", "run_manifest.json"};
  write_text(out_dir / "run_manifest.json", manifest.dump(2) + "\n");
}

}  // namespace lmp2
