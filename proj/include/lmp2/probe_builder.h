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

// Turns a subject, a property and ground-truth prefixes into the full set of
// fragment-recovery probes: true and counterfactual prefixes, named and
// generic-subject arms, across paraphrases.
#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lmp2/catalog.h"

namespace lmp2 {

inline constexpr std::size_t kMaxPrefixLength = 2;

enum class PrefixKind { kTruePrefix, kCounterfactual };
enum class SubjectMode { kNamed, kGeneric };

std::string_view to_string(PrefixKind k);
std::string_view to_string(SubjectMode m);
PrefixKind parse_prefix_kind(std::string_view s);
SubjectMode parse_subject_mode(std::string_view s);

struct SubjectTriple {
  std::string subject_name;
  std::string property_id;
  std::vector<std::string> ground_truth_values;
};

// Throws ValidationError on a blank name or blank value.
void validate_triple(const SubjectTriple& triple);

struct ProbeSpec {
  std::string probe_id;
  std::string property_id;
  std::size_t paraphrase_index = 0;
  std::string prefix;
  PrefixKind prefix_kind = PrefixKind::kTruePrefix;
  SubjectMode subject_mode = SubjectMode::kNamed;
  std::string subject;
  std::string prompt_text;
  std::uint64_t seed = 0;

  friend bool operator==(const ProbeSpec&, const ProbeSpec&) = default;
};

struct ProbeConfig {
  std::size_t paraphrases = 5;      // P
  std::size_t counterfactuals = 20;  // C
  std::uint64_t seed = 0;

  friend bool operator==(const ProbeConfig&, const ProbeConfig&) = default;
};

struct ProbeSet {
  std::string set_id;
  std::string property_id;
  std::vector<std::string> true_prefixes;
  std::vector<std::string> counterfactual_prefixes;
  ProbeConfig config;
  std::vector<ProbeSpec> probes;

  friend bool operator==(const ProbeSet&, const ProbeSet&) = default;
};

// First two code points of the trimmed value, case preserved. Multi-word
// values are truncated from their first word. Throws EmptyValue.
std::string truncate_to_prefix(std::string_view value);

// `count` distinct two-character prefixes from the format's alphabet that
// are not in `excluded`, compared ASCII case-insensitively. Text uses an uppercase letter followed by a
// lowercase letter; the other formats use two digits. Throws
// AlphabetExhausted.
std::vector<std::string> generate_counterfactual_prefixes(
    ValueFormat format, const std::set<std::string>& excluded,
    std::size_t count, std::uint64_t seed);

// Emits P x (T + C) probes per arm, named arm first. `set_id` scopes the
// probe ids; when empty it is derived from the property and seed.
// Throws InvalidConfig, AlphabetExhausted.
ProbeSet build_probe_set(const PropertySpec& spec, std::string_view subject_name,
                         const std::vector<std::string>& true_prefixes,
                         const ProbeConfig& config, std::string set_id = {});

// Variant for subjects without ground truth: every prefix is a
// counterfactual. Uses C + 1 counterfactuals so the probe budget matches a
// single-truth probe set.
ProbeSet build_counterfactual_probe_set(const PropertySpec& spec,
                                        std::string_view subject_name,
                                        const ProbeConfig& config,
                                        std::string set_id = {});

nlohmann::json probe_to_json(const ProbeSpec& probe);
ProbeSpec probe_from_json(const nlohmann::json& j);
nlohmann::json probe_set_to_json(const ProbeSet& set);
ProbeSet probe_set_from_json(const nlohmann::json& j);

}  // namespace lmp2
