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

#include "lmp2/probe_builder.h"

#include <algorithm>
#include <cstdio>
#include <random>

#include "lmp2/errors.h"
#include "lmp2/util.h"

namespace lmp2 {

using nlohmann::json;

namespace {

std::vector<std::string> format_alphabet(ValueFormat format) {
  std::vector<std::string> out;
  if (format == ValueFormat::kText) {
    out.reserve(26 * 26);
    for (char hi = 'A'; hi <= 'Z'; ++hi) {
      for (char lo = 'a'; lo <= 'z'; ++lo) out.push_back({hi, lo});
    }
  } else {
    out.reserve(100);
    for (char hi = '0'; hi <= '9'; ++hi) {
      for (char lo = '0'; lo <= '9'; ++lo) out.push_back({hi, lo});
    }
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string default_set_id(const PropertySpec& spec, std::string_view subject,
                           std::uint64_t seed) {
  std::string key(subject);
  key += '\x1f';
  key += spec.property_id;
  return spec.property_id + "-" + hex64(fnv1a64(key, splitmix64(seed)));
}

std::uint64_t counterfactual_seed(const PropertySpec& spec,
                                  std::uint64_t seed) {
  return splitmix64(seed ^ fnv1a64(spec.property_id));
}

void check_config(const PropertySpec& spec, std::string_view subject,
                  const ProbeConfig& config) {
  if (is_blank(subject)) throw InvalidConfig("subject name is blank");
  if (config.paraphrases == 0) {
    throw InvalidConfig("paraphrase count must be at least 1");
  }
  if (config.paraphrases > spec.paraphrases.size()) {
    throw InvalidConfig("paraphrase count " +
                        std::to_string(config.paraphrases) + " exceeds the " +
                        std::to_string(spec.paraphrases.size()) +
                        " templates of '" + spec.property_id + "'");
  }
}

ProbeSet assemble(const PropertySpec& spec, std::string_view subject_name,
                  std::vector<std::string> true_prefixes,
                  std::vector<std::string> counterfactuals,
                  const ProbeConfig& config, std::string set_id) {
  ProbeSet set;
  set.set_id = std::move(set_id);
  set.property_id = spec.property_id;
  set.true_prefixes = std::move(true_prefixes);
  set.counterfactual_prefixes = std::move(counterfactuals);
  set.config = config;

  struct Slot {
    std::string prefix;
    PrefixKind kind;
    std::string tag;
  };
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < set.true_prefixes.size(); ++i) {
    slots.push_back({set.true_prefixes[i], PrefixKind::kTruePrefix,
                     "t" + std::to_string(i)});
  }
  for (std::size_t i = 0; i < set.counterfactual_prefixes.size(); ++i) {
    slots.push_back({set.counterfactual_prefixes[i], PrefixKind::kCounterfactual,
                     "c" + std::to_string(i)});
  }

  const std::string named(subject_name);
  set.probes.reserve(2 * config.paraphrases * slots.size());
  for (SubjectMode mode : {SubjectMode::kNamed, SubjectMode::kGeneric}) {
    const std::string subject =
        mode == SubjectMode::kNamed ? named : std::string(kGenericSubject);
    const char arm = mode == SubjectMode::kNamed ? 'n' : 'g';
    for (std::size_t p = 0; p < config.paraphrases; ++p) {
      for (const auto& slot : slots) {
        ProbeSpec probe;
        probe.probe_id = set.set_id + ":" + arm + ":p" + std::to_string(p) +
                         ":" + slot.tag;
        probe.property_id = spec.property_id;
        probe.paraphrase_index = p;
        probe.prefix = slot.prefix;
        probe.prefix_kind = slot.kind;
        probe.subject_mode = mode;
        probe.subject = subject;
        probe.prompt_text = render_canary(spec, p, subject, slot.prefix);
        probe.seed = config.seed;
        set.probes.push_back(std::move(probe));
      }
    }
  }
  return set;
}

}  // namespace

std::string_view to_string(PrefixKind k) {
  return k == PrefixKind::kTruePrefix ? "true_prefix" : "counterfactual";
}

std::string_view to_string(SubjectMode m) {
  return m == SubjectMode::kNamed ? "named" : "generic";
}

PrefixKind parse_prefix_kind(std::string_view s) {
  if (s == "true_prefix") return PrefixKind::kTruePrefix;
  if (s == "counterfactual") return PrefixKind::kCounterfactual;
  throw ParseError("unknown prefix_kind '" + std::string(s) + "'");
}

SubjectMode parse_subject_mode(std::string_view s) {
  if (s == "named") return SubjectMode::kNamed;
  if (s == "generic") return SubjectMode::kGeneric;
  throw ParseError("unknown subject_mode '" + std::string(s) + "'");
}

void validate_triple(const SubjectTriple& triple) {
  if (is_blank(triple.subject_name)) {
    throw ValidationError("subject name is blank");
  }
  for (const auto& v : triple.ground_truth_values) {
    if (is_blank(v)) {
      throw ValidationError("blank ground-truth value for '" +
                            triple.subject_name + "' / " + triple.property_id);
    }
  }
}

std::string truncate_to_prefix(std::string_view value) {
  std::string_view v = trim(value);
  if (v.empty()) throw EmptyValue("cannot truncate a blank value");
  const auto space = v.find_first_of(" \t\r\n\f\v");
  if (space != std::string_view::npos) v = v.substr(0, space);
  const auto points = utf8_code_points(v);
  std::string out;
  for (std::size_t i = 0; i < points.size() && i < kMaxPrefixLength; ++i) {
    out += points[i];
  }
  return out;
}

std::vector<std::string> generate_counterfactual_prefixes(
    ValueFormat format, const std::set<std::string>& excluded,
    std::size_t count, std::uint64_t seed) {
  if (count == 0) return {};
  std::vector<std::string> pool = format_alphabet(format);
  std::set<std::string> folded;
  for (const auto& e : excluded) folded.insert(ascii_lower(e));
  std::erase_if(pool, [&](const std::string& p) {
    return folded.contains(ascii_lower(p));
  });
  if (count > pool.size()) {
    throw AlphabetExhausted("requested " + std::to_string(count) +
                            " counterfactual prefixes but only " +
                            std::to_string(pool.size()) + " are available");
  }
  std::mt19937_64 engine(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + uniform_below(engine, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

ProbeSet build_probe_set(const PropertySpec& spec, std::string_view subject_name,
                         const std::vector<std::string>& true_prefixes,
                         const ProbeConfig& config, std::string set_id) {
  check_config(spec, subject_name, config);
  if (true_prefixes.empty()) throw InvalidConfig("no true prefixes given");
  std::vector<std::string> distinct;
  for (const auto& p : true_prefixes) {
    if (p.empty() || utf8_length(p) > kMaxPrefixLength) {
      throw InvalidConfig("true prefix '" + p +
                          "' must be 1 or 2 characters long");
    }
    if (std::find(distinct.begin(), distinct.end(), p) == distinct.end()) {
      distinct.push_back(p);
    }
  }
  const std::set<std::string> excluded(distinct.begin(), distinct.end());
  auto counterfactuals = generate_counterfactual_prefixes(
      spec.value_format, excluded, config.counterfactuals,
      counterfactual_seed(spec, config.seed));
  if (set_id.empty()) set_id = default_set_id(spec, subject_name, config.seed);
  return assemble(spec, subject_name, std::move(distinct),
                  std::move(counterfactuals), config, std::move(set_id));
}

ProbeSet build_counterfactual_probe_set(const PropertySpec& spec,
                                        std::string_view subject_name,
                                        const ProbeConfig& config,
                                        std::string set_id) {
  check_config(spec, subject_name, config);
  auto counterfactuals = generate_counterfactual_prefixes(
      spec.value_format, {}, config.counterfactuals + 1,
      counterfactual_seed(spec, config.seed));
  if (set_id.empty()) set_id = default_set_id(spec, subject_name, config.seed);
  return assemble(spec, subject_name, {}, std::move(counterfactuals), config,
                  std::move(set_id));
}

json probe_to_json(const ProbeSpec& probe) {
  return json{
      {"probe_id", probe.probe_id},
      {"property_id", probe.property_id},
      {"paraphrase_index", probe.paraphrase_index},
      {"prefix", probe.prefix},
      {"prefix_kind", to_string(probe.prefix_kind)},
      {"subject_mode", to_string(probe.subject_mode)},
      {"subject", probe.subject},
      {"prompt_text", probe.prompt_text},
      {"seed", probe.seed},
  };
}

ProbeSpec probe_from_json(const json& j) {
  ProbeSpec p;
  p.probe_id = j.at("probe_id").get<std::string>();
  p.property_id = j.at("property_id").get<std::string>();
  p.paraphrase_index = j.at("paraphrase_index").get<std::size_t>();
  p.prefix = j.at("prefix").get<std::string>();
  p.prefix_kind = parse_prefix_kind(j.at("prefix_kind").get<std::string>());
  p.subject_mode = parse_subject_mode(j.at("subject_mode").get<std::string>());
  p.subject = j.at("subject").get<std::string>();
  p.prompt_text = j.at("prompt_text").get<std::string>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

json probe_set_to_json(const ProbeSet& set) {
  json probes = json::array();
  for (const auto& p : set.probes) probes.push_back(probe_to_json(p));
  return json{
      {"set_id", set.set_id},
      {"property_id", set.property_id},
      {"true_prefixes", set.true_prefixes},
      {"counterfactual_prefixes", set.counterfactual_prefixes},
      {"config",
       {{"paraphrases", set.config.paraphrases},
        {"counterfactuals", set.config.counterfactuals},
        {"seed", set.config.seed}}},
      {"probes", std::move(probes)},
  };
}

ProbeSet probe_set_from_json(const json& j) {
  ProbeSet s;
  s.set_id = j.at("set_id").get<std::string>();
  s.property_id = j.at("property_id").get<std::string>();
  s.true_prefixes = j.at("true_prefixes").get<std::vector<std::string>>();
  s.counterfactual_prefixes =
      j.at("counterfactual_prefixes").get<std::vector<std::string>>();
  const auto& c = j.at("config");
  s.config.paraphrases = c.at("paraphrases").get<std::size_t>();
  s.config.counterfactuals = c.at("counterfactuals").get<std::size_t>();
  s.config.seed = c.at("seed").get<std::uint64_t>();
  for (const auto& p : j.at("probes")) s.probes.push_back(probe_from_json(p));
  return s;
}

}  // namespace lmp2
