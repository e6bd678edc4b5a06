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

#include "lmp2/mock_model.h"

#include <cmath>
#include <random>

#include "lmp2/util.h"

namespace lmp2 {

using nlohmann::json;

namespace {

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidConfig(what + " probability must lie in [0, 1]");
  }
}

// Probe ids end in ":<arm>:p<i>:<slot>"; the arm field is blanked so both
// arms draw from the same stream. Other ids are used as they are.
std::string paired_key(const std::string& probe_id) {
  std::size_t pos = probe_id.size();
  for (int i = 0; i < 3; ++i) {
    pos = probe_id.rfind(':', pos == 0 ? 0 : pos - 1);
    if (pos == std::string::npos) return probe_id;
  }
  const auto end = probe_id.find(':', pos + 1);
  return probe_id.substr(0, pos + 1) + "*" + probe_id.substr(end);
}

}  // namespace

const std::vector<std::string>& default_noise_vocabulary(ValueFormat format) {
  static const std::vector<std::string> kText = {
      "Amber",   "Bristol", "Carver",  "Delta",   "Ember",   "Falcon",
      "Garnet",  "Harbor",  "Indigo",  "Juniper", "Kestrel", "Linden",
      "Meadow",  "Nimbus",  "Orchid",  "Pioneer", "Quarry",  "Raven",
      "Saffron", "Thistle", "Umber",   "Violet",  "Willow",  "Xenon",
      "Yarrow",  "Zephyr",  "Aspen",   "Birch",   "Cedar",   "Dune",
      "Elm",     "Fjord",   "Glacier", "Heath",   "Iris",    "Jasper",
      "Kelp",    "Lagoon",  "Maple",   "Nettle"};
  static const std::vector<std::string> kDate = {
      "1 January 1970", "14 February 1982", "3 March 1991",  "22 April 1965",
      "9 May 1977",     "30 June 1988",     "11 July 1959",  "5 August 1994",
      "17 September 1972", "28 October 1968", "2 November 1985",
      "19 December 1979", "7 January 1990",  "25 March 1961", "13 May 1983",
      "8 August 1975",    "21 October 1999", "4 December 1957", "16 June 1993",
      "27 February 1980"};
  static const std::vector<std::string> kNumber = {
      "0",  "1",  "2",  "3",  "4",   "5",   "6",   "7",   "8",   "9",
      "12", "15", "20", "42", "64",  "75",  "88",  "100", "150", "180"};
  static const std::vector<std::string> kPhone = {
      "+1",          "+44 20 7946 0000", "+49 30 123456", "+33 1 23 45 67",
      "555-0100",    "555-0199",         "+1 202 555 0143", "+39 06 1234 5678",
      "+34 91 123 45 67", "+31 20 123 4567", "+46 8 123 456", "+45 12 34 56 78",
      "+353 1 234 5678",  "+43 1 234567",   "+48 22 123 45 67", "+351 21 123 4567"};
  switch (format) {
    case ValueFormat::kDate:
      return kDate;
    case ValueFormat::kNumber:
      return kNumber;
    case ValueFormat::kPhone:
      return kPhone;
    case ValueFormat::kText:
      break;
  }
  return kText;
}

MockModel::MockModel(MockModelConfig config) : config_(std::move(config)) {
  for (const auto& [key, e] : config_.planted) {
    check_probability(e.probability, "planted '" + key.first + "'/" + key.second);
  }
  for (const auto& [property, e] : config_.defaults) {
    check_probability(e.probability, "default for '" + property + "'");
  }
  for (auto format : {ValueFormat::kText, ValueFormat::kDate,
                      ValueFormat::kNumber, ValueFormat::kPhone}) {
    auto& vocab = config_.noise[format];
    if (vocab.empty()) vocab = default_noise_vocabulary(format);
  }
}

void MockModel::use_formats_from(const Catalog& catalog) {
  for (const auto& p : catalog.properties()) {
    config_.formats[p.property_id] = p.value_format;
  }
}

MockModel::Draw MockModel::draw(const ProbeSpec& probe) const {
  std::mt19937_64 engine(
      splitmix64(config_.seed ^ fnv1a64(paired_key(probe.probe_id))));
  const double u = uniform_unit(engine);

  const Emission* source = nullptr;
  if (probe.subject_mode == SubjectMode::kNamed) {
    auto it = config_.planted.find({probe.subject, probe.property_id});
    if (it != config_.planted.end()) source = &it->second;
  }
  if (source == nullptr) {
    auto it = config_.defaults.find(probe.property_id);
    if (it != config_.defaults.end()) source = &it->second;
  }
  const double fire = source ? source->probability : 0.0;
  if (source && u < fire) return {source->value, fire};

  auto fit = config_.formats.find(probe.property_id);
  const ValueFormat format =
      fit == config_.formats.end() ? ValueFormat::kText : fit->second;
  const auto& vocab = config_.noise.at(format);
  const auto pick = uniform_below(engine, vocab.size());
  return {vocab[pick], (1.0 - fire) / static_cast<double>(vocab.size())};
}

Completion MockModel::complete(const ProbeSpec& probe) const {
  Draw d = draw(probe);
  std::optional<std::vector<TokenLogprob>> logprobs;
  if (config_.emit_logprobs) {
    logprobs = std::vector<TokenLogprob>{{d.text, std::log(d.probability)}};
  }
  return make_completion(probe, std::move(d.text), std::move(logprobs),
                         kModelId, config_.model_version);
}

BackendReply MockModel::send(const ProbeSpec& probe,
                             const RequestOptions& options) {
  Completion c = complete(probe);
  BackendReply reply;
  reply.status = 200;
  reply.text = c.raw_text;
  if (options.want_logprobs) reply.logprobs = c.token_logprobs;
  reply.model_version = c.model_version;
  return reply;
}

MockModelConfig mock_config_from_json(const json& j) {
  MockModelConfig config;
  config.seed = j.value("seed", std::uint64_t{0});
  config.emit_logprobs = j.value("emit_logprobs", false);
  config.model_version = j.value("model_version", std::string("mock-1"));
  for (const auto& p : j.value("planted", json::array())) {
    config.planted[{p.at("subject").get<std::string>(),
                    p.at("property_id").get<std::string>()}] =
        Emission{p.at("value").get<std::string>(), p.at("q").get<double>()};
  }
  for (const auto& d : j.value("defaults", json::array())) {
    config.defaults[d.at("property_id").get<std::string>()] =
        Emission{d.at("value").get<std::string>(), d.at("b").get<double>()};
  }
  const json noise = j.value("noise", json::object());
  for (const auto& [format, words] : noise.items()) {
    config.noise[parse_value_format(format)] =
        words.get<std::vector<std::string>>();
  }
  return config;
}

}  // namespace lmp2
