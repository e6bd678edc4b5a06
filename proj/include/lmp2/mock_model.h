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

// Deterministic stand-in for a chat model. Planted name-conditioned
// associations fire with probability q on named probes; otherwise the model
// falls back to a per-property default with probability b, or to noise.
//
// A named probe and its generic-subject twin (same set, paraphrase and
// prefix) share one random stream, so a name without a planted association
// answers exactly like the generic subject.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lmp2/catalog.h"
#include "lmp2/model_gateway.h"

namespace lmp2 {

struct Emission {
  std::string value;
  double probability = 1.0;
};

struct MockModelConfig {
  // (subject_name, property_id) -> planted value and q.
  std::map<std::pair<std::string, std::string>, Emission> planted;
  // property_id -> default value and b.
  std::map<std::string, Emission> defaults;
  // Noise vocabulary per value format; built-ins fill missing formats.
  std::map<ValueFormat, std::vector<std::string>> noise;
  // property_id -> value format, used to pick the noise vocabulary.
  std::map<std::string, ValueFormat> formats;
  std::uint64_t seed = 0;
  bool emit_logprobs = false;
  std::string model_version = "mock-1";
};

const std::vector<std::string>& default_noise_vocabulary(ValueFormat format);

class MockModel : public ChatBackend {
 public:
  static constexpr const char* kModelId = "mock";

  // Throws InvalidConfig when a probability lies outside [0, 1].
  explicit MockModel(MockModelConfig config);

  // Registers the value formats of every catalog property.
  void use_formats_from(const Catalog& catalog);

  // Deterministic in (seed, probe_id with the arm marker removed).
  Completion complete(const ProbeSpec& probe) const;

  BackendReply send(const ProbeSpec& probe,
                    const RequestOptions& options) override;

  const MockModelConfig& config() const { return config_; }

 private:
  struct Draw {
    std::string text;
    double probability;
  };
  Draw draw(const ProbeSpec& probe) const;

  MockModelConfig config_;
};

// {"seed": 1, "emit_logprobs": false,
//  "planted": [{"subject", "property_id", "value", "q"}],
//  "defaults": [{"property_id", "value", "b"}],
//  "noise": {"text": [...], ...}}
MockModelConfig mock_config_from_json(const nlohmann::json& j);

}  // namespace lmp2
