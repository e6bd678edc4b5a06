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
#include <set>

#include "gtest/gtest.h"
#include "lmp2/errors.h"
#include "test_support.h"

namespace lmp2 {
namespace {

using testing::shipped_catalog;

ProbeSet handedness_set(const std::string& subject, std::uint64_t seed = 0) {
  return build_probe_set(shipped_catalog().at("handedness"), subject, {"le"},
                         {5, 20, seed});
}

MockModel make_mock(MockModelConfig config) {
  MockModel m(std::move(config));
  m.use_formats_from(shipped_catalog());
  return m;
}

TEST(MockModelTest, PlantedAssociationWithCertaintyAlwaysFires) {
  MockModelConfig cfg;
  cfg.planted[{"Jane Stone", "handedness"}] = {"left", 1.0};
  const auto mock = make_mock(cfg);
  for (const auto& probe : handedness_set("Jane Stone").probes) {
    const auto c = mock.complete(probe);
    if (probe.subject_mode == SubjectMode::kNamed) {
      EXPECT_EQ(c.raw_text, "left");
    } else {
      EXPECT_NE(c.raw_text, "left");
    }
  }
}

TEST(MockModelTest, DefaultFiresForUnplantedSubject) {
  MockModelConfig cfg;
  cfg.defaults["handedness"] = {"ambidextrous", 1.0};
  const auto mock = make_mock(cfg);
  for (const auto& probe : handedness_set("Nobody Known").probes) {
    EXPECT_EQ(mock.complete(probe).raw_text, "ambidextrous");
  }
}

TEST(MockModelTest, NoiseIsStableForSeed) {
  MockModelConfig cfg;
  cfg.seed = 5;
  const auto a = make_mock(cfg);
  const auto b = make_mock(cfg);
  cfg.seed = 6;
  const auto other = make_mock(cfg);
  const auto& vocab = default_noise_vocabulary(ValueFormat::kText);
  const std::set<std::string> allowed(vocab.begin(), vocab.end());
  bool differs = false;
  for (const auto& probe : handedness_set("X Y").probes) {
    const auto ca = a.complete(probe);
    const auto cb = b.complete(probe);
    EXPECT_EQ(ca.raw_text, cb.raw_text);
    EXPECT_EQ(ca.token_logprobs, cb.token_logprobs);
    EXPECT_TRUE(allowed.contains(ca.raw_text)) << ca.raw_text;
    differs = differs || ca.raw_text != other.complete(probe).raw_text;
  }
  EXPECT_TRUE(differs);
}

TEST(MockModelTest, NoiseFollowsValueFormat) {
  const auto mock = make_mock({});
  const auto& vocab = default_noise_vocabulary(ValueFormat::kDate);
  const std::set<std::string> allowed(vocab.begin(), vocab.end());
  const auto set = build_probe_set(shipped_catalog().at("date_of_birth"), "X Y",
                                   {"19"}, {2, 5, 0});
  for (const auto& probe : set.probes) {
    EXPECT_TRUE(allowed.contains(mock.complete(probe).raw_text));
  }
}

TEST(MockModelTest, EmissionRateTracksQ) {
  MockModelConfig cfg;
  cfg.planted[{"Jane Stone", "handedness"}] = {"left", 0.8};
  cfg.seed = 17;
  const auto mock = make_mock(cfg);
  std::size_t hits = 0, named = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    for (const auto& probe : handedness_set("Jane Stone", s).probes) {
      if (probe.subject_mode != SubjectMode::kNamed) continue;
      ++named;
      hits += mock.complete(probe).raw_text == "left";
    }
  }
  const double rate = static_cast<double>(hits) / static_cast<double>(named);
  EXPECT_NEAR(rate, 0.8, 0.03);
}

TEST(MockModelTest, LogprobsReflectEmissionProbability) {
  MockModelConfig cfg;
  cfg.planted[{"Jane Stone", "handedness"}] = {"left", 1.0};
  cfg.emit_logprobs = true;
  const auto mock = make_mock(cfg);
  const auto c = mock.complete(handedness_set("Jane Stone").probes.front());
  ASSERT_TRUE(c.mean_nll.has_value());
  EXPECT_DOUBLE_EQ(*c.mean_nll, 0.0);
}

TEST(MockModelTest, RejectsBadProbabilities) {
  MockModelConfig cfg;
  cfg.defaults["handedness"] = {"x", 1.5};
  EXPECT_THROW(MockModel{cfg}, InvalidConfig);
}

TEST(MockModelTest, ConfigFromJson) {
  const auto cfg = mock_config_from_json(nlohmann::json::parse(R"({
    "seed": 4, "emit_logprobs": true,
    "planted": [{"subject": "A B", "property_id": "eye_color", "value": "green", "q": 0.5}],
    "defaults": [{"property_id": "handedness", "value": "right", "b": 0.2}],
    "noise": {"text": ["foo", "bar"]}})"));
  EXPECT_EQ(cfg.seed, 4u);
  EXPECT_TRUE(cfg.emit_logprobs);
  EXPECT_EQ(cfg.planted.at({"A B", "eye_color"}).value, "green");
  EXPECT_EQ(cfg.defaults.at("handedness").probability, 0.2);
  EXPECT_EQ(cfg.noise.at(ValueFormat::kText).size(), 2u);
}

}  // namespace
}  // namespace lmp2
