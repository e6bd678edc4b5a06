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

#include "lmp2/evidence.h"

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "gtest/gtest.h"
#include "lmp2/errors.h"
#include "lmp2/mock_model.h"
#include "test_support.h"

namespace lmp2 {
namespace {

using namespace std::chrono_literals;
using testing::ScriptedBackend;
using testing::shipped_catalog;

// Runs one spouse probe set through the mock and builds a finished trace.
JobTrace mock_trace(const std::string& job_id, bool with_failures = false) {
  const auto& spec = shipped_catalog().at("spouse_name");
  MockModelConfig cfg;
  cfg.planted[{"Harry Potter", "spouse_name"}] = {"Ginny", 0.8};
  cfg.emit_logprobs = true;
  auto mock = std::make_shared<MockModel>(cfg);
  mock->use_formats_from(shipped_catalog());

  std::shared_ptr<ChatBackend> backend = mock;
  if (with_failures) {
    backend = std::make_shared<ScriptedBackend>([mock](const ProbeSpec& p, int) {
      if (p.probe_id.ends_with(":p0:c0") || p.probe_id.ends_with(":p1:c0") ||
          p.probe_id.ends_with(":p2:t0")) {
        if (p.subject_mode == SubjectMode::kNamed) {
          BackendReply r;
          r.status = 400;
          r.error = "bad request";
          return r;
        }
      }
      return mock->send(p, {});
    });
  }
  ProviderConfig pc;
  pc.model_id = "mock";
  pc.requests_per_minute = 0;
  ModelGateway gw(pc, backend);

  JobTrace t;
  t.job_id = job_id;
  t.status = JobStatus::kComplete;
  t.catalog_version = shipped_catalog().version();
  t.model_id = "mock";
  t.probe_sets.push_back(build_probe_set(spec, "Harry Potter", {"Gi"}, {5, 20, 1},
                                         job_id + "-spouse_name"));
  auto run = gw.run(t.probe_sets[0].probes);
  t.cards.push_back(aggregate_property(spec, run.completions, {}, run.failures.size()));
  t.completions = std::move(run.completions);
  t.failures = std::move(run.failures);
  t.attempts = std::move(run.attempts);
  return t;
}

TEST(SealTest, CountsEveryCall) {
  const auto pkg = seal_package(mock_trace("job-a"));
  EXPECT_EQ(pkg.call_counts().total, 210u);
  EXPECT_EQ(pkg.call_counts().named, 105u);
  EXPECT_EQ(pkg.call_counts().generic, 105u);
  EXPECT_EQ(pkg.attempts().size(), 210u);
  EXPECT_EQ(pkg.prompts().size(), 210u);
  EXPECT_EQ(pkg.model_versions(), (std::vector<std::string>{"mock-1"}));
  EXPECT_EQ(pkg.cards()[0].evidence_ref, "pkg-job-a");
  EXPECT_EQ(pkg.content_hash().size(), 64u);
}

TEST(SealTest, FailuresAreListedAndCounted) {
  const auto pkg = seal_package(mock_trace("job-b", true));
  EXPECT_EQ(pkg.failures().size(), 3u);
  EXPECT_EQ(pkg.completions().size(), 207u);
  EXPECT_EQ(pkg.call_counts().total, 210u);
  EXPECT_EQ(pkg.cards()[0].failed_probes, 3u);
}

TEST(SealTest, OnlyTerminalJobsSealOnce) {
  auto t = mock_trace("job-c");
  t.status = JobStatus::kRunning;
  EXPECT_THROW(seal_package(t), JobNotTerminal);
  t.status = JobStatus::kComplete;
  EvidenceStore store;
  const auto& pkg = store.seal(t);
  EXPECT_EQ(store.find("job-c"), &pkg);
  EXPECT_THROW(store.seal(t), AlreadySealed);
  EXPECT_EQ(store.find("nope"), nullptr);
}

TEST(ExportTest, RoundTripIsIdentity) {
  const auto pkg = seal_package(mock_trace("job-d"));
  const auto dir = testing::scratch_dir("evidence");
  const auto path = export_package(pkg, dir);
  EXPECT_TRUE(std::regex_match(path.filename().string(),
                               std::regex(R"(evidence_job-d_\d{8}T\d{6}Z\.json)")));
  const auto back = import_package(path);
  EXPECT_EQ(back, pkg);
  EXPECT_EQ(back.content_hash(), pkg.content_hash());
  EXPECT_EQ(export_document(back), export_document(pkg));
  EXPECT_EQ(back.created_at(), pkg.created_at());
  EXPECT_EQ(back.completions(), pkg.completions());
}

TEST(ExportTest, EmptyFailuresSerializeAsEmptyArray) {
  const auto pkg = seal_package(mock_trace("job-e"));
  const auto j = nlohmann::json::parse(export_document(pkg));
  EXPECT_EQ(j["schema"], kEvidenceSchema);
  ASSERT_TRUE(j["failures"].is_array());
  EXPECT_TRUE(j["failures"].empty());
}

TEST(ExportTest, TamperingIsDetected) {
  const auto pkg = seal_package(mock_trace("job-f"));
  std::string doc = export_document(pkg);
  const auto pos = doc.find("\"ginny\"");
  ASSERT_NE(pos, std::string::npos);
  doc[pos + 1] = 'j';
  EXPECT_THROW(parse_package(doc), IntegrityError);

  auto j = nlohmann::json::parse(export_document(pkg));
  j["schema"] = "something/else";
  EXPECT_THROW(parse_package(j.dump()), SchemaError);
  EXPECT_THROW(parse_package("{"), ParseError);

  auto k = nlohmann::json::parse(export_document(pkg));
  k["call_count"]["total"] = 209;
  EXPECT_THROW(parse_package(k.dump()), SchemaError);
}

TEST(ReplayTest, ReaggregationReproducesCards) {
  for (bool failures : {false, true}) {
    const auto pkg = import_package(
        export_package(seal_package(mock_trace("job-g", failures)),
                       testing::scratch_dir("replay")));
    const auto cards = replay_cards(pkg, shipped_catalog());
    ASSERT_EQ(cards.size(), pkg.cards().size());
    for (std::size_t i = 0; i < cards.size(); ++i) {
      EXPECT_EQ(card_to_json(cards[i]).dump(), card_to_json(pkg.cards()[i]).dump());
    }
  }
}

TEST(ReplayTest, CatalogVersionMustMatch) {
  const auto pkg = seal_package(mock_trace("job-h"));
  const Catalog other("other", shipped_catalog().properties());
  EXPECT_THROW(replay_cards(pkg, other), ValidationError);
}

}  // namespace
}  // namespace lmp2
