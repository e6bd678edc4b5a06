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

#include "test_support.h"

#include <atomic>
#include <filesystem>
#include <unistd.h>
#include <string>

#include "lmp2/util.h"

#ifndef LMP2_TEST_DATA_DIR
#error "LMP2_TEST_DATA_DIR must be defined"
#endif

namespace lmp2::testing {

std::string data_path(const std::string& relative) {
  return std::string(LMP2_TEST_DATA_DIR) + "/" + relative;
}

const Catalog& shipped_catalog() {
  static const Catalog catalog = load_catalog_file(data_path("catalog.json"));
  return catalog;
}

Completion completion_of(const std::string& property_id, SubjectMode arm,
                         const std::string& candidate, std::optional<double> nll) {
  static std::atomic<int> next{0};
  Completion c;
  c.probe_id = "t:" + std::to_string(next++);
  c.property_id = property_id;
  c.subject_mode = arm;
  c.raw_text = candidate;
  c.normalized_candidate = candidate;
  c.mean_nll = nll;
  if (nll) c.token_logprobs = std::vector<TokenLogprob>{{candidate, -*nll}};
  c.model_id = "test";
  c.model_version = "test-1";
  return c;
}

void add_votes(std::vector<Completion>& out, const std::string& property_id,
               SubjectMode arm, const std::string& candidate, std::size_t count,
               std::optional<double> nll) {
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(completion_of(property_id, arm, candidate, nll));
  }
}

std::string scratch_dir(const std::string& tag) {
  static std::atomic<int> next{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("lmp2_" + tag + "_" + std::to_string(::getpid()) + "_" +
              std::to_string(next++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace lmp2::testing
