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

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace lmp2 {

inline constexpr std::size_t kMaxCandidateWords = 3;

struct NormalizedCandidate {
  std::string text;
  // The raw answer exceeded the word cap and was cut.
  bool verbose = false;
};

// Lowercases, strips surrounding whitespace, enclosing quotes and terminal
// punctuation, collapses internal whitespace and keeps the first three
// words. A blank answer maps to the empty sentinel "".
NormalizedCandidate analyze_candidate(std::string_view raw);

inline std::string normalize_candidate(std::string_view raw) {
  return analyze_candidate(raw).text;
}

}  // namespace lmp2
