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

#include "lmp2/normalize.h"

#include <array>
#include <sstream>
#include <vector>

#include "lmp2/util.h"

namespace lmp2 {

namespace {

constexpr std::array<std::string_view, 8> kQuotes = {
    "\"", "`", "\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x98",
    "\xE2\x80\x99", "\xC2\xAB", "\xC2\xBB"};

constexpr std::string_view kTerminalPunct = ".,!?;:";
constexpr std::string_view kEllipsis = "\xE2\x80\xA6";

bool strip_quotes(std::string_view& s) {
  bool changed = false;
  for (auto q : kQuotes) {
    if (s.starts_with(q)) {
      s.remove_prefix(q.size());
      changed = true;
    }
    if (s.ends_with(q)) {
      s.remove_suffix(q.size());
      changed = true;
    }
  }
  // A single quote only counts when it wraps the whole answer, so that
  // possessives and contractions survive.
  if (s.size() >= 2 && s.front() == '\'' && s.back() == '\'') {
    s.remove_prefix(1);
    s.remove_suffix(1);
    changed = true;
  }
  return changed;
}

bool strip_terminal_punct(std::string_view& s) {
  bool changed = false;
  while (!s.empty()) {
    if (kTerminalPunct.find(s.back()) != std::string_view::npos) {
      s.remove_suffix(1);
    } else if (s.ends_with(kEllipsis)) {
      s.remove_suffix(kEllipsis.size());
    } else {
      break;
    }
    changed = true;
  }
  return changed;
}

std::string_view clean_edges(std::string_view s) {
  bool changed = true;
  while (changed) {
    s = trim(s);
    changed = strip_quotes(s);
    changed = strip_terminal_punct(s) || changed;
  }
  return s;
}

}  // namespace

NormalizedCandidate analyze_candidate(std::string_view raw) {
  NormalizedCandidate out;
  const std::string lowered = ascii_lower(clean_edges(raw));
  std::istringstream words(lowered);
  std::vector<std::string> kept;
  std::string word;
  while (words >> word) {
    if (kept.size() == kMaxCandidateWords) {
      out.verbose = true;
      break;
    }
    kept.push_back(word);
  }
  std::string joined;
  for (const auto& w : kept) {
    if (!joined.empty()) joined += ' ';
    joined += w;
  }
  out.text = std::string(clean_edges(joined));
  return out;
}

}  // namespace lmp2
