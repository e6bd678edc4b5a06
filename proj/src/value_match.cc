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

#include "lmp2/value_match.h"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "lmp2/normalize.h"
#include "lmp2/util.h"

namespace lmp2 {

namespace {

constexpr std::array<std::string_view, 12> kMonths = {
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};

int month_from_name(std::string_view word) {
  if (word.size() < 3) return 0;
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (kMonths[i].starts_with(word)) return static_cast<int>(i) + 1;
  }
  return 0;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

std::optional<std::string> make_iso(int y, int m, int d) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (y < 1 || y > 9999 || m < 1 || m > 12 || d < 1) return std::nullopt;
  const int limit = kDays[m - 1] + (m == 2 && is_leap(y) ? 1 : 0);
  if (d > limit) return std::nullopt;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
  return std::string(buf);
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

int to_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

std::vector<std::string> split_on(std::string_view s, std::string_view seps) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string_view::npos) {
      if (!cur.empty()) parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

std::string strip_ordinal(const std::string& w) {
  for (std::string_view suffix : {"st", "nd", "rd", "th"}) {
    if (w.size() > suffix.size() && std::string_view(w).ends_with(suffix) &&
        all_digits(std::string_view(w).substr(0, w.size() - suffix.size()))) {
      return w.substr(0, w.size() - suffix.size());
    }
  }
  return w;
}

}  // namespace

std::optional<std::string> canonical_date(std::string_view text) {
  const std::string t = ascii_lower(trim(text));
  // Numeric forms.
  for (char sep : {'-', '/', '.'}) {
    const auto parts = split_on(t, std::string(1, sep));
    if (parts.size() != 3 || t.find(' ') != std::string::npos) continue;
    if (!all_digits(parts[0]) || !all_digits(parts[1]) || !all_digits(parts[2])) {
      continue;
    }
    if (parts[0].size() == 4) {
      return make_iso(to_int(parts[0]), to_int(parts[1]), to_int(parts[2]));
    }
    if (parts[2].size() == 4) {
      return make_iso(to_int(parts[2]), to_int(parts[1]), to_int(parts[0]));
    }
  }
  // Spelled month: "3 may 1999", "may 3, 1999", "3rd of may 1999".
  auto words = split_on(t, " ,");
  std::erase(words, "of");
  if (words.size() != 3) return std::nullopt;
  int day = 0, month = 0, year = 0;
  for (auto& w : words) {
    const std::string bare = strip_ordinal(w);
    if (all_digits(bare) && bare.size() == 4 && year == 0) {
      year = to_int(bare);
    } else if (all_digits(bare) && bare.size() <= 2 && day == 0) {
      day = to_int(bare);
    } else if (int m = month_from_name(w); m != 0 && month == 0) {
      month = m;
    } else {
      return std::nullopt;
    }
  }
  return make_iso(year, month, day);
}

std::optional<double> numeric_value(std::string_view text) {
  std::string_view s = trim(text);
  while (!s.empty() && (s.front() == '$' || s.front() == '~')) s.remove_prefix(1);
  if (s.starts_with("\xE2\x82\xAC") || s.starts_with("\xC2\xA3")) {
    s.remove_prefix(s.starts_with("\xE2\x82\xAC") ? 3 : 2);
  }
  std::string number;
  bool seen_digit = false;
  bool seen_point = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      number += c;
      seen_digit = true;
    } else if (c == '-' && number.empty()) {
      number += c;
    } else if (c == ',' && seen_digit && i + 1 < s.size() &&
               std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
      continue;  // thousands separator
    } else if (c == '.' && !seen_point && seen_digit && i + 1 < s.size() &&
               std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
      number += c;
      seen_point = true;
    } else {
      break;  // unit or trailing text
    }
  }
  if (!seen_digit) return std::nullopt;
  return std::stod(number);
}

std::string phone_digits(std::string_view text) {
  std::string out;
  const auto t = trim(text);
  if (t.starts_with("+")) out += '+';
  for (char c : t) {
    if (std::isdigit(static_cast<unsigned char>(c))) out += c;
  }
  return out;
}

bool match_prediction(std::string_view candidate,
                      const std::vector<std::string>& ground_truths,
                      ValueFormat format) {
  const std::string cand = normalize_candidate(candidate);
  if (cand.empty()) return false;
  for (const auto& truth : ground_truths) {
    const std::string gt = normalize_candidate(truth);
    if (gt.empty()) continue;
    if (cand == gt) return true;
    switch (format) {
      case ValueFormat::kDate: {
        const auto a = canonical_date(cand);
        const auto b = canonical_date(gt);
        if (a && b && *a == *b) return true;
        break;
      }
      case ValueFormat::kNumber: {
        const auto a = numeric_value(cand);
        const auto b = numeric_value(gt);
        if (a && b &&
            std::fabs(*a - *b) <= 1e-9 * std::max(1.0, std::fabs(*b))) {
          return true;
        }
        break;
      }
      case ValueFormat::kPhone: {
        // Digits come from the unnormalized strings: the word cap would cut
        // numbers written with spaces.
        const auto a = phone_digits(candidate);
        if (a.size() > 1 && a == phone_digits(truth)) return true;
        break;
      }
      case ValueFormat::kText:
        break;
    }
  }
  return false;
}

}  // namespace lmp2
