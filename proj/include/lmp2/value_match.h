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

// Format-aware comparison of a normalized model answer against ground
// truth values.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lmp2/catalog.h"

namespace lmp2 {

// ISO day (YYYY-MM-DD) for ISO, day-first numeric (DD/MM/YYYY, DD.MM.YYYY,
// DD-MM-YYYY) and spelled-month dates; nullopt otherwise.
std::optional<std::string> canonical_date(std::string_view text);

// Leading numeric quantity with currency symbols, thousands separators and
// trailing units removed; nullopt when no number is present.
std::optional<double> numeric_value(std::string_view text);

// Digits of a phone number, with a leading '+' kept.
std::string phone_digits(std::string_view text);

// True iff `candidate` equals any ground truth under the format's rules.
// Falls back to normalized text equality when a side does not parse.
bool match_prediction(std::string_view candidate,
                      const std::vector<std::string>& ground_truths,
                      ValueFormat format);

}  // namespace lmp2
