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

// Small helpers shared across modules: UTF-8 code point handling, UTC
// timestamps, stable hashing and SHA-256 digests.
#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lmp2 {

using Clock = std::chrono::system_clock;
using TimePoint = Clock::time_point;

// Splits a UTF-8 string into code points, each kept as its byte sequence.
// Invalid lead bytes are treated as single-byte code points.
std::vector<std::string> utf8_code_points(std::string_view text);

std::size_t utf8_length(std::string_view text);

std::string_view trim(std::string_view text);

bool is_blank(std::string_view text);

// ISO-8601 UTC with millisecond precision, e.g. 2026-10-16T12:00:00.123Z.
std::string format_utc(TimePoint t);
TimePoint parse_utc(const std::string& text);

// Compact UTC stamp usable in file names: 20261016T120000Z.
std::string compact_utc(TimePoint t);

// 64-bit FNV-1a. Stable across platforms; used to derive per-probe seeds.
std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

// Uniform integer in [0, bound) drawn by rejection from a 64-bit engine.
// Independent of the standard library's distribution implementation, so
// seeded sequences are reproducible across toolchains.
template <typename Engine>
std::uint64_t uniform_below(Engine& engine, std::uint64_t bound) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t draw;
  do {
    draw = engine();
  } while (draw >= limit);
  return draw % bound;
}

// Uniform real in [0, 1) with 53 bits of precision.
template <typename Engine>
double uniform_unit(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

std::string sha256_hex(std::string_view data);

std::string ascii_lower(std::string_view text);

}  // namespace lmp2
