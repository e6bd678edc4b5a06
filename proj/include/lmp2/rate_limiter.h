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

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>

namespace lmp2 {

// Sliding-window limiter: at most `max_requests` acquisitions start within
// any window of length `window`. Shared by every batch that talks to the
// same provider. `max_requests == 0` disables limiting.
class RateLimiter {
 public:
  using SteadyClock = std::chrono::steady_clock;

  explicit RateLimiter(std::size_t max_requests,
                       std::chrono::milliseconds window = std::chrono::minutes(1));

  RateLimiter(const RateLimiter&) = delete;
  RateLimiter& operator=(const RateLimiter&) = delete;

  // Blocks until a slot is free, claims it and returns the claimed start.
  SteadyClock::time_point acquire();

  std::size_t max_requests() const { return max_requests_; }
  std::chrono::milliseconds window() const { return window_; }

 private:
  const std::size_t max_requests_;
  const std::chrono::milliseconds window_;
  std::mutex mu_;
  std::deque<SteadyClock::time_point> starts_;
};

}  // namespace lmp2
