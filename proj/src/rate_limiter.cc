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

#include "lmp2/rate_limiter.h"

#include <thread>

namespace lmp2 {

RateLimiter::RateLimiter(std::size_t max_requests,
                         std::chrono::milliseconds window)
    : max_requests_(max_requests), window_(window) {}

RateLimiter::SteadyClock::time_point RateLimiter::acquire() {
  if (max_requests_ == 0) return SteadyClock::now();
  std::unique_lock lock(mu_);
  for (;;) {
    const auto now = SteadyClock::now();
    while (!starts_.empty() && now - starts_.front() >= window_) {
      starts_.pop_front();
    }
    if (starts_.size() < max_requests_) {
      starts_.push_back(now);
      return now;
    }
    const auto wake = starts_.front() + window_;
    lock.unlock();
    std::this_thread::sleep_until(wake);
    lock.lock();
  }
}

}  // namespace lmp2
