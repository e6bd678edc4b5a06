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

// Shared helpers for unit and acceptance tests.
#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "lmp2/catalog.h"
#include "lmp2/model_gateway.h"

namespace lmp2::testing {

// Absolute path to the shipped data directory.
std::string data_path(const std::string& relative);

const Catalog& shipped_catalog();

// A completion with the given arm and already-normalized candidate.
Completion completion_of(const std::string& property_id, SubjectMode arm,
                         const std::string& candidate,
                         std::optional<double> nll = std::nullopt);

// Appends `count` copies of `candidate` for `arm`.
void add_votes(std::vector<Completion>& out, const std::string& property_id,
               SubjectMode arm, const std::string& candidate, std::size_t count,
               std::optional<double> nll = std::nullopt);

// Backend driven by a callback; counts calls.
class ScriptedBackend : public ChatBackend {
 public:
  using Script = std::function<BackendReply(const ProbeSpec&, int call)>;
  explicit ScriptedBackend(Script script) : script_(std::move(script)) {}

  BackendReply send(const ProbeSpec& probe, const RequestOptions&) override {
    const int n = ++calls_;
    return script_(probe, n);
  }
  int calls() const { return calls_.load(); }

 private:
  Script script_;
  std::atomic<int> calls_{0};
};

// Wraps another backend and records every prompt it forwards.
class RecordingBackend : public ChatBackend {
 public:
  explicit RecordingBackend(std::shared_ptr<ChatBackend> inner)
      : inner_(std::move(inner)) {}

  BackendReply send(const ProbeSpec& probe, const RequestOptions& o) override {
    {
      std::lock_guard lock(mu_);
      prompts_.push_back(probe.prompt_text);
    }
    return inner_->send(probe, o);
  }
  std::vector<std::string> prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
  }
  std::size_t calls() const {
    std::lock_guard lock(mu_);
    return prompts_.size();
  }

 private:
  std::shared_ptr<ChatBackend> inner_;
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
};

// Unique scratch directory under the system temp dir.
std::string scratch_dir(const std::string& tag);

}  // namespace lmp2::testing
