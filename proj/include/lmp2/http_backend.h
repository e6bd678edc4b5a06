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

// Chat-completion backend speaking the OpenAI-compatible wire format:
//   POST {base_url}/chat/completions
//   Authorization: Bearer $LMP2_API_KEY
#pragma once

#include <string>

#include "json.hpp"
#include "lmp2/model_gateway.h"

namespace lmp2 {

class HttpChatBackend : public ChatBackend {
 public:
  // Reads the bearer token from `config.api_key_env`; a missing token is
  // sent as no Authorization header and surfaces as a provider 401.
  explicit HttpChatBackend(const ProviderConfig& config);

  BackendReply send(const ProbeSpec& probe,
                    const RequestOptions& options) override;

  static nlohmann::json build_request_body(const std::string& prompt,
                                           const RequestOptions& options);
  // Fills text, logprobs and model_version; throws ParseError.
  static void parse_response_body(const std::string& body, BackendReply& reply);

 private:
  std::string origin_;  // scheme://host[:port]
  std::string path_prefix_;
  std::string api_key_;
};

}  // namespace lmp2
