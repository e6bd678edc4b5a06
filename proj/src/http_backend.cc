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

#include "lmp2/http_backend.h"

#include <cstdlib>

#include "httplib.h"

namespace lmp2 {

using nlohmann::json;

namespace {

constexpr int kMaxCompletionTokens = 16;

}  // namespace

HttpChatBackend::HttpChatBackend(const ProviderConfig& config) {
  const std::string& url = config.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidConfig("base_url must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') {
    path_prefix_.pop_back();
  }
  if (const char* key = std::getenv(config.api_key_env.c_str())) api_key_ = key;
}

json HttpChatBackend::build_request_body(const std::string& prompt,
                                         const RequestOptions& options) {
  json body{
      {"model", options.model_id},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", options.temperature},
      {"max_tokens", kMaxCompletionTokens},
  };
  if (options.want_logprobs) body["logprobs"] = true;
  return body;
}

void HttpChatBackend::parse_response_body(const std::string& body,
                                          BackendReply& reply) {
  json doc;
  try {
    doc = json::parse(body);
    const auto& choice = doc.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    reply.text = content.is_null() ? "" : content.get<std::string>();
    reply.model_version = doc.value("model", std::string{});
    if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
        choice["logprobs"].contains("content") &&
        choice["logprobs"]["content"].is_array()) {
      std::vector<TokenLogprob> tokens;
      for (const auto& t : choice["logprobs"]["content"]) {
        tokens.push_back(
            {t.at("token").get<std::string>(), t.at("logprob").get<double>()});
      }
      if (!tokens.empty()) reply.logprobs = std::move(tokens);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed chat completion response: ") +
                     e.what());
  }
}

BackendReply HttpChatBackend::send(const ProbeSpec& probe,
                                   const RequestOptions& options) {
  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
      options.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
  }
  const std::string body =
      build_request_body(probe.prompt_text, options).dump();

  BackendReply reply;
  auto res = client.Post(path_prefix_ + "/chat/completions", headers, body,
                         "application/json");
  if (!res) {
    reply.status = 0;
    reply.error = "transport error: " + httplib::to_string(res.error());
    return reply;
  }
  reply.status = res->status;
  reply.raw_body = res->body;
  if (!reply.ok()) {
    reply.error = "HTTP " + std::to_string(res->status) + ": " + res->body;
    return reply;
  }
  try {
    parse_response_body(res->body, reply);
  } catch (const ParseError& e) {
    // Reported as a gateway error so the call is retried.
    reply.status = 502;
    reply.error = e.what();
  }
  return reply;
}

}  // namespace lmp2
