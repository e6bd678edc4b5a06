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

// lmp2 command line: batch evaluation, the audit service and evidence
// verification.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lmp2/audit_service.h"
#include "lmp2/catalog.h"
#include "lmp2/errors.h"
#include "lmp2/eval_harness.h"
#include "lmp2/evidence.h"
#include "lmp2/http_backend.h"
#include "lmp2/mock_model.h"

namespace {

using nlohmann::json;

#ifndef LMP2_DEFAULT_CATALOG
#define LMP2_DEFAULT_CATALOG "data/catalog.json"
#endif

constexpr int kExitError = 1;
constexpr int kExitPartial = 3;

int fail(std::string_view kind, const std::string& message, int code = kExitError) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump()
            << std::endl;
  return code;
}

lmp2::MockModelConfig read_mock_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lmp2::IOError("cannot open mock config " + path);
  try {
    return lmp2::mock_config_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw lmp2::ParseError(std::string("mock config: ") + e.what());
  }
}

struct EvalArgs {
  std::string dataset;
  std::string catalog = LMP2_DEFAULT_CATALOG;
  std::string model = lmp2::MockModel::kModelId;
  std::size_t paraphrases = 5;
  std::size_t counterfactuals = 20;
  std::uint64_t seed = 0;
  std::size_t top_k = lmp2::kDefaultTopK;
  double lambda = lmp2::kDefaultLambda;
  std::string out;
  std::string base_url;
  std::string mock_config;
  std::string call_log;
  std::size_t max_parallelism = 4;
  std::optional<std::size_t> rpm;
};

int run_eval(const EvalArgs& a) {
  const auto catalog = lmp2::load_catalog_file(a.catalog);
  const auto set = lmp2::load_subject_set_file(a.dataset, catalog);

  lmp2::ProviderConfig provider;
  provider.model_id = a.model;
  provider.base_url = a.base_url;
  provider.max_parallelism = a.max_parallelism;
  const bool mock = a.model == lmp2::MockModel::kModelId;
  provider.requests_per_minute = a.rpm.value_or(mock ? 0 : 60);

  std::shared_ptr<lmp2::ChatBackend> backend;
  if (mock) {
    lmp2::MockModelConfig mc;
    if (!a.mock_config.empty()) {
      mc = read_mock_config(a.mock_config);
    } else if (set.mock) {
      mc = *set.mock;
    }
    auto m = std::make_shared<lmp2::MockModel>(std::move(mc));
    m->use_formats_from(catalog);
    backend = m;
  } else {
    if (a.base_url.empty()) {
      throw lmp2::InvalidConfig("--base-url is required for model '" + a.model + "'");
    }
    backend = std::make_shared<lmp2::HttpChatBackend>(provider);
  }
  std::shared_ptr<lmp2::CallLog> log;
  if (!a.call_log.empty()) log = std::make_shared<lmp2::CallLog>(a.call_log);
  lmp2::ModelGateway gateway(provider, backend, nullptr, log);

  lmp2::EvalConfig config;
  config.probes = {a.paraphrases, a.counterfactuals, a.seed};
  config.aggregation.top_k = a.top_k;
  config.aggregation.lambda = a.lambda;

  const auto report = lmp2::evaluate(set, catalog, gateway, config);
  lmp2::write_report(report, catalog, config, a.out,
                     json{{"dataset", a.dataset}, {"catalog_path", a.catalog}});
  std::cout << lmp2::run_manifest(report, catalog, config).dump(2) << std::endl;
  if (report.partial()) {
    return fail("PartialFailure",
                std::to_string(report.failure_count) + " of " +
                    std::to_string(report.probe_count) +
                    " probes failed; outputs written to " + a.out,
                kExitPartial);
  }
  return 0;
}

lmp2::AuditServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

struct ServeArgs {
  std::string config;
  std::string catalog;
  std::string host;
  int port = -1;
  std::string model;
  std::string mock_config;
  std::string data_dir;
};

int run_serve(const ServeArgs& a) {
  lmp2::ServiceConfig config;
  config.provider.model_id = lmp2::MockModel::kModelId;
  if (!a.config.empty()) config = lmp2::load_service_config_file(a.config);
  lmp2::apply_env_overrides(config);
  if (!a.catalog.empty()) config.catalog_path = a.catalog;
  if (config.catalog_path.empty()) config.catalog_path = LMP2_DEFAULT_CATALOG;
  if (!a.host.empty()) config.host = a.host;
  if (a.port >= 0) config.port = a.port;
  if (!a.model.empty()) config.provider.model_id = a.model;
  if (!a.mock_config.empty()) config.mock = read_mock_config(a.mock_config);
  if (!a.data_dir.empty()) config.data_dir = a.data_dir;

  auto catalog = lmp2::load_catalog_file(config.catalog_path);
  auto backend = lmp2::make_backend(config, catalog);
  lmp2::AuditService service(std::move(catalog), config, backend);
  lmp2::AuditServer server(service);
  const int port = server.bind(config.host, config.port);
  if (port < 0) {
    return fail("IOError", "cannot bind " + config.host + ":" +
                               std::to_string(config.port));
  }
  std::cerr << json{{"listening", config.host + ":" + std::to_string(port)},
                    {"model_id", config.provider.model_id}}
                   .dump()
            << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;
  return 0;
}

int run_verify(const std::string& path, const std::string& catalog_path) {
  const auto pkg = lmp2::import_package(path);
  json out{{"package_id", pkg.package_id()},
           {"content_hash", pkg.content_hash()},
           {"integrity", "ok"},
           {"call_counts",
            {{"total", pkg.call_counts().total},
             {"named", pkg.call_counts().named},
             {"generic", pkg.call_counts().generic}}}};
  if (!catalog_path.empty()) {
    const auto catalog = lmp2::load_catalog_file(catalog_path);
    const bool same = lmp2::replay_cards(pkg, catalog) == pkg.cards();
    out["replay"] = same ? "identical" : "mismatch";
    std::cout << out.dump(2) << std::endl;
    if (!same) return fail("IntegrityError", "replayed cards differ from the package");
    return 0;
  }
  std::cout << out.dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lmp2: name-conditioned association audits for chat models"};
  app.require_subcommand(1);

  EvalArgs eval;
  auto* ev = app.add_subcommand("eval", "Batch evaluation over a subject set");
  ev->add_option("--dataset", eval.dataset, "Subject set JSON")->required();
  ev->add_option("--catalog", eval.catalog, "Property catalog JSON");
  ev->add_option("--model", eval.model, "Model id; 'mock' runs offline");
  ev->add_option("--paraphrases", eval.paraphrases, "P")->check(CLI::Range(1, 5));
  ev->add_option("--counterfactuals", eval.counterfactuals, "C")
      ->check(CLI::NonNegativeNumber);
  ev->add_option("--seed", eval.seed);
  ev->add_option("--top-k", eval.top_k, "K")->check(CLI::PositiveNumber);
  ev->add_option("--lambda", eval.lambda, "Baseline weight")
      ->check(CLI::NonNegativeNumber);
  ev->add_option("--out", eval.out, "Output directory")->required();
  ev->add_option("--base-url", eval.base_url, "OpenAI-compatible endpoint");
  ev->add_option("--mock-config", eval.mock_config, "Mock model JSON");
  ev->add_option("--call-log", eval.call_log, "Append raw calls to this JSONL file");
  ev->add_option("--max-parallelism", eval.max_parallelism)
      ->check(CLI::PositiveNumber);
  ev->add_option("--rpm", eval.rpm, "Requests per minute, 0 for unlimited");

  ServeArgs serve;
  auto* sv = app.add_subcommand("serve", "Run the audit HTTP service");
  sv->add_option("--config", serve.config, "Service config JSON");
  sv->add_option("--catalog", serve.catalog);
  sv->add_option("--host", serve.host);
  sv->add_option("--port", serve.port);
  sv->add_option("--model", serve.model);
  sv->add_option("--mock-config", serve.mock_config);
  sv->add_option("--data-dir", serve.data_dir, "Evidence and feedback directory");

  std::string package_path;
  std::string verify_catalog;
  auto* vf = app.add_subcommand("verify", "Check an exported evidence package");
  vf->add_option("package", package_path)->required();
  vf->add_option("--catalog", verify_catalog, "Replay cards against this catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return fail("UsageError", e.what(), 2);
  }

  try {
    if (*ev) return run_eval(eval);
    if (*sv) return run_serve(serve);
    if (*vf) return run_verify(package_path, verify_catalog);
  } catch (const lmp2::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("Error", e.what());
  }
  return 0;
}
