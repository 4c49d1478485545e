// Copyright 2026 The SecCoGC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: builds codes and keys, runs simulations and emits
// privacy, reliability and bound reports. Outputs go to --out; failures print
// an error JSON on stderr and exit nonzero.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "seccogc/config.h"
#include "seccogc/convergence_bound.h"
#include "seccogc/gradient_code.h"
#include "seccogc/privacy_accounting.h"
#include "seccogc/protocol.h"
#include "seccogc/reliability.h"
#include "seccogc/secret_keys.h"

namespace {

using nlohmann::json;

// Used when exact enumeration is infeasible and --trials is not given.
constexpr std::int64_t kDefaultTrials = 100000;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string trace;
  std::optional<std::int64_t> trials;
};

std::string Fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

seccogc::ExperimentConfig LoadConfig(const Flags& f) {
  std::ifstream in(f.config);
  if (!in) throw seccogc::ConfigError({"cannot open config file '" + f.config + "'"});
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw seccogc::ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
  seccogc::ExperimentConfig cfg = seccogc::ParseConfig(root);
  if (f.seed) cfg.OverrideSeed(*f.seed);
  if (!f.out.empty()) cfg.output.dir = f.out;
  if (!f.trace.empty()) {
    auto level = seccogc::TraceLevelFromName(f.trace);
    if (!level) throw seccogc::ConfigError({"--trace must be none, summary or full"});
    cfg.output.trace = *level;
  }
  return cfg;
}

void WriteFile(const seccogc::ExperimentConfig& cfg, const std::string& name,
               const std::string& body) {
  std::filesystem::create_directories(cfg.output.dir);
  const std::filesystem::path path = std::filesystem::path(cfg.output.dir) / name;
  std::ofstream out(path, std::ios::binary);
  out << body;
  if (!out) {
    throw seccogc::Error(seccogc::ErrorCode::kInvalidArgument, "cannot write " + path.string());
  }
}

void Emit(const seccogc::ExperimentConfig& cfg, const std::string& name, const json& j) {
  WriteFile(cfg, name, j.dump(2) + "\n");
}

int GenCode(const Flags& f) {
  const auto cfg = LoadConfig(f);
  const seccogc::GcCode code = seccogc::BuildCode(cfg.code.K, cfg.code.s, cfg.code_seed());
  const seccogc::CodeCheck check = seccogc::VerifyCode(code, 1e-9);
  json j = seccogc::ToJson(code);
  j["check"] = {{"ok", check.ok}, {"max_error", check.max_error}};
  Emit(cfg, "code.json", j);
  std::cout << json{{"K", code.K}, {"s", code.s}, {"f", code.f()}, {"ok", check.ok}}.dump()
            << "\n";
  return 0;
}

int GenKeys(const Flags& f) {
  const auto cfg = LoadConfig(f);
  const seccogc::GeneratorMatrix g = seccogc::BuildKeys(cfg);
  const seccogc::ConditionReport report = seccogc::VerifyConditions(g, 1e-9);
  json j = {{"generator", seccogc::ToJson(g)}, {"conditions", seccogc::ToJson(report)}};
  Emit(cfg, "keys.json", j);
  std::cout << j.dump() << "\n";
  return 0;
}

int Simulate(const Flags& f) {
  seccogc::Experiment e;
  seccogc::BuildExperiment(LoadConfig(f), &e);
  seccogc::TrainingOptions options;
  options.T = e.config.training.T;
  options.trace = e.config.output.trace;
  const seccogc::TrainingTrace trace = seccogc::RunTraining(e.context, options);
  WriteFile(e.config, "trace.csv", seccogc::TraceToCsv(trace));
  if (e.config.output.trace != seccogc::TraceLevel::kNone) {
    Emit(e.config, "trace.json", seccogc::ToJson(trace));
  }
  std::cout << json{{"rounds", trace.rows.size()},
                    {"successes", trace.successes},
                    {"final_loss", seccogc::GlobalLoss(trace.final_global, e.objective)}}
                   .dump()
            << "\n";
  return 0;
}

std::string PrivacyCsv(const json& r) {
  std::ostringstream csv;
  csv << "layer,quantity,i,j,value,delta\n";
  auto num = [](const json& v) { return v.is_null() ? std::string() : Fmt(v.get<double>()); };
  for (const auto& x : r["lmip"]["peer"]) {
    csv << "peer,mu1," << x["from"] << "," << x["to"] << "," << num(x["mu1"]) << ",\n";
  }
  for (const auto& x : r["lmip"]["relay"]) {
    csv << "relay,mu2," << x["relay"] << "," << x["target"] << "," << num(x["mu2"]) << ",\n";
  }
  for (const auto& x : r["lmip"]["server"]) {
    csv << "server,mu3," << x["client"] << ",," << num(x["mu3"]) << ",\n";
  }
  const auto& peer = r["ldp"]["peer"];
  csv << "peer,epsilon1,,," << num(peer["epsilon1"]) << "," << num(peer["delta1"]) << "\n";
  for (const auto& x : r["ldp"]["relay"]) {
    csv << "relay,epsilon2," << x["relay"] << "," << x["target"] << "," << num(x["epsilon2"])
        << "," << num(x["delta2"]) << "\n";
    csv << "relay,epsilon3," << x["relay"] << "," << x["target"] << "," << num(x["epsilon3"])
        << "," << num(x["delta3"]) << "\n";
  }
  for (const auto& x : r["ldp"]["failure"]) {
    csv << "failure,epsilon4," << x["relay"] << "," << x["client"] << ","
        << num(x["epsilon4"]) << "," << num(x["delta4"]) << "\n";
    csv << "failure,epsilon5," << x["relay"] << "," << x["client"] << ","
        << num(x["epsilon5"]) << "," << num(x["delta5"]) << "\n";
  }
  const auto& ok = r["ldp"]["success"];
  csv << "success,epsilon6,,," << num(ok["epsilon6"]) << "," << num(ok["delta6"]) << "\n";
  csv << "success,epsilon7,,," << num(ok["epsilon7"]) << "," << num(ok["delta7"]) << "\n";
  return csv.str();
}

int PrivacyReport(const Flags& f) {
  const auto cfg = LoadConfig(f);
  const seccogc::GcCode code = seccogc::BuildCode(cfg.code.K, cfg.code.s, cfg.code_seed());
  const seccogc::GeneratorMatrix g = seccogc::BuildKeys(cfg);
  const json report = seccogc::BuildPrivacyReport(code, g, cfg.network, cfg.privacy, cfg.seed);
  Emit(cfg, "privacy.json", report);
  WriteFile(cfg, "privacy.csv", PrivacyCsv(report));
  std::cout << json{{"errors", report["errors"].size()}}.dump() << "\n";
  return 0;
}

std::string ReliabilityCsvRow(const seccogc::ReliabilityReport& r) {
  return std::string(r.method == seccogc::ReliabilityMethod::kEnumeration ? "enumeration"
                                                                          : "monte_carlo") +
         "," + std::to_string(r.trials) + "," + Fmt(r.p1) + "," + Fmt(r.p2) + "," + Fmt(r.p3) +
         "," + Fmt(r.p_outage) + "," + Fmt(r.ci_outage) + "\n";
}

int Reliability(const Flags& f) {
  const auto cfg = LoadConfig(f);
  const seccogc::GcCode code = seccogc::BuildCode(cfg.code.K, cfg.code.s, cfg.code_seed());
  std::string csv = "method,trials,P1,P2,P3,P_O,ci_P_O\n";
  json j;
  if (f.trials) {
    const auto mc = seccogc::OutageMonteCarlo(code, cfg.network, *f.trials, cfg.seed);
    j["monte_carlo"] = seccogc::ToJson(mc);
    csv += ReliabilityCsvRow(mc);
  }
  try {
    const auto exact = seccogc::OutageExact(code, cfg.network);
    j["exact"] = seccogc::ToJson(exact);
    csv += ReliabilityCsvRow(exact);
  } catch (const seccogc::Error& e) {
    if (e.code() != seccogc::ErrorCode::kTooManyLinks) throw;
    j["exact"] = nullptr;
    j["exact_error"] = e.what();
    if (!f.trials) {
      const auto mc = seccogc::OutageMonteCarlo(code, cfg.network, kDefaultTrials, cfg.seed);
      j["monte_carlo"] = seccogc::ToJson(mc);
      csv += ReliabilityCsvRow(mc);
    }
  }
  Emit(cfg, "reliability.json", j);
  WriteFile(cfg, "reliability.csv", csv);
  std::cout << j.dump() << "\n";
  return 0;
}

int Bound(const Flags& f) {
  seccogc::Experiment e;
  seccogc::BuildExperiment(LoadConfig(f), &e);
  double p_outage = 0.0;
  if (e.config.bound.P_O) {
    p_outage = *e.config.bound.P_O;
  } else {
    try {
      p_outage = seccogc::OutageExact(e.code, e.config.network).p_outage;
    } catch (const seccogc::Error& err) {
      if (err.code() != seccogc::ErrorCode::kTooManyLinks) throw;
      p_outage = seccogc::OutageMonteCarlo(e.code, e.config.network,
                                           f.trials.value_or(kDefaultTrials), e.config.seed)
                     .p_outage;
    }
  }
  const seccogc::ConvergenceParams params = seccogc::BoundParamsFor(e, p_outage);
  std::string csv = "run,seed,empirical,bound,successes,rounds,violated\n";
  json runs = json::array();
  int violations = 0;
  seccogc::TrainingOptions options;
  options.T = e.config.training.T;
  options.trace = seccogc::TraceLevel::kNone;
  for (int r = 0; r < e.config.bound.runs; ++r) {
    seccogc::ProtocolContext ctx = e.context;
    ctx.seed = e.config.seed + static_cast<std::uint64_t>(r);
    const auto cmp = seccogc::EmpiricalVsBound(seccogc::RunTraining(ctx, options), params);
    violations += cmp.violated ? 1 : 0;
    json row = seccogc::ToJson(cmp);
    row["seed"] = ctx.seed;
    runs.push_back(row);
    csv += std::to_string(r) + "," + std::to_string(ctx.seed) + "," + Fmt(cmp.empirical) + "," +
           Fmt(cmp.bound) + "," + std::to_string(cmp.successes) + "," +
           std::to_string(cmp.rounds) + "," + (cmp.violated ? "1" : "0") + "\n";
  }
  const seccogc::BoundTerms terms = seccogc::BoundRhsTerms(params);
  json j = {{"params", seccogc::ToJson(params)},
            {"bound", terms.total()},
            {"optimization_term", terms.optimization},
            {"outage_term", terms.outage},
            {"runs", runs},
            {"violations", violations}};
  Emit(e.config, "bound.json", j);
  WriteFile(e.config, "bound.csv", csv);
  std::cout << json{{"bound", terms.total()}, {"violations", violations}}.dump() << "\n";
  return 0;
}

int ReportError(const std::exception& ex) {
  json j = {{"error", "InternalError"}, {"message", ex.what()}};
  if (const auto* e = dynamic_cast<const seccogc::Error*>(&ex)) {
    j["error"] = std::string(seccogc::ErrorCodeName(e->code()));
  }
  if (const auto* c = dynamic_cast<const seccogc::ConfigError*>(&ex)) {
    j["violations"] = c->violations();
  }
  std::cerr << j.dump() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coded secure aggregation simulator"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&flags](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Experiment JSON")->required();
    sub->add_option("--seed", flags.seed, "Master seed (overrides all config seeds)");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--trace", flags.trace, "none, summary or full")
        ->check(CLI::IsMember({"none", "summary", "full"}));
    sub->add_option("--trials", flags.trials, "Monte Carlo trials for reliability")
        ->check(CLI::PositiveNumber);
  };
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Flags&);
  };
  const Command commands[] = {
      {"gen-code", "Build the gradient code", GenCode},
      {"gen-keys", "Build the key generator matrix", GenKeys},
      {"simulate", "Run federated training", Simulate},
      {"privacy-report", "Per-layer privacy accounting", PrivacyReport},
      {"reliability", "Outage probability", Reliability},
      {"bound", "Empirical gradient norm versus the convergence bound", Bound},
  };
  int (*selected)(const Flags&) = nullptr;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    sub->callback([&selected, run = c.run] { selected = run; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    return selected(flags);
  } catch (const std::exception& e) {
    return ReportError(e);
  }
}
