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

// One round of secure cooperative gradient coding: local training, additive
// masking with correlated keys, sharing over unreliable links, partial sums at
// the relays, and exact recovery at the server whenever a combinator fits the
// arrived complete partial sums.

#ifndef SECCOGC_PROTOCOL_H_
#define SECCOGC_PROTOCOL_H_

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "seccogc/gradient_code.h"
#include "seccogc/network_model.h"
#include "seccogc/reliability.h"
#include "seccogc/rng.h"
#include "seccogc/secret_keys.h"
#include "seccogc/status.h"
#include "seccogc/trainer.h"

namespace seccogc {

inline Eigen::VectorXd MaskUpdate(const Eigen::VectorXd& delta, const Eigen::VectorXd& key) {
  if (delta.size() != key.size()) throw Error(ErrorCode::kDimMismatch, "delta and key lengths differ");
  return delta + key;
}

struct PartialSum {
  Eigen::VectorXd value;
  bool complete = false;
};

// S_k = sum_m tau_{k,m} g_{k,m} Y_m over the support of row k. `masked` holds
// Y_m in row m.
inline PartialSum ComputePartialSum(int k, const Eigen::MatrixXd& masked, const GcCode& code,
                                    const LinkRealization& links) {
  PartialSum ps;
  ps.value = Eigen::VectorXd::Zero(masked.cols());
  ps.complete = true;
  for (int m : code.support[k]) {
    if (links.Received(k, m)) {
      ps.value += code.G(k, m) * masked.row(m).transpose();
    } else {
      ps.complete = false;
    }
  }
  return ps;
}

struct AggregateResult {
  std::optional<int> combinator;
  std::optional<Eigen::VectorXd> update;  // (1/K) sum_k c_k S_k
  std::optional<Eigen::VectorXd> theta;   // theta_prev + update
};

// `partials[k]` is set iff client k's complete partial sum reached the
// server. The combinator sum uses compensated (Kahan) summation in client
// order.
inline AggregateResult ServerAggregate(const GcCode& code,
                                       const std::vector<std::optional<Eigen::VectorXd>>& partials,
                                       const Eigen::VectorXd& theta_prev) {
  AggregateResult result;
  std::vector<bool> arrived(code.K, false);
  for (int k = 0; k < code.K; ++k) arrived[k] = partials[k].has_value();
  result.combinator = SelectCombinator(code, arrived);
  if (!result.combinator) return result;
  const int f = *result.combinator;
  const Eigen::Index D = theta_prev.size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(D);
  Eigen::VectorXd carry = Eigen::VectorXd::Zero(D);
  for (int k = 0; k < code.K; ++k) {
    const double c = code.C(f, k);
    if (c == 0.0) continue;
    if (partials[k]->size() != D) throw Error(ErrorCode::kDimMismatch, "partial sum length");
    for (Eigen::Index d = 0; d < D; ++d) {
      const double y = c * (*partials[k])(d) - carry(d);
      const double t = sum(d) + y;
      carry(d) = (t - sum(d)) - y;
      sum(d) = t;
    }
  }
  result.update = sum / static_cast<double>(code.K);
  result.theta = theta_prev + *result.update;
  return result;
}

enum class FailureMode { kAccumulate, kRetry };

struct ClientState {
  int id = 0;
  Eigen::VectorXd theta;
  // Local training rounds the next shared update will contain.
  int accumulated_rounds = 1;
  // Retry mode: an update computed but not yet recovered by the server.
  std::optional<Eigen::VectorXd> pending_delta;
};

struct FederationState {
  Eigen::VectorXd global;  // last recovered global model
  std::vector<ClientState> clients;

  static FederationState Initial(const Eigen::VectorXd& theta0, int K) {
    FederationState state;
    state.global = theta0;
    for (int k = 0; k < K; ++k) state.clients.push_back({k, theta0, 1, std::nullopt});
    return state;
  }
};

struct ProtocolContext {
  const GcCode* code = nullptr;
  const GeneratorMatrix* keys = nullptr;
  const NetworkModel* net = nullptr;
  const Objective* objective = nullptr;
  LocalSolver solver;
  FailureMode on_failure = FailureMode::kAccumulate;
  std::uint64_t seed = 0;
};

// Only what crosses the wire (masked updates and partial sums) plus protocol
// metadata; raw local updates never appear here.
struct RoundTrace {
  std::int64_t round = 0;
  LinkRealization links;
  Eigen::MatrixXd masked;                   // Y_k in row k
  std::vector<std::vector<int>> decode_sets;  // U_k^t restricted to the support
  Eigen::MatrixXd partial_sums;             // S_k in row k
  std::vector<bool> complete;
  std::vector<int> arrived;
  std::optional<int> combinator;
  std::optional<Eigen::VectorXd> recovered_update;
  Outcome outcome = Outcome::kSuccess;
  int accumulated_rounds = 1;

  bool success() const { return combinator.has_value(); }
};

// Oracle-side view of a round for tests and audits.
struct RoundAudit {
  Eigen::MatrixXd raw_updates;  // Delta_k in row k
  Eigen::MatrixXd keys;         // N_k in row k
};

inline std::pair<FederationState, RoundTrace> RunRound(const FederationState& state,
                                                       const ProtocolContext& ctx, std::int64_t t,
                                                       RoundAudit* audit = nullptr) {
  const GcCode& code = *ctx.code;
  const int K = code.K;
  const int D = static_cast<int>(state.global.size());
  if (ctx.keys->K != K || ctx.net->K != K || ctx.objective->K() != K ||
      static_cast<int>(state.clients.size()) != K) {
    throw Error(ErrorCode::kDimMismatch, "code, keys, network, objective and state disagree on K");
  }
  if (ctx.objective->D != D) throw Error(ErrorCode::kDimMismatch, "model dimension mismatch");

  FederationState next = state;
  Eigen::MatrixXd deltas(K, D);
  for (int k = 0; k < K; ++k) {
    ClientState& client = next.clients[k];
    if (client.pending_delta) {
      deltas.row(k) = client.pending_delta->transpose();
      continue;
    }
    CounterRng rng(ctx.seed, {static_cast<std::uint64_t>(Stream::kTraining),
                              static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(k)});
    client.theta += LocalUpdate(client.theta, *ctx.objective, k, ctx.solver, rng);
    deltas.row(k) = (client.theta - state.global).transpose();
  }

  const SecretKeySet keys = SampleKeys(*ctx.keys, D, ctx.seed, static_cast<std::uint64_t>(t));
  RoundTrace trace;
  trace.round = t;
  trace.accumulated_rounds = state.clients.front().accumulated_rounds;
  trace.masked.resize(K, D);
  for (int k = 0; k < K; ++k) {
    trace.masked.row(k) =
        MaskUpdate(deltas.row(k).transpose(), keys.keys.row(k).transpose()).transpose();
  }
  if (audit) {
    audit->raw_updates = deltas;
    audit->keys = keys.keys;
  }

  trace.links = SampleLinks(*ctx.net, ctx.seed, t);
  trace.partial_sums.resize(K, D);
  std::vector<std::optional<Eigen::VectorXd>> received(K);
  for (int k = 0; k < K; ++k) {
    std::vector<int> decoded;
    for (int m : code.support[k]) {
      if (trace.links.Received(k, m)) decoded.push_back(m);
    }
    trace.decode_sets.push_back(std::move(decoded));
    PartialSum ps = ComputePartialSum(k, trace.masked, code, trace.links);
    trace.partial_sums.row(k) = ps.value.transpose();
    trace.complete.push_back(ps.complete);
    if (ps.complete && trace.links.Up(k)) {
      trace.arrived.push_back(k);
      received[k] = std::move(ps.value);
    }
  }
  trace.outcome = ClassifyOutcome(code, trace.links);

  AggregateResult agg = ServerAggregate(code, received, state.global);
  trace.combinator = agg.combinator;
  trace.recovered_update = agg.update;
  if (agg.theta) {
    next.global = *agg.theta;
    for (auto& client : next.clients) {
      client.theta = next.global;
      client.accumulated_rounds = 1;
      client.pending_delta.reset();
    }
  } else if (ctx.on_failure == FailureMode::kAccumulate) {
    for (auto& client : next.clients) ++client.accumulated_rounds;
  } else {
    for (int k = 0; k < K; ++k) next.clients[k].pending_delta = deltas.row(k).transpose();
  }
  return {std::move(next), std::move(trace)};
}

enum class TraceLevel { kNone, kSummary, kFull };

struct RoundRecord {
  std::int64_t round = 0;
  bool success = false;
  Outcome outcome = Outcome::kSuccess;
  double loss = 0.0;       // global loss at the start-of-round global model
  double grad_norm = 0.0;  // |grad L| at the same model
  int accumulated_rounds = 1;
  int combinator = -1;
};

struct TrainingTrace {
  std::vector<RoundRecord> rows;
  std::int64_t successes = 0;  // T_c
  Eigen::VectorXd final_global;
  std::vector<RoundTrace> rounds;  // populated for TraceLevel::kFull
};

struct TrainingOptions {
  std::int64_t T = 100;
  TraceLevel trace = TraceLevel::kSummary;
  std::optional<Eigen::VectorXd> theta0;  // zeros when unset
};

// Runs rounds until at least T rounds have executed and the last one
// recovered the global model. Gives up with NoSuccessBeforeCap after 10 * T.
inline TrainingTrace RunTraining(const ProtocolContext& ctx, const TrainingOptions& options) {
  if (options.T < 1) throw Error(ErrorCode::kInvalidArgument, "T must be >= 1");
  const int D = ctx.objective->D;
  FederationState state = FederationState::Initial(
      options.theta0.value_or(Eigen::VectorXd::Zero(D)), ctx.code->K);
  TrainingTrace out;
  const std::int64_t cap = 10 * options.T;
  for (std::int64_t t = 1; t <= cap; ++t) {
    RoundRecord rec;
    rec.round = t;
    rec.loss = GlobalLoss(state.global, *ctx.objective);
    rec.grad_norm = GlobalGradNorm(state.global, *ctx.objective);
    auto [next, trace] = RunRound(state, ctx, t);
    rec.success = trace.success();
    rec.outcome = trace.outcome;
    rec.accumulated_rounds = trace.accumulated_rounds;
    rec.combinator = trace.combinator.value_or(-1);
    out.rows.push_back(rec);
    if (rec.success) ++out.successes;
    if (options.trace == TraceLevel::kFull) out.rounds.push_back(std::move(trace));
    state = std::move(next);
    if (t >= options.T && rec.success) {
      out.final_global = state.global;
      return out;
    }
  }
  throw Error(ErrorCode::kNoSuccessBeforeCap,
              "no successful round by round " + std::to_string(cap));
}

// Fixed columns: round,success,event_label,loss,grad_norm,R_t,combinator_index
inline std::string TraceToCsv(const TrainingTrace& trace) {
  std::string csv = "round,success,event_label,loss,grad_norm,R_t,combinator_index\n";
  char buf[256];
  for (const auto& r : trace.rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%d,%s,%.17g,%.17g,%d,%d\n",
                  static_cast<long long>(r.round), r.success ? 1 : 0,
                  std::string(OutcomeName(r.outcome)).c_str(), r.loss, r.grad_norm,
                  r.accumulated_rounds, r.combinator);
    csv += buf;
  }
  return csv;
}

inline nlohmann::json VectorToJson(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline nlohmann::json ToJson(const RoundTrace& t) {
  nlohmann::json j = {{"round", t.round},
                      {"links", ToJson(t.links)},
                      {"masked_updates", MatrixToJson(t.masked)},
                      {"decode_sets", t.decode_sets},
                      {"partial_sums", MatrixToJson(t.partial_sums)},
                      {"complete", t.complete},
                      {"arrived", t.arrived},
                      {"outcome", std::string(OutcomeName(t.outcome))},
                      {"R_t", t.accumulated_rounds}};
  j["combinator"] = t.combinator ? nlohmann::json(*t.combinator) : nlohmann::json(nullptr);
  j["recovered_update"] =
      t.recovered_update ? VectorToJson(*t.recovered_update) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json ToJson(const TrainingTrace& trace) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : trace.rows) {
    rows.push_back({{"round", r.round},
                    {"success", r.success},
                    {"event_label", std::string(OutcomeName(r.outcome))},
                    {"loss", r.loss},
                    {"grad_norm", r.grad_norm},
                    {"R_t", r.accumulated_rounds},
                    {"combinator_index", r.combinator}});
  }
  nlohmann::json j = {{"rows", rows},
                      {"T_c", trace.successes},
                      {"final_global", VectorToJson(trace.final_global)}};
  if (!trace.rounds.empty()) {
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& r : trace.rounds) rounds.push_back(ToJson(r));
    j["rounds"] = std::move(rounds);
  }
  return j;
}

}  // namespace seccogc

#endif  // SECCOGC_PROTOCOL_H_
