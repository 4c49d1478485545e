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

#include "seccogc/protocol.h"

#include <gtest/gtest.h>

#include "test_rig.h"

namespace seccogc {
namespace {

using testing::MaxRelativeDeviation;
using testing::Rig;

GcCode ThreeClientCode() {
  Eigen::MatrixXd g(3, 3);
  g << 0.5, 1, 0,  //
      0, 1, -1,    //
      0.5, 0, 1;
  return CodeFromAllocation(g, 1);
}

TEST(MaskUpdateTest, Arithmetic) {
  const Eigen::Vector2d delta(1, 2);
  const Eigen::Vector2d key(0.5, -0.5);
  EXPECT_EQ(MaskUpdate(delta, key), Eigen::VectorXd(Eigen::Vector2d(1.5, 1.5)));
  EXPECT_EQ(MaskUpdate(delta, Eigen::VectorXd::Zero(2)), Eigen::VectorXd(delta));
  EXPECT_EQ(MaskUpdate(Eigen::VectorXd::Zero(2), key), Eigen::VectorXd(key));
  EXPECT_THROW(MaskUpdate(delta, Eigen::VectorXd::Zero(3)), Error);
}

TEST(ComputePartialSumTest, ThreeClientRelay) {
  const GcCode code = ThreeClientCode();
  Eigen::MatrixXd y(3, 2);
  y << 1, 2,  //
      3, 4,   //
      5, 6;
  LinkRealization links(3, 0, true);
  PartialSum ps = ComputePartialSum(0, y, code, links);
  EXPECT_TRUE(ps.complete);
  EXPECT_EQ(ps.value, Eigen::VectorXd((0.5 * y.row(0) + y.row(1)).transpose()));
  links.Inter(0, 1) = 0;
  ps = ComputePartialSum(0, y, code, links);
  EXPECT_FALSE(ps.complete);
  EXPECT_EQ(ps.value, Eigen::VectorXd((0.5 * y.row(0)).transpose()));
}

TEST(ComputePartialSumTest, NoSharingAlwaysComplete) {
  const GcCode code = BuildCode(4, 0, 2);
  const Eigen::MatrixXd y = Eigen::MatrixXd::Random(4, 3);
  const LinkRealization links(4, 0, false);
  for (int k = 0; k < 4; ++k) {
    const PartialSum ps = ComputePartialSum(k, y, code, links);
    EXPECT_TRUE(ps.complete);
    EXPECT_EQ(ps.value, Eigen::VectorXd(code.G(k, k) * y.row(k).transpose()));
  }
}

std::vector<std::optional<Eigen::VectorXd>> AllPartials(const GcCode& code,
                                                        const Eigen::MatrixXd& y) {
  std::vector<std::optional<Eigen::VectorXd>> out;
  const LinkRealization links(code.K, 0, true);
  for (int k = 0; k < code.K; ++k) out.push_back(ComputePartialSum(k, y, code, links).value);
  return out;
}

TEST(ServerAggregateTest, ZeroKeysIsPlainAverage) {
  const GcCode code = BuildCode(6, 2, 3);
  const Eigen::MatrixXd delta = Eigen::MatrixXd::Random(6, 5);
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(5, 0.25);
  const AggregateResult r = ServerAggregate(code, AllPartials(code, delta), theta);
  ASSERT_TRUE(r.theta.has_value());
  const Eigen::VectorXd want = theta + delta.colwise().mean().transpose();
  EXPECT_LT(MaxRelativeDeviation(*r.theta, want), 1e-9);
}

TEST(ServerAggregateTest, CyclicKeysCancel) {
  const GcCode code = BuildCode(5, 2, 3);
  const Eigen::MatrixXd delta = Eigen::MatrixXd::Random(5, 8);
  const SecretKeySet keys = SampleKeys(ConstructFairCyclic(5, 2, 6.0), 8, 4);
  const Eigen::VectorXd theta = Eigen::VectorXd::Zero(8);
  const auto plain = ServerAggregate(code, AllPartials(code, delta), theta);
  const auto masked = ServerAggregate(code, AllPartials(code, delta + keys.keys), theta);
  EXPECT_LT(MaxRelativeDeviation(*masked.update, *plain.update), 1e-6);
}

TEST(ServerAggregateTest, TooFewArrivals) {
  const GcCode code = BuildCode(5, 2, 3);
  auto partials = AllPartials(code, Eigen::MatrixXd::Random(5, 2));
  partials[0].reset();
  partials[2].reset();
  EXPECT_TRUE(ServerAggregate(code, partials, Eigen::VectorXd::Zero(2)).theta.has_value());
  partials[4].reset();
  const AggregateResult r = ServerAggregate(code, partials, Eigen::VectorXd::Zero(2));
  EXPECT_FALSE(r.combinator.has_value());
  EXPECT_FALSE(r.theta.has_value());
}

TEST(RunRoundTest, PerfectNetworkIsFederatedAveraging) {
  Rig rig(6, 2, 4, 1.0, 0.0, 0.0, 5);
  FederationState state = rig.Initial();
  Eigen::VectorXd reference = state.global;
  for (int t = 1; t <= 10; ++t) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
    for (int k = 0; k < 6; ++k) {
      CounterRng rng(rig.ctx.seed, {static_cast<std::uint64_t>(Stream::kTraining),
                                    static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(k)});
      mean += LocalUpdate(reference, rig.objective, k, rig.ctx.solver, rng) / 6.0;
    }
    reference += mean;
    auto [next, trace] = RunRound(state, rig.ctx, t);
    ASSERT_TRUE(trace.success());
    state = next;
    EXPECT_LT(MaxRelativeDeviation(state.global, reference), 1e-6) << t;
  }
}

TEST(RunRoundTest, DeadUplinksMeanLocalTraining) {
  Rig rig(4, 1, 3, 1.0, 1.0, 0.0, 5);
  FederationState state = rig.Initial();
  std::vector<Eigen::VectorXd> local(4, Eigen::VectorXd::Zero(3));
  for (int t = 1; t <= 5; ++t) {
    for (int k = 0; k < 4; ++k) {
      CounterRng rng(rig.ctx.seed, {static_cast<std::uint64_t>(Stream::kTraining),
                                    static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(k)});
      local[k] += LocalUpdate(local[k], rig.objective, k, rig.ctx.solver, rng);
    }
    auto [next, trace] = RunRound(state, rig.ctx, t);
    EXPECT_FALSE(trace.success());
    EXPECT_EQ(trace.outcome, Outcome::kEvent2);
    EXPECT_EQ(trace.accumulated_rounds, t);
    state = next;
    EXPECT_EQ(state.global, Eigen::VectorXd::Zero(3));
    for (int k = 0; k < 4; ++k) {
      EXPECT_EQ(state.clients[k].theta, local[k]);
      EXPECT_EQ(state.clients[k].accumulated_rounds, t + 1);
    }
  }
}

TEST(RunRoundTest, ExactRecoveryOnEverySuccess) {
  for (double lambda2 : {0.0, 0.01, 1.0, 100.0}) {
    Rig rig(6, 3, 10, lambda2, 0.2, 0.1, 17);
    FederationState state = rig.Initial();
    int successes = 0;
    for (int t = 1; t <= 40; ++t) {
      RoundAudit audit;
      auto [next, trace] = RunRound(state, rig.ctx, t, &audit);
      EXPECT_EQ(trace.recovered_update.has_value(), trace.combinator.has_value());
      if (trace.success()) {
        ++successes;
        const Eigen::VectorXd want = audit.raw_updates.colwise().mean().transpose();
        EXPECT_LT(MaxRelativeDeviation(*trace.recovered_update, want), 1e-6)
            << "lambda2=" << lambda2 << " t=" << t;
      }
      state = next;
    }
    EXPECT_GT(successes, 0);
  }
}

TEST(RunRoundTest, TrajectoryIndependentOfKeyPower) {
  Rig low(6, 2, 5, 0.01, 0.25, 0.15, 23);
  Rig high(6, 2, 5, 100.0, 0.25, 0.15, 23);
  TrainingOptions options;
  options.T = 30;
  const TrainingTrace a = RunTraining(low.ctx, options);
  const TrainingTrace b = RunTraining(high.ctx, options);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].success, b.rows[i].success);
    EXPECT_NEAR(a.rows[i].loss, b.rows[i].loss, 1e-5 * std::abs(b.rows[i].loss));
  }
  EXPECT_LT(MaxRelativeDeviation(a.final_global, b.final_global), 1e-5);
}

TEST(RunRoundTest, RetryResendsPendingUpdate) {
  Rig rig(4, 1, 3, 1.0, 0.0, 0.0, 5);
  rig.ctx.on_failure = FailureMode::kRetry;
  FederationState state = rig.Initial();
  NetworkModel dead = NetworkModel::Symmetric(4, 1.0, 0.0);
  ProtocolContext failing = rig.ctx;
  failing.net = &dead;
  RoundAudit first;
  auto [after_fail, t1] = RunRound(state, failing, 1, &first);
  ASSERT_FALSE(t1.success());
  for (int k = 0; k < 4; ++k) ASSERT_TRUE(after_fail.clients[k].pending_delta.has_value());
  RoundAudit second;
  auto [after_ok, t2] = RunRound(after_fail, rig.ctx, 2, &second);
  ASSERT_TRUE(t2.success());
  EXPECT_EQ(second.raw_updates, first.raw_updates);
  EXPECT_LT(MaxRelativeDeviation(after_ok.global,
                                 first.raw_updates.colwise().mean().transpose()),
            1e-9);
  for (const auto& c : after_ok.clients) EXPECT_FALSE(c.pending_delta.has_value());
}

TEST(RunRoundTest, AccumulatedCounterResetsOnSuccess) {
  Rig rig(4, 1, 3, 1.0, 0.5, 0.2, 8);
  FederationState state = rig.Initial();
  for (int t = 1; t <= 30; ++t) {
    auto [next, trace] = RunRound(state, rig.ctx, t);
    for (const auto& c : next.clients) {
      EXPECT_EQ(c.accumulated_rounds, trace.success() ? 1 : trace.accumulated_rounds + 1);
    }
    state = next;
  }
}

TEST(RunTrainingTest, PerfectNetworkRunsExactlyT) {
  Rig rig(5, 2, 3, 1.0, 0.0, 0.0, 3);
  TrainingOptions options;
  options.T = 10;
  const TrainingTrace trace = RunTraining(rig.ctx, options);
  EXPECT_EQ(trace.rows.size(), 10u);
  EXPECT_EQ(trace.successes, 10);
}

TEST(RunTrainingTest, LossyNetworkEndsOnSuccess) {
  Rig rig(5, 2, 3, 1.0, 0.45, 0.2, 3);
  TrainingOptions options;
  options.T = 10;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    rig.ctx.seed = seed;
    const TrainingTrace trace = RunTraining(rig.ctx, options);
    EXPECT_GE(trace.rows.size(), 10u);
    EXPECT_TRUE(trace.rows.back().success);
    std::int64_t hits = 0;
    for (const auto& r : trace.rows) hits += r.combinator >= 0;
    EXPECT_EQ(hits, trace.successes);
  }
}

TEST(RunTrainingTest, ConvergesToKnownOptimum) {
  Rig rig(5, 2, 4, 1.0, 0.0, 0.0, 3, 1, 0.2);
  TrainingOptions options;
  options.T = 400;
  const TrainingTrace trace = RunTraining(rig.ctx, options);
  EXPECT_LT((trace.final_global - *rig.objective.known_optimum).norm(), 1e-3);
}

TEST(RunTrainingTest, GivesUpAfterCap) {
  Rig rig(4, 1, 2, 1.0, 1.0, 0.0, 3);
  TrainingOptions options;
  options.T = 3;
  try {
    RunTraining(rig.ctx, options);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoSuccessBeforeCap);
  }
}

TEST(TraceTest, CsvHeaderAndDeterminism) {
  Rig rig(5, 2, 3, 1.0, 0.3, 0.1, 3);
  TrainingOptions options;
  options.T = 15;
  const std::string a = TraceToCsv(RunTraining(rig.ctx, options));
  const std::string b = TraceToCsv(RunTraining(rig.ctx, options));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(0, a.find('\n')),
            "round,success,event_label,loss,grad_norm,R_t,combinator_index");
}

TEST(TraceTest, FullTraceCarriesOnlyWireValues) {
  Rig rig(4, 1, 2, 1.0, 0.3, 0.1, 3);
  TrainingOptions options;
  options.T = 3;
  options.trace = TraceLevel::kFull;
  const nlohmann::json j = ToJson(RunTraining(rig.ctx, options));
  ASSERT_TRUE(j.contains("rounds"));
  for (const auto& r : j["rounds"]) {
    EXPECT_TRUE(r.contains("masked_updates"));
    EXPECT_TRUE(r.contains("partial_sums"));
    EXPECT_FALSE(r.contains("raw_updates"));
    EXPECT_FALSE(r.contains("keys"));
  }
}

}  // namespace
}  // namespace seccogc
