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

#include "seccogc/convergence_bound.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_rig.h"

namespace seccogc {
namespace {

double SeriesPolylog(int v, double z) {
  double sum = 0.0;
  for (int k = 1; k < 100000; ++k) {
    const double term = std::pow(static_cast<double>(k), v) * std::pow(z, k);
    sum += term;
    if (term < 1e-20 * sum) break;
  }
  return sum;
}

template <typename Fn>
void ExpectCode(ErrorCode want, Fn&& fn) {
  try {
    fn();
    ADD_FAILURE() << "no error thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), want) << e.what();
  }
}

TEST(PolylogTest, KnownValues) {
  EXPECT_NEAR(PolylogNeg(0, 0.5), 1.0, 1e-15);
  EXPECT_NEAR(PolylogNeg(1, 0.5), 2.0, 1e-15);
  EXPECT_NEAR(PolylogNeg(2, 0.5) / 6.0, 1.0, 1e-10);
  EXPECT_NEAR(PolylogNeg(4, 0.5) / 150.0, 1.0, 1e-10);
  EXPECT_NEAR(PolylogNeg(2, 0.3), 0.3 * 1.3 / std::pow(0.7, 3), 1e-14);
}

TEST(PolylogTest, MatchesSeries) {
  for (int v = 0; v <= 8; ++v) {
    for (double z : {0.001, 0.01, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9}) {
      const double want = SeriesPolylog(v, z);
      EXPECT_NEAR(PolylogNeg(v, z) / want, 1.0, 1e-10) << "v=" << v << " z=" << z;
    }
  }
}

TEST(PolylogTest, NumeratorCoefficients) {
  // Eulerian numbers.
  EXPECT_EQ(internal::PolylogNumerator(0), std::vector<double>({1}));
  EXPECT_EQ(internal::PolylogNumerator(2), std::vector<double>({1, 1, 0}));
  EXPECT_EQ(internal::PolylogNumerator(3), std::vector<double>({1, 4, 1, 0}));
  EXPECT_EQ(internal::PolylogNumerator(4), std::vector<double>({1, 11, 11, 1, 0}));
}

TEST(PolylogTest, Domain) {
  ExpectCode(ErrorCode::kDomainError, [] { PolylogNeg(2, 0.0); });
  ExpectCode(ErrorCode::kDomainError, [] { PolylogNeg(2, 1.0); });
  ExpectCode(ErrorCode::kDomainError, [] { PolylogNeg(2, -0.1); });
  ExpectCode(ErrorCode::kDomainError, [] { PolylogNeg(-1, 0.5); });
  EXPECT_EQ(PolylogNegOverZ(4, 0.0), 1.0);
}

TEST(PsiTest, ClosedFormAndLimits) {
  const double T = 1e4;
  const double ts2 = T * 0.9 * 0.7;
  const double want =
      SeriesPolylog(2, 0.1) + 3.0 / (ts2 + 1.0) * (SeriesPolylog(4, 0.1) - SeriesPolylog(2, 0.1));
  EXPECT_NEAR(Psi(0.1, T) / want, 1.0, 1e-10);
  EXPECT_EQ(Psi(0.0, T), 0.0);
  EXPECT_LT(Psi(1e-9, T), 2e-9);
  EXPECT_NEAR(internal::PsiOverP(0.0, T), 1.0, 1e-15);
  EXPECT_NEAR(internal::PsiOverP(1e-9, T), 1.0, 1e-8);
  EXPECT_DOUBLE_EQ(ReducedHorizon(0.1, 100), 100 * 0.9 * 0.7);
}

TEST(PsiTest, OutageOutsideDomain) {
  ExpectCode(ErrorCode::kDomainWarning, [] { Psi(0.4, 100); });
  ExpectCode(ErrorCode::kDomainWarning, [] { Psi(1.0 / 3.0, 100); });
  ExpectCode(ErrorCode::kDomainError, [] { Psi(1.0, 100); });
  ExpectCode(ErrorCode::kDomainError, [] { Psi(-0.01, 100); });
}

ConvergenceParams BaseParams() {
  ConvergenceParams p;
  p.T = 1000;
  p.K = 10;
  p.G_smooth = 2.0;
  p.a = {1, 1, 1, 1, 1};
  p.sigma2 = 0.5;
  p.kappa2 = 0.25;
  p.L0_gap = 3.0;
  p.eta = StandardStepSize(p.G_smooth, p.K, p.T);
  return p;
}

TEST(BoundRhsTest, FiniteAndMonotoneOnGrid) {
  double prev_psi = 0.0;
  double prev_bound = 0.0;
  for (int i = 1; i <= 30; ++i) {
    ConvergenceParams p = BaseParams();
    p.P_O = 0.01 * i;
    const double psi = Psi(p.P_O, p.T);
    const double bound = BoundRhs(p);
    EXPECT_TRUE(std::isfinite(psi));
    EXPECT_TRUE(std::isfinite(bound));
    EXPECT_GT(psi, prev_psi);
    EXPECT_GT(bound, prev_bound);
    prev_psi = psi;
    prev_bound = bound;
  }
}

TEST(BoundRhsTest, TermFormulas) {
  ConvergenceParams p = BaseParams();
  p.P_O = 0.2;
  const BoundTerms t = BoundRhsTerms(p);
  EXPECT_NEAR(t.optimization, 2.0 * 2.0 * 3.0 / (5.0 * 0.8 * 0.4 * std::sqrt(1e4)), 1e-14);
  const double want = 2.0 * std::sqrt(10.0 / 1000.0) * 5.0 * (0.8 / 0.2) * Psi(0.2, 1000) * 1.0;
  EXPECT_NEAR(t.outage / want, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(BoundRhs(p), t.total());
}

TEST(BoundRhsTest, NoiselessLimit) {
  ConvergenceParams p = BaseParams();
  p.sigma2 = 0.0;
  p.kappa2 = 0.0;
  p.P_O = 1e-12;
  EXPECT_NEAR(BoundRhs(p), 2.0 * 2.0 * 3.0 / (5.0 * std::sqrt(1e4)), 1e-12);
  p.P_O = 0.0;
  EXPECT_DOUBLE_EQ(BoundRhs(p), 2.0 * 2.0 * 3.0 / (5.0 * std::sqrt(1e4)));
}

TEST(BoundRhsTest, InverseSquareRootRate) {
  ConvergenceParams p = BaseParams();
  p.P_O = 0.1;
  const double first = BoundRhsTerms(p).optimization;
  p.T *= 2;
  EXPECT_NEAR(first / BoundRhsTerms(p).optimization, std::sqrt(2.0), 1e-12);
}

TEST(BoundRhsTest, DependsOnSolverOnlyThroughL1Norm) {
  ConvergenceParams p = BaseParams();
  p.P_O = 0.15;
  ConvergenceParams q = p;
  q.a = {5.0};
  EXPECT_DOUBLE_EQ(BoundRhs(p), BoundRhs(q));
  q.a = {-2.0, 3.0};
  EXPECT_DOUBLE_EQ(BoundRhs(p), BoundRhs(q));
}

TEST(BoundRhsTest, Validation) {
  ConvergenceParams p = BaseParams();
  p.a = {0.0};
  ExpectCode(ErrorCode::kInvalidArgument, [&] { BoundRhs(p); });
  p = BaseParams();
  p.beta2 = 0.5;
  ExpectCode(ErrorCode::kInvalidArgument, [&] { BoundRhs(p); });
  p = BaseParams();
  p.P_O = 0.35;
  ExpectCode(ErrorCode::kDomainWarning, [&] { BoundRhs(p); });
}

TEST(AccumulationBoundTest, Values) {
  const double G = 2.0;
  const double a1 = 3.0;
  const double eta = 1.0 / (2.0 * G * a1);
  EXPECT_NEAR(AccumulationVarianceBound(1, eta, G, a1, 7.0), 4.0 * eta * eta * 27.0 * 7.0, 1e-14);
  EXPECT_LT(AccumulationVarianceBound(3, 1e-6, G, a1, 7.0), 2e-8);
  EXPECT_EQ(AccumulationVarianceBound(2, 0.0, G, a1, 7.0), 0.0);
  const double threshold = (1.0 + 1e-12) / (std::sqrt(2.0) * G * a1);
  ExpectCode(ErrorCode::kStepTooLarge, [&] { AccumulationVarianceBound(1, threshold, G, a1, 1.0); });
  ExpectCode(ErrorCode::kStepTooLarge, [&] { AccumulationVarianceBound(2, eta, G, a1, 1.0); });
  ExpectCode(ErrorCode::kInvalidArgument, [&] { AccumulationVarianceBound(0, eta, G, a1, 1.0); });
}

TEST(AccumulationBoundTest, DominatesGradientDescentDrift) {
  // One client, L = (G/2)(theta - c)^2, R_t * I steps from theta0.
  const double c = 1.5;
  for (double G : {0.5, 2.0}) {
    for (int I : {1, 3, 5}) {
      for (int R : {1, 2, 4}) {
        for (double scale : {0.05, 0.2, 0.6}) {
          const double eta = scale / (std::sqrt(2.0) * G * R * I);
          double theta = 0.0;
          double lhs = 0.0;
          for (int i = 0; i < R * I; ++i) {
            theta -= eta * G * (theta - c);
            lhs += theta * theta;
          }
          const double grad2 = G * G * c * c;
          EXPECT_LE(lhs, AccumulationVarianceBound(R, eta, G, I, grad2))
              << "G=" << G << " I=" << I << " R=" << R << " scale=" << scale;
        }
      }
    }
  }
}

TEST(EmpiricalVsBoundTest, AveragesSuccessfulRowsOnly) {
  TrainingTrace trace;
  for (int t = 1; t <= 4; ++t) {
    RoundRecord r;
    r.round = t;
    r.success = t % 2 == 0;
    r.grad_norm = t;
    trace.rows.push_back(r);
  }
  ConvergenceParams p = BaseParams();
  const BoundComparison c = EmpiricalVsBound(trace, p);
  EXPECT_EQ(c.successes, 2);
  EXPECT_EQ(c.rounds, 4);
  EXPECT_DOUBLE_EQ(c.empirical, (4.0 + 16.0) / 2.0);
  EXPECT_DOUBLE_EQ(c.bound, BoundRhs(p));
  EXPECT_EQ(c.violated, c.empirical > c.bound);
}

TEST(EmpiricalVsBoundTest, PerfectNetworkQuadraticStaysBelow) {
  const int K = 5;
  const int T = 200;
  testing::Rig rig(K, 2, 4, 1.0, 0.0, 0.0, 9, 2);
  const double G = QuadraticSmoothness(rig.objective);
  rig.ctx.solver.eta = StandardStepSize(G, K, T);
  TrainingOptions options;
  options.T = T;
  const TrainingTrace trace = RunTraining(rig.ctx, options);

  ConvergenceParams p;
  p.T = T;
  p.K = K;
  p.G_smooth = G;
  p.a = {1.0, 1.0};
  p.sigma2 = 0.0;
  std::vector<Eigen::VectorXd> probes = {Eigen::VectorXd::Zero(4), *rig.objective.known_optimum};
  p.kappa2 = FitDissimilarity(rig.objective, probes, 1.0);
  p.P_O = 0.0;
  p.L0_gap = GlobalLoss(Eigen::VectorXd::Zero(4), rig.objective) -
             GlobalLoss(*rig.objective.known_optimum, rig.objective);
  const BoundComparison c = EmpiricalVsBound(trace, p);
  EXPECT_EQ(c.successes, T);
  EXPECT_FALSE(c.violated) << c.empirical << " vs " << c.bound;

  ConvergenceParams loose = p;
  loose.sigma2 = 100.0 * (p.sigma2 + 1.0);
  const BoundComparison d = EmpiricalVsBound(trace, loose);
  EXPECT_GT(d.bound, c.bound);
  EXPECT_FALSE(d.violated);
}

TEST(ConvergenceJsonTest, RoundTrip) {
  ConvergenceParams p = BaseParams();
  p.P_O = 0.2;
  const ConvergenceParams q = ConvergenceParamsFromJson(ToJson(p));
  EXPECT_EQ(ToJson(q), ToJson(p));
  nlohmann::json j = ToJson(p);
  j.erase("eta");
  EXPECT_DOUBLE_EQ(ConvergenceParamsFromJson(j).eta, StandardStepSize(2.0, 10, 1000));
}

}  // namespace
}  // namespace seccogc
