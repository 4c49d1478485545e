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

// Polylogarithm of negative integer order, the accumulation-variance bound
// and the averaged squared-gradient bound for training over lossy links.

#ifndef SECCOGC_CONVERGENCE_BOUND_H_
#define SECCOGC_CONVERGENCE_BOUND_H_

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "seccogc/protocol.h"
#include "seccogc/status.h"

namespace seccogc {

namespace internal {

// Li_{-v}(z) = z P_v(z) / (1 - z)^{v + 1}. Starting from Li_0 = z / (1 - z)
// each application of z d/dz maps P -> (P + z P')(1 - z) + m z P with m the
// current power of (1 - z). Coefficients are in increasing degree.
inline std::vector<double> PolylogNumerator(int v) {
  std::vector<double> p = {1.0};
  for (int m = 1; m <= v; ++m) {
    std::vector<double> q(p.size() + 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double a = p[i] * static_cast<double>(i + 1);  // (P + z P') coefficient
      q[i] += a;
      q[i + 1] -= a;
      q[i + 1] += m * p[i];
    }
    p = std::move(q);
  }
  return p;
}

inline void CheckPolylogArgs(int v, double z, bool allow_zero) {
  if (v < 0) throw Error(ErrorCode::kDomainError, "order v must be nonnegative");
  const bool ok = allow_zero ? (z >= 0.0 && z < 1.0) : (z > 0.0 && z < 1.0);
  if (!ok) throw Error(ErrorCode::kDomainError, "z must lie in (0, 1)");
}

}  // namespace internal

// Li_{-v}(z) / z; finite at z = 0 where it equals 1.
inline double PolylogNegOverZ(int v, double z) {
  internal::CheckPolylogArgs(v, z, true);
  const std::vector<double> p = internal::PolylogNumerator(v);
  double num = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) num = num * z + *it;
  return num / std::pow(1.0 - z, v + 1);
}

// Li_{-v}(z) = sum_{k >= 1} k^v z^k.
inline double PolylogNeg(int v, double z) {
  internal::CheckPolylogArgs(v, z, false);
  return z * PolylogNegOverZ(v, z);
}

// T (1 - P_O)(1 - 3 P_O).
inline double ReducedHorizon(double p_outage, double T) {
  return T * (1.0 - p_outage) * (1.0 - 3.0 * p_outage);
}

namespace internal {

inline void CheckOutage(double p_outage) {
  if (!(p_outage >= 0.0 && p_outage < 1.0)) {
    throw Error(ErrorCode::kDomainError, "P_O must lie in [0, 1)");
  }
  if (p_outage >= 1.0 / 3.0) {
    throw Error(ErrorCode::kDomainWarning, "bound inapplicable for P_O >= 1/3");
  }
}

// psi(P_O) / P_O.
inline double PsiOverP(double p_outage, double T) {
  CheckOutage(p_outage);
  const double li2 = PolylogNegOverZ(2, p_outage);
  const double li4 = PolylogNegOverZ(4, p_outage);
  return li2 + 3.0 / (ReducedHorizon(p_outage, T) + 1.0) * (li4 - li2);
}

}  // namespace internal

// psi(P_O) = Li_{-2}(P_O) + 3 / (T_s2 + 1) (Li_{-4}(P_O) - Li_{-2}(P_O)).
inline double Psi(double p_outage, double T) {
  return p_outage * internal::PsiOverP(p_outage, T);
}

struct ConvergenceParams {
  double T = 100;
  int K = 10;
  double G_smooth = 1.0;
  std::vector<double> a = {1.0};
  double sigma2 = 0.0;
  double kappa2 = 0.0;
  double beta2 = 1.0;  // only enters through the "T large enough" condition
  double P_O = 0.0;
  double L0_gap = 1.0;
  double eta = 0.0;  // the bound assumes StandardStepSize(G, K, T)

  double a_l1() const {
    double s = 0.0;
    for (double x : a) s += std::abs(x);
    return s;
  }

  void Validate() const {
    if (!(T > 0)) throw Error(ErrorCode::kInvalidArgument, "T must be > 0");
    if (K < 1) throw Error(ErrorCode::kInvalidArgument, "K must be >= 1");
    if (!(G_smooth > 0)) throw Error(ErrorCode::kInvalidArgument, "G must be > 0");
    if (!(a_l1() > 0)) throw Error(ErrorCode::kInvalidArgument, "|a|_1 must be > 0");
    if (sigma2 < 0 || kappa2 < 0) {
      throw Error(ErrorCode::kInvalidArgument, "sigma2 and kappa2 must be >= 0");
    }
    if (beta2 < 1) throw Error(ErrorCode::kInvalidArgument, "beta2 must be >= 1");
    if (L0_gap < 0) throw Error(ErrorCode::kInvalidArgument, "L0_gap must be >= 0");
  }
};

// eta = (1 / G) sqrt(K / T).
inline double StandardStepSize(double G, int K, double T) { return std::sqrt(K / T) / G; }

struct BoundTerms {
  double optimization = 0.0;  // initial-gap term
  double outage = 0.0;        // variance/dissimilarity term driven by P_O
  double total() const { return optimization + outage; }
};

inline BoundTerms BoundRhsTerms(const ConvergenceParams& p) {
  p.Validate();
  const double a1 = p.a_l1();
  const double po = p.P_O;
  const double psi_over_p = internal::PsiOverP(po, p.T);
  BoundTerms t;
  t.optimization = 2.0 * p.G_smooth * p.L0_gap /
                   (a1 * (1.0 - po) * (1.0 - 3.0 * po) * std::sqrt(p.K * p.T));
  t.outage = 2.0 * std::sqrt(p.K / p.T) * a1 * (1.0 - po) * psi_over_p *
             (p.sigma2 + 2.0 * p.kappa2);
  return t;
}

// Upper bound on the averaged squared global-gradient norm over successful
// rounds (holds with probability above 99.73%).
inline double BoundRhs(const ConvergenceParams& p) { return BoundRhsTerms(p).total(); }

// Accumulated local variance after R_t I local steps:
// 2 eta^2 R^3 |a|^3 / (1 - 2 eta^2 G^2 R^2 |a|^2) * E|grad L_k|^2.
inline double AccumulationVarianceBound(int R_t, double eta, double G, double a_l1,
                                        double grad_norm2) {
  if (R_t < 1) throw Error(ErrorCode::kInvalidArgument, "R_t must be >= 1");
  const double r = R_t;
  const double q = 2.0 * eta * eta * G * G * r * r * a_l1 * a_l1;
  if (q >= 1.0) throw Error(ErrorCode::kStepTooLarge, "2 eta^2 G^2 R_t^2 |a|_1^2 >= 1");
  return 2.0 * eta * eta * r * r * r * a_l1 * a_l1 * a_l1 / (1.0 - q) * grad_norm2;
}

struct BoundComparison {
  double empirical = 0.0;  // (1/T_c) sum over successful rounds of |grad L(theta^{t-1})|^2
  double bound = 0.0;
  int successes = 0;
  int rounds = 0;
  bool violated = false;
};

inline BoundComparison EmpiricalVsBound(const TrainingTrace& trace, const ConvergenceParams& p) {
  BoundComparison c;
  c.bound = BoundRhs(p);
  c.rounds = static_cast<int>(trace.rows.size());
  double sum = 0.0;
  for (const RoundRecord& row : trace.rows) {
    if (!row.success) continue;
    sum += row.grad_norm * row.grad_norm;
    ++c.successes;
  }
  c.empirical = c.successes > 0 ? sum / c.successes : 0.0;
  c.violated = c.empirical > c.bound;
  return c;
}

inline nlohmann::json ToJson(const ConvergenceParams& p) {
  return {{"T", p.T},          {"K", p.K},           {"G_smooth", p.G_smooth},
          {"a", p.a},          {"sigma2", p.sigma2}, {"kappa2", p.kappa2},
          {"beta2", p.beta2},  {"P_O", p.P_O},       {"L0_gap", p.L0_gap},
          {"eta", p.eta}};
}

inline ConvergenceParams ConvergenceParamsFromJson(const nlohmann::json& j) {
  ConvergenceParams p;
  p.T = j.at("T").get<double>();
  p.K = j.at("K").get<int>();
  p.G_smooth = j.at("G_smooth").get<double>();
  p.a = j.at("a").get<std::vector<double>>();
  p.sigma2 = j.value("sigma2", 0.0);
  p.kappa2 = j.value("kappa2", 0.0);
  p.beta2 = j.value("beta2", 1.0);
  p.P_O = j.value("P_O", 0.0);
  p.L0_gap = j.at("L0_gap").get<double>();
  p.eta = j.value("eta", StandardStepSize(p.G_smooth, p.K, p.T));
  return p;
}

inline nlohmann::json ToJson(const BoundComparison& c) {
  return {{"empirical", c.empirical}, {"bound", c.bound},   {"successes", c.successes},
          {"rounds", c.rounds},       {"violated", c.violated}};
}

}  // namespace seccogc

#endif  // SECCOGC_CONVERGENCE_BOUND_H_
