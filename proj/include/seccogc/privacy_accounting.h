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

// Privacy accountants for every protocol layer: mutual-information leakage
// (LMIP, reported in bits by default) and (epsilon, delta)-LDP under the
// Gaussian mechanism (natural log inside sqrt(2 log(1.25 / delta))).
//
// Conventions: Lambda_k(m) = tau_{k,m} * g_{k,m} is the coefficient relay k
// actually applies to client m, and its expectation is
// Lambda_k^E(m) = (1 - p_{k,m}) * g_{k,m}.

#ifndef SECCOGC_PRIVACY_ACCOUNTING_H_
#define SECCOGC_PRIVACY_ACCOUNTING_H_

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "seccogc/gradient_code.h"
#include "seccogc/network_model.h"
#include "seccogc/secret_keys.h"
#include "seccogc/status.h"

namespace seccogc {

inline constexpr double kBits = 2.0;
inline constexpr double kNats = std::numbers::e;

inline double LogBase(double x, double base) { return std::log(x) / std::log(base); }

// sqrt(2 ln(1.25 / delta)) raised to `exponent` / (1/2); exponent 1/2 is the
// usual Gaussian-mechanism factor.
inline double GaussianFactor(double delta, double exponent = 0.5) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "delta must lie in (0, 1]");
  }
  return std::pow(2.0 * std::log(1.25 / delta), exponent);
}

struct LdpPair {
  double epsilon = 0.0;
  double delta = 0.0;
};

// Peer-to-peer leakage of the masked transmission k -> m:
// (1 - p) * (D / 2) * log(1 + zeta2 / lambda2).
inline double LmipPeer(double p, int D, double zeta2, double lambda2, double base = kBits) {
  if (!(lambda2 > 0.0)) throw Error(ErrorCode::kZeroNoise, "lambda2 must be > 0");
  return (1.0 - p) * 0.5 * D * LogBase(1.0 + zeta2 / lambda2, base);
}

inline Eigen::RowVectorXd EffectiveCoefficients(int k, const GcCode& code,
                                                const LinkRealization& links) {
  Eigen::RowVectorXd lam = Eigen::RowVectorXd::Zero(code.K);
  for (int m : code.support[k]) {
    if (links.Received(k, m)) lam(m) = code.G(k, m);
  }
  return lam;
}

inline Eigen::RowVectorXd ExpectedCoefficients(int k, const GcCode& code,
                                               const NetworkModel& net) {
  Eigen::RowVectorXd lam = Eigen::RowVectorXd::Zero(code.K);
  for (int m : code.support[k]) lam(m) = (1.0 - net.p_inter(k, m)) * code.G(k, m);
  return lam;
}

// Per-coordinate variance of sum_m Lambda(m) N_m, i.e. |Lambda A|^2.
inline double AggregatedNoiseVariance(const Eigen::RowVectorXd& lam, const Eigen::MatrixXd& a) {
  if (lam.size() != a.rows()) throw Error(ErrorCode::kDimMismatch, "Lambda length != K");
  return (lam * a).squaredNorm();
}

namespace internal {

// Visits every assignment of relay k's uncertain inbound links (support minus
// self) with its probability.
template <typename Fn>
void ForEachInboundRealization(int k, const GcCode& code, const NetworkModel& net, Fn&& fn) {
  std::vector<int> neighbors;
  for (int m : code.support[k]) {
    if (m != k) neighbors.push_back(m);
  }
  if (static_cast<int>(neighbors.size()) > kMaxEnumeratedLinks) {
    throw Error(ErrorCode::kTooManyLinks, "too many inbound links to enumerate");
  }
  LinkRealization links(code.K, 0, false);
  const std::uint64_t count = std::uint64_t{1} << neighbors.size();
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    double prob = 1.0;
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
      const bool on = (mask >> i) & 1U;
      const double p = net.p_inter(k, neighbors[i]);
      prob *= on ? 1.0 - p : p;
      links.Inter(k, neighbors[i]) = on;
    }
    if (prob > 0.0) fn(static_cast<const LinkRealization&>(links), prob);
  }
}

inline double RelayEntropyTerm(double g, double zeta2, double base) {
  return LogBase(2.0 * std::numbers::pi * std::numbers::e * g * g * zeta2, base);
}

inline double RelayRatioTerm(const Eigen::RowVectorXd& lam, int k1, const Eigen::MatrixXd& a,
                             double base) {
  Eigen::RowVectorXd without = lam;
  without(k1) = 0.0;
  const double nu = AggregatedNoiseVariance(lam, a);
  const double nu_without = AggregatedNoiseVariance(without, a);
  if (!(nu_without > 0.0) || !(nu > 0.0)) {
    throw Error(ErrorCode::kDegenerateNoise, "aggregated noise variance without k1 is zero");
  }
  return LogBase(nu / nu_without, base);
}

}  // namespace internal

// Relay leakage for one link realization in its derived form:
// (D/2) [1{tau_{k,k1}} log(2 pi e g^2 zeta2) + log(nu / nu^{-k1})].
// Zero when relay k did not hear k1.
inline double LmipRelayRealized(int k, int k1, const LinkRealization& links, const GcCode& code,
                                const GeneratorMatrix& a, int D, double zeta2,
                                double base = kBits) {
  const double g = code.G(k, k1);
  if (g == 0.0 || !links.Received(k, k1)) return 0.0;
  const Eigen::RowVectorXd lam = EffectiveCoefficients(k, code, links);
  return 0.5 * D *
         (internal::RelayEntropyTerm(g, zeta2, base) + internal::RelayRatioTerm(lam, k1, a.A, base));
}

// Scaled form: both terms multiplied by (1 - p_{k,k1}).
inline double LmipRelayPublished(int k, int k1, const LinkRealization& links, const GcCode& code,
                                 const NetworkModel& net, const GeneratorMatrix& a, int D,
                                 double zeta2, double base = kBits) {
  return (1.0 - net.p_inter(k, k1)) * LmipRelayRealized(k, k1, links, code, a, D, zeta2, base);
}

// Expectation form: (1 - p) on the entropy term, ratio term averaged over the
// relay's inbound link realizations.
inline double LmipRelayExpected(int k, int k1, const GcCode& code, const NetworkModel& net,
                                const GeneratorMatrix& a, int D, double zeta2,
                                double base = kBits) {
  const double g = code.G(k, k1);
  if (g == 0.0) return 0.0;
  double ratio = 0.0;
  internal::ForEachInboundRealization(k, code, net, [&](const LinkRealization& links, double p) {
    if (!links.Received(k, k1)) return;
    ratio += p * internal::RelayRatioTerm(EffectiveCoefficients(k, code, links), k1, a.A, base);
  });
  return 0.5 * D * ((1.0 - net.p_inter(k, k1)) * internal::RelayEntropyTerm(g, zeta2, base) + ratio);
}

// Exact I(Delta_{k1}; S_k) when every update is N(0, zeta2 I) and independent
// of the keys: (D/2) log[(zeta2 |Lambda|^2 + nu) / (zeta2 |Lambda^{-k1}|^2 + nu)].
inline double RelayGaussianMutualInformation(const Eigen::RowVectorXd& lam, int k1,
                                             const Eigen::MatrixXd& a, int D, double zeta2,
                                             double base = kBits) {
  const double nu = AggregatedNoiseVariance(lam, a);
  Eigen::RowVectorXd without = lam;
  without(k1) = 0.0;
  return 0.5 * D *
         LogBase((zeta2 * lam.squaredNorm() + nu) / (zeta2 * without.squaredNorm() + nu), base);
}

// RelayGaussianMutualInformation averaged over relay k's inbound link
// realizations; zero on realizations where k did not hear k1. Nonnegative,
// unlike the derived form whose entropy term is a differential entropy.
inline double LmipRelayGaussianExpected(int k, int k1, const GcCode& code,
                                        const NetworkModel& net, const GeneratorMatrix& a, int D,
                                        double zeta2, double base = kBits) {
  if (code.G(k, k1) == 0.0) return 0.0;
  double total = 0.0;
  internal::ForEachInboundRealization(k, code, net, [&](const LinkRealization& links, double p) {
    if (!links.Received(k, k1)) return;
    total += p * RelayGaussianMutualInformation(EffectiveCoefficients(k, code, links), k1, a.A, D,
                                                zeta2, base);
  });
  return total;
}

// Server-side leakage of the exact weighted average about client k.
inline double LmipServer(std::span<const double> w, int k, int D, double base = kBits) {
  int positive = 0;
  double others = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) {
    if (w[m] > 0.0) ++positive;
    if (static_cast<int>(m) != k) others += w[m] * w[m];
  }
  if (positive < 2 || !(others > 0.0)) {
    throw Error(ErrorCode::kSingleClient, "need at least two clients with positive weight");
  }
  return 0.5 * D * LogBase(1.0 + w[k] * w[k] / others, base);
}

// epsilon1 = (2R / lambda) sqrt(2 ln(1.25 / delta1)), delta = (1 - p) delta1.
inline LdpPair LdpPeer(double R, double lambda2, double p, double delta1) {
  if (!(lambda2 > 0.0)) throw Error(ErrorCode::kZeroNoise, "lambda2 must be > 0");
  return {2.0 * R / std::sqrt(lambda2) * GaussianFactor(delta1), (1.0 - p) * delta1};
}

struct NoiseVarianceReport {
  double formula = 0.0;     // closed form
  double enumerated = 0.0;  // E|Lambda_k A|^2 by exhaustive enumeration
  bool consistent = false;  // |formula - enumerated| <= 1e-9 * max(1, enumerated)

  double value() const { return enumerated; }
};

// nu-bar_k. The closed form is
//   sum_m (1 - p_{k,m}) g_{k,m}^2 |row m of A|^2 + Lambda^E A A^T Lambda^E^T,
// with |row m|^2 = lambda^2 for fair A. The enumeration is authoritative.
inline NoiseVarianceReport ExpectedNoiseVariance(int k, const GcCode& code,
                                                 const NetworkModel& net,
                                                 const GeneratorMatrix& a) {
  NoiseVarianceReport r;
  const Eigen::RowVectorXd lam_e = ExpectedCoefficients(k, code, net);
  const Eigen::VectorXd row_power = a.A.rowwise().squaredNorm();
  double first = 0.0;
  for (int m = 0; m < code.K; ++m) {
    first += (1.0 - net.p_inter(k, m)) * code.G(k, m) * code.G(k, m) * row_power(m);
  }
  r.formula = first + AggregatedNoiseVariance(lam_e, a.A);
  internal::ForEachInboundRealization(k, code, net, [&](const LinkRealization& links, double p) {
    r.enumerated += p * AggregatedNoiseVariance(EffectiveCoefficients(k, code, links), a.A);
  });
  r.consistent = std::abs(r.formula - r.enumerated) <= 1e-9 * std::max(1.0, r.enumerated);
  return r;
}

namespace internal {

inline LdpPair RelayLdp(int k, int j, const GcCode& code, const NetworkModel& net,
                        const GeneratorMatrix& a, double R, double delta, double r1,
                        double delta_prime, double sensitivity_scale) {
  const double p = net.p_inter(k, j);
  LdpPair out{0.0, (1.0 - p) * (delta_prime + delta)};
  if (p == 0.0) return out;
  const double nu_bar = ExpectedNoiseVariance(k, code, net, a).value();
  if (!(r1 < nu_bar)) {
    throw Error(ErrorCode::kBernsteinTooLarge, "Bernstein radius r1 must be below nu-bar_k");
  }
  out.epsilon = sensitivity_scale * GaussianFactor(delta) * std::abs(code.G(k, j)) * R /
                std::sqrt(nu_bar - r1);
  return out;
}

}  // namespace internal

// Identity of client j inside relay k's partial sum. Zero when p_{k,j} = 0.
inline LdpPair LdpRelayIdentity(int k, int j, const GcCode& code, const NetworkModel& net,
                                const GeneratorMatrix& a, double R, double delta2, double r1,
                                double delta_prime) {
  return internal::RelayLdp(k, j, code, net, a, R, delta2, r1, delta_prime, 1.0);
}

// Perturbation of client j's update; sensitivity doubles.
inline LdpPair LdpRelayPerturbation(int k, int j, const GcCode& code, const NetworkModel& net,
                                    const GeneratorMatrix& a, double R, double delta3, double r1,
                                    double delta_prime) {
  return internal::RelayLdp(k, j, code, net, a, R, delta3, r1, delta_prime, 2.0);
}

// nu-bar^{t,f'}: double sum over relay pairs (k1, k2),
//   sum_l alpha_l^T (sum c_{k1} c_{k2} (1-p_{k1})(1-p_{k2}) Lambda^E_{k1}^T Lambda^E_{k2}) alpha_l.
// The inner matrix is v^T v with v = sum_k c_k (1-p_k) Lambda^E_k, so the sum
// is evaluated as |v A|^2. Values at rounding level of the uncancelled terms
// are returned as exactly 0.
inline double ExpectedFailureNoiseVariance(int f, const GcCode& code, const NetworkModel& net,
                                           const GeneratorMatrix& a) {
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(code.K);
  double scale = 0.0;
  for (int k = 0; k < code.K; ++k) {
    const Eigen::RowVectorXd term =
        code.C(f, k) * (1.0 - net.p_up(k)) * ExpectedCoefficients(k, code, net);
    v += term;
    scale += AggregatedNoiseVariance(term, a.A);
  }
  const double total = AggregatedNoiseVariance(v, a.A);
  return total <= 1e-12 * scale ? 0.0 : total;
}

// Relays that listen to client j: V_j = {m : g_{m,j} != 0}.
inline std::vector<int> ListeningRelays(int j, const GcCode& code) {
  std::vector<int> v;
  for (int m = 0; m < code.K; ++m) {
    if (code.G(m, j) != 0.0) v.push_back(m);
  }
  return v;
}

// p-tilde_{k,j}: sum over uplink-success subsets V of V_j containing k of
// prod_{V}(1 - p_up) prod_{V_j \ V} p_up (1 - prod_{V} p_{k3,j}).
inline double ArrivalProbability(int k, int j, const GcCode& code, const NetworkModel& net) {
  const std::vector<int> relays = ListeningRelays(j, code);
  const auto it = std::find(relays.begin(), relays.end(), k);
  if (it == relays.end()) return 0.0;
  const std::size_t k_pos = static_cast<std::size_t>(it - relays.begin());
  if (relays.size() > static_cast<std::size_t>(kMaxEnumeratedLinks)) {
    throw Error(ErrorCode::kTooManyLinks, "too many relays to enumerate");
  }
  double total = 0.0;
  const std::uint64_t count = std::uint64_t{1} << relays.size();
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    if (!((mask >> k_pos) & 1U)) continue;
    double prob = 1.0;
    double all_miss = 1.0;
    for (std::size_t i = 0; i < relays.size(); ++i) {
      const int m = relays[i];
      if ((mask >> i) & 1U) {
        prob *= 1.0 - net.p_up(m);
        all_miss *= net.p_inter(m, j);
      } else {
        prob *= net.p_up(m);
      }
    }
    total += prob * (1.0 - all_miss);
  }
  return total;
}

struct FailureLdp {
  LdpPair identity;      // epsilon4, p-tilde (delta' + delta4)
  LdpPair perturbation;  // epsilon5, (1 - p-tilde)(delta' + delta5)
  double p_tilde = 0.0;
  double nu_bar = 0.0;
};

// Server-side LDP when the round fails, for client j, relay k and combinator
// f. The log factor carries exponent 1/4 here, not 1/2.
inline FailureLdp LdpFailure(int k, int j, int f, const GcCode& code, const NetworkModel& net,
                             const GeneratorMatrix& a, double R, double delta4, double delta5,
                             double r2, double delta_prime) {
  FailureLdp out;
  out.p_tilde = ArrivalProbability(k, j, code, net);
  out.nu_bar = ExpectedFailureNoiseVariance(f, code, net, a);
  if (!(r2 < out.nu_bar)) {
    throw Error(ErrorCode::kBernsteinTooLarge, "Bernstein radius r2 must be below nu-bar^{t,f'}");
  }
  double sensitivity = 0.0;
  for (int m = 0; m < code.K; ++m) sensitivity += std::abs(code.C(f, m) * code.G(m, j));
  sensitivity *= R;
  const double denom = std::sqrt(out.nu_bar - r2);
  out.identity = {GaussianFactor(delta4, 0.25) * sensitivity / denom,
                  out.p_tilde * (delta_prime + delta4)};
  out.perturbation = {2.0 * GaussianFactor(delta5, 0.25) * sensitivity / denom,
                      (1.0 - out.p_tilde) * (delta_prime + delta5)};
  return out;
}

struct SuccessLdp {
  double epsilon6 = 0.0;
  double epsilon7 = 0.0;
};

// Obfuscation of client j by the other updates in the exact average.
inline SuccessLdp LdpSuccess(double zeta2, int K, double r3, double delta6, double delta7) {
  if (K < 2) throw Error(ErrorCode::kSingleClient, "need K >= 2");
  if (!(zeta2 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "zeta2 must be > 0");
  const double spread = std::sqrt(static_cast<double>(K - 1)) / K * std::sqrt(zeta2);
  return {r3 / spread * GaussianFactor(delta6), 2.0 * r3 / spread * GaussianFactor(delta7)};
}

// Radius with P(|Delta| <= r3) = 1 - delta for Delta ~ N(0, zeta2 I_D).
inline double SuccessRadius(double zeta2, int D, double delta) {
  boost::math::chi_squared dist(D);
  return std::sqrt(zeta2 * boost::math::quantile(boost::math::complement(dist, delta)));
}

inline constexpr std::size_t kMinBernsteinSamples = 1000;

// Smallest r with empirical P(|nu - mean| > r) <= delta_prime: the
// (n - floor(delta' n))-th smallest absolute deviation.
inline double EstimateBernsteinRadius(std::span<const double> samples, double delta_prime) {
  if (samples.size() < kMinBernsteinSamples) {
    throw Error(ErrorCode::kTooFewSamples, "need at least 1000 samples");
  }
  if (!(delta_prime > 0.0 && delta_prime < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "delta' must lie in (0, 1)");
  }
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(samples.size());
  std::vector<double> dev;
  dev.reserve(samples.size());
  for (double x : samples) dev.push_back(std::abs(x - mean));
  std::sort(dev.begin(), dev.end());
  const std::size_t n = dev.size();
  const auto allowed = static_cast<std::size_t>(std::floor(delta_prime * static_cast<double>(n)));
  if (allowed >= n) return 0.0;
  const double r = dev[n - allowed - 1];
  return r < 1e-12 * std::max(1.0, std::abs(mean)) ? 0.0 : r;
}

// nu_k^t over sampled link realizations (trial i uses round i of the stream).
inline std::vector<double> SampleRelayNoiseVariances(int k, const GcCode& code,
                                                     const NetworkModel& net,
                                                     const GeneratorMatrix& a, int n,
                                                     std::uint64_t seed) {
  std::vector<double> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(
        AggregatedNoiseVariance(EffectiveCoefficients(k, code, SampleLinks(net, seed, i)), a.A));
  }
  return out;
}

// nu^{t,f'} = |sum_k c_{f,k} tau_k Lambda_k A|^2 over sampled realizations.
inline std::vector<double> SampleFailureNoiseVariances(int f, const GcCode& code,
                                                       const NetworkModel& net,
                                                       const GeneratorMatrix& a, int n,
                                                       std::uint64_t seed) {
  std::vector<double> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const LinkRealization links = SampleLinks(net, seed, i);
    Eigen::RowVectorXd total = Eigen::RowVectorXd::Zero(code.K);
    for (int k = 0; k < code.K; ++k) {
      if (links.Up(k)) total += code.C(f, k) * EffectiveCoefficients(k, code, links);
    }
    out.push_back(AggregatedNoiseVariance(total, a.A));
  }
  return out;
}

struct PrivacyParams {
  int D = 1;
  double zeta2 = 1.0;
  double lambda2 = 1.0;
  double R = 1.0;
  std::vector<double> weights;  // uniform when empty
  double delta[8] = {0.0, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05};  // delta[1..7]
  double delta_prime = 0.05;
  // Bernstein radii; estimated from bernstein_samples link draws when unset.
  std::optional<double> r1;
  std::optional<double> r2;
  std::optional<double> r3;
  int bernstein_samples = 2000;
  int combinator = 0;  // f' used for failure-case accounting
  double log_base = kBits;
};

inline nlohmann::json NullableNumber(const std::optional<double>& x) {
  return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
}

// Full per-layer report for one configuration. Entries whose preconditions
// fail (e.g. a Bernstein radius above nu-bar) are reported as null together
// with the error text.
inline nlohmann::json BuildPrivacyReport(const GcCode& code, const GeneratorMatrix& a,
                                         const NetworkModel& net, const PrivacyParams& pp,
                                         std::uint64_t seed) {
  const int K = code.K;
  nlohmann::json report;
  nlohmann::json errors = nlohmann::json::array();
  auto guarded = [&](const std::string& what, auto&& fn) -> std::optional<double> {
    try {
      return fn();
    } catch (const Error& e) {
      errors.push_back({{"quantity", what}, {"error", e.what()}});
      return std::nullopt;
    }
  };

  nlohmann::json mu1 = nlohmann::json::array();
  nlohmann::json mu2 = nlohmann::json::array();
  nlohmann::json eps23 = nlohmann::json::array();
  nlohmann::json nu_bar = nlohmann::json::array();
  for (int k = 0; k < K; ++k) {
    const NoiseVarianceReport nv = ExpectedNoiseVariance(k, code, net, a);
    nu_bar.push_back({{"relay", k}, {"formula", nv.formula}, {"enumerated", nv.enumerated},
                      {"consistent", nv.consistent}});
    std::optional<double> r1 = pp.r1;
    if (!r1) {
      r1 = EstimateBernsteinRadius(
          SampleRelayNoiseVariances(k, code, net, a, pp.bernstein_samples, seed),
          pp.delta_prime);
    }
    for (int m : code.support[k]) {
      if (m == k) continue;
      mu1.push_back({{"from", m}, {"to", k},
                     {"mu1", LmipPeer(net.p_inter(k, m), pp.D, pp.zeta2, pp.lambda2, pp.log_base)}});
    }
    for (int j : code.support[k]) {
      if (j == k) continue;  // a relay's own update is not protected from itself
      const std::string tag = "(" + std::to_string(k) + "," + std::to_string(j) + ")";
      mu2.push_back({{"relay", k}, {"target", j},
                     {"mu2", NullableNumber(guarded("mu2" + tag, [&] {
                        return LmipRelayExpected(k, j, code, net, a, pp.D, pp.zeta2, pp.log_base);
                      }))},
                     {"mu2_gaussian", LmipRelayGaussianExpected(k, j, code, net, a, pp.D,
                                                                pp.zeta2, pp.log_base)}});
      auto e2 = guarded("eps2" + tag, [&] {
        return LdpRelayIdentity(k, j, code, net, a, pp.R, pp.delta[2], *r1, pp.delta_prime).epsilon;
      });
      auto e3 = guarded("eps3" + tag, [&] {
        return LdpRelayPerturbation(k, j, code, net, a, pp.R, pp.delta[3], *r1, pp.delta_prime)
            .epsilon;
      });
      const double p = net.p_inter(k, j);
      eps23.push_back({{"relay", k}, {"target", j}, {"r1", *r1},
                       {"epsilon2", NullableNumber(e2)},
                       {"delta2", (1.0 - p) * (pp.delta_prime + pp.delta[2])},
                       {"epsilon3", NullableNumber(e3)},
                       {"delta3", (1.0 - p) * (pp.delta_prime + pp.delta[3])}});
    }
  }

  std::vector<double> w = pp.weights;
  if (w.empty()) w.assign(K, 1.0 / K);
  nlohmann::json mu3 = nlohmann::json::array();
  for (int k = 0; k < K; ++k) {
    mu3.push_back({{"client", k}, {"mu3", NullableNumber(guarded("mu3", [&] {
                                     return LmipServer(w, k, pp.D, pp.log_base);
                                   }))}});
  }

  const int f = std::clamp(pp.combinator, 0, code.f() - 1);
  std::optional<double> r2 = pp.r2;
  if (!r2) {
    r2 = EstimateBernsteinRadius(
        SampleFailureNoiseVariances(f, code, net, a, pp.bernstein_samples, seed), pp.delta_prime);
  }
  nlohmann::json eps45 = nlohmann::json::array();
  for (int j = 0; j < K; ++j) {
    for (int k : ListeningRelays(j, code)) {
      try {
        const FailureLdp fl = LdpFailure(k, j, f, code, net, a, pp.R, pp.delta[4], pp.delta[5],
                                         *r2, pp.delta_prime);
        eps45.push_back({{"relay", k}, {"client", j}, {"combinator", f},
                         {"epsilon4", fl.identity.epsilon}, {"delta4", fl.identity.delta},
                         {"epsilon5", fl.perturbation.epsilon}, {"delta5", fl.perturbation.delta},
                         {"p_tilde", fl.p_tilde}, {"nu_bar", fl.nu_bar}, {"r2", *r2}});
      } catch (const Error& e) {
        errors.push_back({{"quantity", "eps4/eps5 (" + std::to_string(k) + "," +
                                           std::to_string(j) + ")"},
                          {"error", e.what()}});
      }
    }
  }

  const double r3 = pp.r3.value_or(SuccessRadius(pp.zeta2, pp.D, pp.delta_prime));
  const SuccessLdp sl = LdpSuccess(pp.zeta2, K, r3, pp.delta[6], pp.delta[7]);
  const LdpPair e1 = LdpPeer(pp.R, pp.lambda2, 0.0, pp.delta[1]);

  report["log_base"] = pp.log_base;
  report["lmip"] = {{"peer", mu1}, {"relay", mu2}, {"server", mu3}};
  report["ldp"] = {{"peer", {{"epsilon1", e1.epsilon}, {"delta1", pp.delta[1]}}},
                   {"relay", eps23},
                   {"failure", eps45},
                   {"success", {{"epsilon6", sl.epsilon6}, {"delta6", pp.delta[6]},
                                {"epsilon7", sl.epsilon7}, {"delta7", pp.delta[7]},
                                {"r3", r3}}}};
  report["nu_bar"] = nu_bar;
  report["errors"] = errors;
  return report;
}

}  // namespace seccogc

#endif  // SECCOGC_PRIVACY_ACCOUNTING_H_
