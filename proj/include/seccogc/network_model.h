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

// Bernoulli link model: uplink k -> server fails with probability p_up[k],
// link m -> k fails with probability p_inter(k, m). Self-links never fail.

#ifndef SECCOGC_NETWORK_MODEL_H_
#define SECCOGC_NETWORK_MODEL_H_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "seccogc/gradient_code.h"
#include "seccogc/rng.h"
#include "seccogc/status.h"

namespace seccogc {

struct NetworkModel {
  int K = 0;
  Eigen::VectorXd p_up;     // p_k
  Eigen::MatrixXd p_inter;  // p_inter(k, m) = p_{k,m}: m -> k fails

  static NetworkModel Symmetric(int K, double p_up, double p_inter) {
    NetworkModel net;
    net.K = K;
    net.p_up = Eigen::VectorXd::Constant(K, p_up);
    net.p_inter = Eigen::MatrixXd::Constant(K, K, p_inter);
    net.p_inter.diagonal().setZero();
    return net;
  }

  // Throws InvalidArgument naming the first offending entry.
  void Validate() const {
    if (p_up.size() != K || p_inter.rows() != K || p_inter.cols() != K) {
      throw Error(ErrorCode::kInvalidDims, "network dimensions do not match K");
    }
    for (int k = 0; k < K; ++k) {
      if (!(p_up(k) >= 0.0 && p_up(k) <= 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "p_up[" + std::to_string(k) + "] not in [0,1]");
      }
      for (int m = 0; m < K; ++m) {
        if (!(p_inter(k, m) >= 0.0 && p_inter(k, m) <= 1.0)) {
          throw Error(ErrorCode::kInvalidArgument, "p_inter[" + std::to_string(k) + "][" +
                                                       std::to_string(m) + "] not in [0,1]");
        }
      }
      if (p_inter(k, k) != 0.0) {
        throw Error(ErrorCode::kInvalidArgument, "p_inter diagonal must be 0");
      }
    }
  }
};

struct LinkRealization {
  int K = 0;
  std::int64_t round = 0;
  std::vector<std::uint8_t> up;     // tau_k
  std::vector<std::uint8_t> inter;  // tau_{k,m}, row-major K x K

  LinkRealization() = default;
  LinkRealization(int k, std::int64_t r, bool all_up)
      : K(k), round(r), up(k, all_up), inter(static_cast<std::size_t>(k) * k, all_up) {
    for (int i = 0; i < K; ++i) Inter(i, i) = 1;
  }

  bool Up(int k) const { return up[k] != 0; }
  bool Received(int k, int m) const { return inter[static_cast<std::size_t>(k) * K + m] != 0; }
  std::uint8_t& Inter(int k, int m) { return inter[static_cast<std::size_t>(k) * K + m]; }

  friend bool operator==(const LinkRealization&, const LinkRealization&) = default;
};

// Link indices for the counter-based stream: uplink k -> k, inter (k, m) ->
// K + k*K + m. A link succeeds iff its uniform draw is >= its outage
// probability.
inline LinkRealization SampleLinks(const NetworkModel& net, std::uint64_t seed,
                                   std::int64_t round) {
  const std::uint64_t key =
      DeriveKey(seed, {static_cast<std::uint64_t>(Stream::kLinks),
                       static_cast<std::uint64_t>(round)});
  LinkRealization links(net.K, round, false);
  for (int k = 0; k < net.K; ++k) {
    links.up[k] = UniformAt(key, k) >= net.p_up(k);
    for (int m = 0; m < net.K; ++m) {
      if (m == k) continue;
      const std::uint64_t idx = static_cast<std::uint64_t>(net.K) +
                                static_cast<std::uint64_t>(k) * net.K + m;
      links.Inter(k, m) = UniformAt(key, idx) >= net.p_inter(k, m);
    }
  }
  return links;
}

inline constexpr int kMaxEnumeratedLinks = 24;

namespace internal {

struct RelevantLink {
  int k;
  int m;  // -1 for the uplink of k
  double p_fail;
};

}  // namespace internal

// Visits every assignment of the relevant links (all uplinks plus the
// inter-client links on the code's support) with its probability. Links with
// outage probability exactly 0 or 1 are fixed rather than branched; links off
// the support stay 0. Throws TooManyLinks above 24 branched links.
template <typename Fn>
void ForEachRelevantRealization(const NetworkModel& net, const GcCode& code, Fn&& fn) {
  LinkRealization base(net.K, 0, false);
  std::vector<internal::RelevantLink> branched;
  auto consider = [&](int k, int m, double p) {
    const bool fixed_up = p == 0.0;
    const bool fixed_down = p == 1.0;
    if (fixed_up || fixed_down) {
      (m < 0 ? base.up[k] : base.Inter(k, m)) = fixed_up;
    } else {
      branched.push_back({k, m, p});
    }
  };
  for (int k = 0; k < net.K; ++k) {
    consider(k, -1, net.p_up(k));
    for (int m : code.support[k]) {
      if (m != k) consider(k, m, net.p_inter(k, m));
    }
  }
  if (static_cast<int>(branched.size()) > kMaxEnumeratedLinks) {
    throw Error(ErrorCode::kTooManyLinks,
                std::to_string(branched.size()) + " uncertain links exceed " +
                    std::to_string(kMaxEnumeratedLinks));
  }
  const std::uint64_t count = std::uint64_t{1} << branched.size();
  LinkRealization links = base;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    double prob = 1.0;
    for (std::size_t i = 0; i < branched.size(); ++i) {
      const auto& l = branched[i];
      const bool on = (mask >> i) & 1U;
      prob *= on ? 1.0 - l.p_fail : l.p_fail;
      (l.m < 0 ? links.up[l.k] : links.Inter(l.k, l.m)) = on;
    }
    fn(static_cast<const LinkRealization&>(links), prob);
  }
}

inline std::vector<std::pair<LinkRealization, double>> EnumerateRelevant(
    const NetworkModel& net, const GcCode& code) {
  std::vector<std::pair<LinkRealization, double>> out;
  ForEachRelevantRealization(net, code, [&](const LinkRealization& l, double p) {
    out.emplace_back(l, p);
  });
  return out;
}

// Accepts either a scalar (uniform value) or an array / matrix. Outage
// probabilities go in p_up / p_inter; connectivity_up / connectivity_inter
// give success probabilities instead (p = 1 - c).
inline NetworkModel NetworkFromJson(const nlohmann::json& j, int K) {
  if (!j.contains("p_up") && !j.contains("p_inter") && j.contains("connectivity_up") &&
      j.contains("connectivity_inter")) {
    auto flip = [](const nlohmann::json& c) {
      if (c.is_number()) return nlohmann::json(1.0 - c.get<double>());
      nlohmann::json out = c;
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].is_number()) {
          out[i] = 1.0 - out[i].get<double>();
          continue;
        }
        for (std::size_t m = 0; m < out[i].size(); ++m) {
          out[i][m] = i == m ? 0.0 : 1.0 - out[i][m].get<double>();
        }
      }
      return out;
    };
    return NetworkFromJson(nlohmann::json{{"p_up", flip(j.at("connectivity_up"))},
                                          {"p_inter", flip(j.at("connectivity_inter"))}},
                           K);
  }
  NetworkModel net;
  net.K = K;
  const auto& up = j.at("p_up");
  if (up.is_number()) {
    net.p_up = Eigen::VectorXd::Constant(K, up.get<double>());
  } else {
    if (!up.is_array() || static_cast<int>(up.size()) != K) {
      throw Error(ErrorCode::kConfigError, "network.p_up must be a number or length-K array");
    }
    net.p_up.resize(K);
    for (int k = 0; k < K; ++k) net.p_up(k) = up[k].get<double>();
  }
  const auto& inter = j.at("p_inter");
  if (inter.is_number()) {
    net.p_inter = Eigen::MatrixXd::Constant(K, K, inter.get<double>());
    net.p_inter.diagonal().setZero();
  } else {
    net.p_inter = MatrixFromJson(inter);
    if (net.p_inter.rows() != K || net.p_inter.cols() != K) {
      throw Error(ErrorCode::kConfigError, "network.p_inter must be K x K");
    }
  }
  net.Validate();
  return net;
}

inline nlohmann::json ToJson(const NetworkModel& net) {
  nlohmann::json up = nlohmann::json::array();
  for (int k = 0; k < net.K; ++k) up.push_back(net.p_up(k));
  return {{"p_up", up}, {"p_inter", MatrixToJson(net.p_inter)}};
}

inline nlohmann::json ToJson(const LinkRealization& l) {
  nlohmann::json inter = nlohmann::json::array();
  for (int k = 0; k < l.K; ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (int m = 0; m < l.K; ++m) row.push_back(l.Received(k, m) ? 1 : 0);
    inter.push_back(std::move(row));
  }
  nlohmann::json up = nlohmann::json::array();
  for (int k = 0; k < l.K; ++k) up.push_back(l.Up(k) ? 1 : 0);
  return {{"round", l.round}, {"tau_up", up}, {"tau_inter", inter}};
}

}  // namespace seccogc

#endif  // SECCOGC_NETWORK_MODEL_H_
