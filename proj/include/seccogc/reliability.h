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

// Outage probability of one round and its split into three disjoint failure
// events. With v incomplete relays and u complete relays whose uplink failed,
// the round succeeds iff v + u <= s; otherwise
//   event 1: v >= s + 1 (sharing alone already dooms the round),
//   event 2: v == 0 and u >= s + 1,
//   event 3: 1 <= v <= s and u > s - v.

#ifndef SECCOGC_RELIABILITY_H_
#define SECCOGC_RELIABILITY_H_

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "seccogc/gradient_code.h"
#include "seccogc/network_model.h"

namespace seccogc {

enum class Outcome { kSuccess = 0, kEvent1 = 1, kEvent2 = 2, kEvent3 = 3 };

constexpr std::string_view OutcomeName(Outcome o) {
  switch (o) {
    case Outcome::kSuccess: return "success";
    case Outcome::kEvent1: return "event1";
    case Outcome::kEvent2: return "event2";
    case Outcome::kEvent3: return "event3";
  }
  return "success";
}

// A relay's partial sum is complete iff it heard every neighbor on its row of
// the allocation matrix.
inline bool IsComplete(const GcCode& code, const LinkRealization& links, int k) {
  for (int m : code.support[k]) {
    if (!links.Received(k, m)) return false;
  }
  return true;
}

// Indices of complete partial sums that reached the server.
inline std::vector<bool> ArrivedSet(const GcCode& code, const LinkRealization& links) {
  std::vector<bool> arrived(code.K);
  for (int k = 0; k < code.K; ++k) arrived[k] = links.Up(k) && IsComplete(code, links, k);
  return arrived;
}

inline Outcome ClassifyOutcome(const GcCode& code, const LinkRealization& links) {
  int incomplete = 0;
  int complete_lost = 0;
  for (int k = 0; k < code.K; ++k) {
    if (!IsComplete(code, links, k)) {
      ++incomplete;
    } else if (!links.Up(k)) {
      ++complete_lost;
    }
  }
  const int s = code.s;
  if (incomplete + complete_lost <= s) return Outcome::kSuccess;
  if (incomplete >= s + 1) return Outcome::kEvent1;
  if (incomplete == 0) return Outcome::kEvent2;
  return Outcome::kEvent3;
}

enum class ReliabilityMethod { kEnumeration, kMonteCarlo };

struct ReliabilityReport {
  double p1 = 0.0;
  double p2 = 0.0;
  double p3 = 0.0;
  double p_outage = 0.0;
  ReliabilityMethod method = ReliabilityMethod::kEnumeration;
  std::int64_t trials = 0;
  // 3-sigma normal-approximation half-widths (Monte Carlo only).
  double ci_p1 = 0.0;
  double ci_p2 = 0.0;
  double ci_p3 = 0.0;
  double ci_outage = 0.0;

  double success() const { return 1.0 - p_outage; }
};

inline ReliabilityReport OutageExact(const GcCode& code, const NetworkModel& net) {
  double by_label[4] = {0.0, 0.0, 0.0, 0.0};
  ForEachRelevantRealization(net, code, [&](const LinkRealization& links, double prob) {
    by_label[static_cast<int>(ClassifyOutcome(code, links))] += prob;
  });
  ReliabilityReport r;
  r.method = ReliabilityMethod::kEnumeration;
  r.p1 = by_label[1];
  r.p2 = by_label[2];
  r.p3 = by_label[3];
  r.p_outage = r.p1 + r.p2 + r.p3;
  return r;
}

// Trial i uses links sampled at round i of the counter-based stream, so the
// estimate is independent of evaluation order.
inline ReliabilityReport OutageMonteCarlo(const GcCode& code, const NetworkModel& net,
                                          std::int64_t trials, std::uint64_t seed) {
  if (trials < 1000) throw Error(ErrorCode::kInvalidArgument, "need at least 1000 trials");
  std::int64_t counts[4] = {0, 0, 0, 0};
  for (std::int64_t i = 0; i < trials; ++i) {
    ++counts[static_cast<int>(ClassifyOutcome(code, SampleLinks(net, seed, i)))];
  }
  const double n = static_cast<double>(trials);
  auto half_width = [n](double p) { return 3.0 * std::sqrt(p * (1.0 - p) / n); };
  ReliabilityReport r;
  r.method = ReliabilityMethod::kMonteCarlo;
  r.trials = trials;
  r.p1 = counts[1] / n;
  r.p2 = counts[2] / n;
  r.p3 = counts[3] / n;
  r.p_outage = (counts[1] + counts[2] + counts[3]) / n;
  r.ci_p1 = half_width(r.p1);
  r.ci_p2 = half_width(r.p2);
  r.ci_p3 = half_width(r.p3);
  r.ci_outage = half_width(r.p_outage);
  return r;
}

inline nlohmann::json ToJson(const ReliabilityReport& r) {
  nlohmann::json j = {
      {"P1", r.p1}, {"P2", r.p2}, {"P3", r.p3}, {"P_O", r.p_outage},
      {"method", r.method == ReliabilityMethod::kEnumeration ? "enumeration" : "monte_carlo"}};
  if (r.method == ReliabilityMethod::kMonteCarlo) {
    j["trials"] = r.trials;
    j["ci_half_width"] = {{"P1", r.ci_p1}, {"P2", r.ci_p2}, {"P3", r.ci_p3}, {"P_O", r.ci_outage}};
  }
  return j;
}

}  // namespace seccogc

#endif  // SECCOGC_RELIABILITY_H_
