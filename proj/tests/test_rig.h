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

// Owns everything a ProtocolContext points at, for tests.

#ifndef SECCOGC_TESTS_TEST_RIG_H_
#define SECCOGC_TESTS_TEST_RIG_H_

#include <cstdint>
#include <vector>

#include "seccogc/gradient_code.h"
#include "seccogc/network_model.h"
#include "seccogc/protocol.h"
#include "seccogc/secret_keys.h"
#include "seccogc/trainer.h"

namespace seccogc::testing {

struct Rig {
  GcCode code;
  GeneratorMatrix keys;
  NetworkModel net;
  Objective objective;
  ProtocolContext ctx;

  Rig(int K, int s, int D, double lambda2, double p_up, double p_inter, std::uint64_t seed,
      int I = 3, double eta = 0.05)
      : code(BuildCode(K, s, seed)),
        keys(ConstructFairCyclic(K, 1, lambda2 > 0 ? lambda2 : 1.0)),
        net(NetworkModel::Symmetric(K, p_up, p_inter)),
        objective(MakeQuadraticSuite(K, D, seed)) {
    if (lambda2 == 0.0) keys.A.setZero();
    ctx.code = &code;
    ctx.keys = &keys;
    ctx.net = &net;
    ctx.objective = &objective;
    ctx.solver.a = Eigen::VectorXd::Ones(I);
    ctx.solver.eta = eta;
    ctx.seed = seed;
  }
  Rig(const Rig&) = delete;
  Rig& operator=(const Rig&) = delete;

  FederationState Initial() const {
    return FederationState::Initial(Eigen::VectorXd::Zero(objective.D), code.K);
  }
};

inline double MaxRelativeDeviation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, b.cwiseAbs().maxCoeff());
}

}  // namespace seccogc::testing

#endif  // SECCOGC_TESTS_TEST_RIG_H_
