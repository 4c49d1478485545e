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

// Generator matrices A (K x L) for correlated Gaussian secret keys N = A * Z.
// Correctness requires zero column sums so that the keys cancel in the
// server's sum; security requires rank(A) = K - 1; fairness requires every row
// to have squared norm lambda^2.

#ifndef SECCOGC_SECRET_KEYS_H_
#define SECCOGC_SECRET_KEYS_H_

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "seccogc/gradient_code.h"
#include "seccogc/rng.h"
#include "seccogc/status.h"

namespace seccogc {

enum class ConstructionTag { kGeneral, kFairGeneral, kFairCyclic };

constexpr std::string_view TagName(ConstructionTag tag) {
  switch (tag) {
    case ConstructionTag::kGeneral: return "general";
    case ConstructionTag::kFairGeneral: return "fair_general";
    case ConstructionTag::kFairCyclic: return "fair_cyclic";
  }
  return "general";
}

inline ConstructionTag TagFromName(std::string_view name) {
  if (name == "general") return ConstructionTag::kGeneral;
  if (name == "fair_general") return ConstructionTag::kFairGeneral;
  if (name == "fair_cyclic") return ConstructionTag::kFairCyclic;
  throw Error(ErrorCode::kConfigError, "unknown construction '" + std::string(name) + "'");
}

struct GeneratorMatrix {
  int K = 0;
  int L = 0;
  Eigen::MatrixXd A;
  std::optional<double> lambda2;  // set for fair constructions
  ConstructionTag tag = ConstructionTag::kGeneral;
};

struct ConditionReport {
  double correctness_residual = 0.0;  // max |column sum|
  int numerical_rank = 0;
  double fairness_spread = 0.0;  // max - min row norm^2
  bool correctness_pass = false;
  bool security_pass = false;
  bool rows_nonzero = false;
  bool fairness_pass = false;
};

inline constexpr double kRankTolerance = 1e-8;
inline constexpr double kRowNonzeroTolerance = 1e-12;

// Singular values below kRankTolerance * largest count as zero.
inline int NumericalRank(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > kRankTolerance * sv(0)) ++rank;
  }
  return rank;
}

inline ConditionReport VerifyConditions(const Eigen::MatrixXd& a, double tol) {
  ConditionReport report;
  const Eigen::Index K = a.rows();
  if (K == 0) return report;
  report.correctness_residual =
      a.cols() == 0 ? 0.0 : a.colwise().sum().cwiseAbs().maxCoeff();
  report.correctness_pass = report.correctness_residual <= tol;
  report.numerical_rank = NumericalRank(a);
  report.security_pass = report.numerical_rank == K - 1;
  report.rows_nonzero = true;
  for (Eigen::Index k = 0; k < K; ++k) {
    if (a.cols() == 0 || a.row(k).cwiseAbs().maxCoeff() <= kRowNonzeroTolerance) {
      report.rows_nonzero = false;
    }
  }
  const Eigen::VectorXd norms = a.rowwise().squaredNorm();
  report.fairness_spread = norms.maxCoeff() - norms.minCoeff();
  report.fairness_pass =
      report.fairness_spread <= tol * std::max(1.0, norms.maxCoeff());
  return report;
}

inline ConditionReport VerifyConditions(const GeneratorMatrix& g, double tol) {
  return VerifyConditions(g.A, tol);
}

// Completes a general generator matrix: appends the negated column sums of the given
// K-1 rows as the last row.
inline GeneratorMatrix CompleteGeneral(const Eigen::MatrixXd& first_rows) {
  GeneratorMatrix g;
  g.K = static_cast<int>(first_rows.rows()) + 1;
  g.L = static_cast<int>(first_rows.cols());
  g.A.resize(g.K, g.L);
  g.A.topRows(g.K - 1) = first_rows;
  g.A.row(g.K - 1) = -first_rows.colwise().sum();
  g.tag = ConstructionTag::kGeneral;
  return g;
}

// General construction: K-1 standard-normal rows, last row their negated column sums.
// Redraws (bounded) if the rank falls short of K-1.
inline GeneratorMatrix ConstructGeneral(int K, int L, std::uint64_t seed,
                                        int max_retries = 16) {
  if (K < 2) throw Error(ErrorCode::kInvalidDims, "need K >= 2");
  if (L < K - 1) throw Error(ErrorCode::kInvalidDims, "need L >= K - 1");
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    CounterRng rng(seed, {static_cast<std::uint64_t>(Stream::kGenerator), 1,
                          static_cast<std::uint64_t>(attempt)});
    Eigen::MatrixXd rows(K - 1, L);
    for (int k = 0; k < K - 1; ++k) {
      for (int l = 0; l < L; ++l) rows(k, l) = rng.Normal();
    }
    GeneratorMatrix g = CompleteGeneral(rows);
    const ConditionReport report = VerifyConditions(g, 1e-9);
    if (report.correctness_pass && report.security_pass && report.rows_nonzero) {
      return g;
    }
  }
  throw Error(ErrorCode::kNoConvergence, "rank condition not met after retries");
}

// Fair general construction via alternating projection: columns onto the zero-sum
// hyperplane, then rows rescaled to squared norm lambda2, until both residuals
// drop below tol. L = K.
inline GeneratorMatrix ConstructFairGeneral(int K, double lambda2,
                                            std::uint64_t seed,
                                            double tol = 1e-9,
                                            int max_iter = 10000) {
  if (K < 2) throw Error(ErrorCode::kInvalidDims, "need K >= 2");
  if (!(lambda2 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda2 must be > 0");
  const double lambda = std::sqrt(lambda2);
  CounterRng rng(seed, {static_cast<std::uint64_t>(Stream::kGenerator), 2});
  Eigen::MatrixXd a(K, K);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) a(k, l) = rng.Normal();
  }
  for (int iter = 0; iter < max_iter; ++iter) {
    a.rowwise() -= a.colwise().mean();
    const Eigen::VectorXd norms = a.rowwise().norm();
    if (norms.minCoeff() <= kRowNonzeroTolerance) break;
    for (int k = 0; k < K; ++k) a.row(k) *= lambda / norms(k);
    const double column_residual = a.colwise().sum().cwiseAbs().maxCoeff();
    if (column_residual < tol) {
      const ConditionReport report = VerifyConditions(a, tol);
      if (!report.security_pass) break;
      GeneratorMatrix g;
      g.K = K;
      g.L = K;
      g.A = std::move(a);
      g.lambda2 = lambda2;
      g.tag = ConstructionTag::kFairGeneral;
      return g;
    }
  }
  throw Error(ErrorCode::kNoConvergence,
              "alternating projection did not reach tol " + std::to_string(tol));
}

// Fair cyclic construction: row k has gamma entries lambda / sqrt(gamma^2 + gamma) at
// columns k+1..k+gamma (mod K) and -gamma * lambda / sqrt(gamma^2 + gamma) on
// the diagonal.
inline GeneratorMatrix ConstructFairCyclic(int K, int gamma, double lambda2) {
  if (K < 2) throw Error(ErrorCode::kInvalidDims, "need K >= 2");
  if (gamma < 1 || gamma > K - 1) {
    throw Error(ErrorCode::kInvalidDims, "need 1 <= gamma <= K - 1");
  }
  if (!(lambda2 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda2 must be > 0");
  const double lambda = std::sqrt(lambda2);
  const double scale = std::sqrt(static_cast<double>(gamma) * gamma + gamma);
  const double off = lambda / scale;
  const double diag = -(gamma * lambda) / scale;
  GeneratorMatrix g;
  g.K = K;
  g.L = K;
  g.A = Eigen::MatrixXd::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    g.A(k, k) = diag;
    for (int l = 1; l <= gamma; ++l) g.A(k, (k + l) % K) = off;
  }
  g.lambda2 = lambda2;
  g.tag = ConstructionTag::kFairCyclic;
  return g;
}

struct SecretKeySet {
  int D = 0;
  Eigen::MatrixXd keys;        // K x D, row k is N_k
  Eigen::MatrixXd components;  // L x D, row l is Z_l
  std::uint64_t seed = 0;
};

// Draws Z_l ~ N(0, I_D) from the seeded stream and returns N = A * Z.
// `round` selects an independent stream for per-round resampling.
inline SecretKeySet SampleKeys(const GeneratorMatrix& g, int D,
                               std::uint64_t seed, std::uint64_t round = 0) {
  if (D < 1) throw Error(ErrorCode::kInvalidArgument, "D must be >= 1");
  CounterRng rng(seed, {static_cast<std::uint64_t>(Stream::kKeys), round});
  SecretKeySet set;
  set.D = D;
  set.seed = seed;
  set.components.resize(g.L, D);
  for (int l = 0; l < g.L; ++l) {
    for (int d = 0; d < D; ++d) set.components(l, d) = rng.Normal();
  }
  set.keys = g.A * set.components;
  return set;
}

inline nlohmann::json ToJson(const GeneratorMatrix& g) {
  nlohmann::json j = {{"K", g.K}, {"L", g.L}, {"A", MatrixToJson(g.A)},
                      {"tag", std::string(TagName(g.tag))}};
  j["lambda2"] = g.lambda2 ? nlohmann::json(*g.lambda2) : nlohmann::json(nullptr);
  return j;
}

inline GeneratorMatrix GeneratorMatrixFromJson(const nlohmann::json& j) {
  GeneratorMatrix g;
  g.K = j.at("K").get<int>();
  g.L = j.at("L").get<int>();
  g.A = MatrixFromJson(j.at("A"));
  if (j.contains("lambda2") && !j.at("lambda2").is_null()) {
    g.lambda2 = j.at("lambda2").get<double>();
  }
  g.tag = TagFromName(j.value("tag", std::string("general")));
  if (g.A.rows() != g.K || g.A.cols() != g.L) {
    throw Error(ErrorCode::kInvalidDims, "A does not match K x L");
  }
  return g;
}

inline nlohmann::json ToJson(const ConditionReport& r) {
  return {{"correctness_residual", r.correctness_residual},
          {"numerical_rank", r.numerical_rank},
          {"fairness_spread", r.fairness_spread},
          {"correctness_pass", r.correctness_pass},
          {"security_pass", r.security_pass},
          {"rows_nonzero", r.rows_nonzero},
          {"fairness_pass", r.fairness_pass}};
}

}  // namespace seccogc

#endif  // SECCOGC_SECRET_KEYS_H_
