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

// Cyclic gradient codes: an allocation matrix G whose row k is supported on
// {k, k+1, ..., k+s} (mod K) and a combination matrix C with one row per
// straggler pattern such that C * G is the all-ones matrix.

#ifndef SECCOGC_GRADIENT_CODE_H_
#define SECCOGC_GRADIENT_CODE_H_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "seccogc/linear_solve.h"
#include "seccogc/rng.h"
#include "seccogc/status.h"

namespace seccogc {

struct GcCode {
  int K = 0;
  int s = 0;
  Eigen::MatrixXd G;  // K x K allocation
  Eigen::MatrixXd C;  // f x K combination
  // support[k] lists the columns of G's row k, starting with k itself.
  std::vector<std::vector<int>> support;
  std::uint64_t seed = 0;

  int f() const { return static_cast<int>(C.rows()); }
};

struct BuildOptions {
  std::int64_t cap = 100000;
  int max_retries = 16;
  double tol = 1e-9;
};

// Number of size-k subsets of an n-set, saturating at INT64_MAX.
inline std::int64_t Binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    const std::int64_t num = n - k + i;
    if (result > INT64_MAX / num) return INT64_MAX;
    result = result * num / i;
  }
  return result;
}

inline std::vector<int> CyclicSupport(int K, int s, int k) {
  std::vector<int> cols;
  cols.reserve(s + 1);
  for (int j = 0; j <= s; ++j) cols.push_back((k + j) % K);
  return cols;
}

// Calls fn(subset) for every size-r subset of {0..n-1} in lexicographic order.
template <typename Fn>
void ForEachSubset(int n, int r, Fn&& fn) {
  std::vector<int> idx(r);
  for (int i = 0; i < r; ++i) idx[i] = i;
  while (true) {
    fn(static_cast<const std::vector<int>&>(idx));
    int i = r - 1;
    while (i >= 0 && idx[i] == n - r + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
}

struct CodeCheck {
  bool ok = false;
  double max_error = 0.0;
  int row = -1;
  int col = -1;
};

// Compares C * G against the all-ones matrix entrywise.
inline CodeCheck VerifyCode(const GcCode& code, double tol) {
  CodeCheck check;
  if (code.C.cols() != code.G.rows() || code.G.rows() != code.K) return check;
  const Eigen::MatrixXd product = code.C * code.G;
  for (Eigen::Index i = 0; i < product.rows(); ++i) {
    for (Eigen::Index j = 0; j < product.cols(); ++j) {
      const double err = std::abs(product(i, j) - 1.0);
      if (!(err <= check.max_error)) {  // also catches NaN
        check.max_error = std::isnan(err) ? INFINITY : err;
        check.row = static_cast<int>(i);
        check.col = static_cast<int>(j);
      }
    }
  }
  check.ok = check.max_error <= tol;
  return check;
}

// Solves one combinator per surviving (K-s)-subset of rows of G, enumerated in
// lexicographic order. Returns nullopt if any subsystem is singular.
inline std::optional<Eigen::MatrixXd> SolveCombinators(const Eigen::MatrixXd& G,
                                                       int s) {
  const int K = static_cast<int>(G.rows());
  const int keep = K - s;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(Binomial(K, s), K);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(K);
  Eigen::Index row = 0;
  bool singular = false;
  ForEachSubset(K, keep, [&](const std::vector<int>& surviving) {
    if (singular) return;
    Eigen::MatrixXd system(K, keep);
    for (int j = 0; j < keep; ++j) system.col(j) = G.row(surviving[j]).transpose();
    auto c = SolveRefined(system, ones);
    if (!c) {
      singular = true;
      return;
    }
    for (int j = 0; j < keep; ++j) C(row, surviving[j]) = (*c)(j);
    ++row;
  });
  if (singular) return std::nullopt;
  return C;
}

namespace internal {

inline void CheckCodeDims(int K, int s, const BuildOptions& options) {
  if (K < 1) throw Error(ErrorCode::kInvalidArgument, "K must be >= 1");
  if (s < 0 || s >= K) {
    throw Error(ErrorCode::kInvalidArgument, "s must satisfy 0 <= s < K");
  }
  if (Binomial(K, s) > options.cap) {
    throw Error(ErrorCode::kCapExceeded,
                "binomial(" + std::to_string(K) + "," + std::to_string(s) +
                    ") exceeds cap " + std::to_string(options.cap));
  }
}

// One draw of a cyclic allocation matrix whose rows all lie in the null space
// of a random s x K matrix with zero row sums.
inline std::optional<Eigen::MatrixXd> DrawAllocation(int K, int s,
                                                     CounterRng& rng) {
  Eigen::MatrixXd H(s, K);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < K - 1; ++j) H(i, j) = rng.Normal();
    H(i, K - 1) = -H.row(i).head(K - 1).sum();
  }
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    G(k, k) = 1.0;
    if (s == 0) continue;
    Eigen::MatrixXd system(s, s);
    Eigen::VectorXd rhs = -H.col(k);
    for (int j = 1; j <= s; ++j) system.col(j - 1) = H.col((k + j) % K);
    auto x = SolveRefined(system, rhs);
    if (!x) return std::nullopt;
    for (int j = 1; j <= s; ++j) G(k, (k + j) % K) = (*x)(j - 1);
  }
  return G;
}

}  // namespace internal

// Builds a code from a caller-supplied allocation matrix. G must be K x K and
// vanish outside the cyclic support; throws UnsolvableCode if some pattern's
// system is singular or the result misses C * G = 1 by more than options.tol.
inline GcCode CodeFromAllocation(const Eigen::MatrixXd& G, int s,
                                 const BuildOptions& options = {}) {
  const int K = static_cast<int>(G.rows());
  if (G.cols() != K) throw Error(ErrorCode::kInvalidDims, "G must be square");
  internal::CheckCodeDims(K, s, options);
  GcCode code;
  code.K = K;
  code.s = s;
  code.G = G;
  for (int k = 0; k < K; ++k) {
    code.support.push_back(CyclicSupport(K, s, k));
    for (int m = 0; m < K; ++m) {
      const bool on = std::find(code.support[k].begin(), code.support[k].end(),
                                m) != code.support[k].end();
      if (!on && G(k, m) != 0.0) {
        throw Error(ErrorCode::kInvalidArgument,
                    "G has a nonzero outside the cyclic support");
      }
    }
  }
  auto C = SolveCombinators(G, s);
  if (!C) throw Error(ErrorCode::kUnsolvableCode, "singular pattern system");
  code.C = std::move(*C);
  const CodeCheck check = VerifyCode(code, options.tol);
  if (!check.ok) {
    throw Error(ErrorCode::kUnsolvableCode,
                "C*G deviates from ones by " + std::to_string(check.max_error));
  }
  return code;
}

inline GcCode BuildCode(int K, int s, std::uint64_t seed,
                        const BuildOptions& options = {}) {
  internal::CheckCodeDims(K, s, options);
  for (int attempt = 0; attempt < options.max_retries; ++attempt) {
    CounterRng rng(seed, {static_cast<std::uint64_t>(Stream::kCode),
                          static_cast<std::uint64_t>(attempt)});
    auto G = internal::DrawAllocation(K, s, rng);
    if (!G) continue;
    try {
      GcCode code = CodeFromAllocation(*G, s, options);
      code.seed = seed;
      return code;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnsolvableCode) throw;
    }
  }
  throw Error(ErrorCode::kUnsolvableCode,
              "no valid code after " + std::to_string(options.max_retries) +
                  " draws");
}

// Smallest row of C whose nonzeros all lie in `arrived` (indexed by client).
inline std::optional<int> SelectCombinator(const GcCode& code,
                                           const std::vector<bool>& arrived) {
  for (Eigen::Index f = 0; f < code.C.rows(); ++f) {
    bool fits = true;
    for (int k = 0; k < code.K && fits; ++k) {
      if (code.C(f, k) != 0.0 && !arrived[k]) fits = false;
    }
    if (fits) return static_cast<int>(f);
  }
  return std::nullopt;
}

inline std::optional<int> SelectCombinator(const GcCode& code,
                                           const std::vector<int>& arrived) {
  std::vector<bool> mask(code.K, false);
  for (int k : arrived) {
    if (k >= 0 && k < code.K) mask[k] = true;
  }
  return SelectCombinator(code, mask);
}

// JSON matrices are arrays of rows.
inline nlohmann::json MatrixToJson(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd MatrixFromJson(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kConfigError, "matrix must be an array");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw Error(ErrorCode::kConfigError, "ragged matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

inline nlohmann::json ToJson(const GcCode& code) {
  return {{"K", code.K}, {"s", code.s}, {"G", MatrixToJson(code.G)},
          {"C", MatrixToJson(code.C)}, {"seed", code.seed}};
}

inline GcCode GcCodeFromJson(const nlohmann::json& j) {
  GcCode code;
  code.K = j.at("K").get<int>();
  code.s = j.at("s").get<int>();
  code.G = MatrixFromJson(j.at("G"));
  code.C = MatrixFromJson(j.at("C"));
  code.seed = j.value("seed", std::uint64_t{0});
  if (code.G.rows() != code.K || code.G.cols() != code.K ||
      code.C.cols() != code.K || code.s < 0 || code.s >= code.K) {
    throw Error(ErrorCode::kInvalidDims, "inconsistent code document");
  }
  for (int k = 0; k < code.K; ++k) code.support.push_back(CyclicSupport(code.K, code.s, k));
  return code;
}

}  // namespace seccogc

#endif  // SECCOGC_GRADIENT_CODE_H_
