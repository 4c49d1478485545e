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

#ifndef SECCOGC_LINEAR_SOLVE_H_
#define SECCOGC_LINEAR_SOLVE_H_

#include <Eigen/Dense>
#include <cmath>
#include <optional>

namespace seccogc {

// Pivot magnitudes below this fraction of the pivot row's largest entry are
// treated as singular.
inline constexpr double kPivotTolerance = 1e-12;

// Solves M x = b by Gaussian elimination with partial pivoting. M may be tall
// (rows >= cols); the first cols pivot rows determine x and the remaining rows
// are ignored, so consistency of an overdetermined system must be checked by
// the caller. Returns nullopt when a pivot is (numerically) zero.
inline std::optional<Eigen::VectorXd> SolvePartialPivot(Eigen::MatrixXd m,
                                                        Eigen::VectorXd b) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  if (rows < cols || b.size() != rows) return std::nullopt;
  for (Eigen::Index c = 0; c < cols; ++c) {
    Eigen::Index pivot = c;
    for (Eigen::Index r = c + 1; r < rows; ++r) {
      if (std::abs(m(r, c)) > std::abs(m(pivot, c))) pivot = r;
    }
    const double row_max = m.row(pivot).cwiseAbs().maxCoeff();
    if (row_max == 0.0 || std::abs(m(pivot, c)) < kPivotTolerance * row_max) {
      return std::nullopt;
    }
    if (pivot != c) {
      m.row(c).swap(m.row(pivot));
      std::swap(b(c), b(pivot));
    }
    for (Eigen::Index r = c + 1; r < rows; ++r) {
      const double factor = m(r, c) / m(c, c);
      if (factor == 0.0) continue;
      m.row(r).tail(cols - c) -= factor * m.row(c).tail(cols - c);
      b(r) -= factor * b(c);
    }
  }
  Eigen::VectorXd x(cols);
  for (Eigen::Index c = cols - 1; c >= 0; --c) {
    double acc = b(c);
    for (Eigen::Index j = c + 1; j < cols; ++j) acc -= m(c, j) * x(j);
    x(c) = acc / m(c, c);
  }
  return x;
}

// SolvePartialPivot followed by `refinements` steps of iterative refinement
// against the full (possibly tall) system.
inline std::optional<Eigen::VectorXd> SolveRefined(const Eigen::MatrixXd& m,
                                                   const Eigen::VectorXd& b,
                                                   int refinements = 2) {
  auto x = SolvePartialPivot(m, b);
  if (!x) return std::nullopt;
  for (int i = 0; i < refinements; ++i) {
    Eigen::VectorXd residual = b - m * *x;
    auto dx = SolvePartialPivot(m, residual);
    if (!dx) break;
    *x += *dx;
  }
  return x;
}

}  // namespace seccogc

#endif  // SECCOGC_LINEAR_SOLVE_H_
