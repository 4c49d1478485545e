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

// Local objectives and the generalized local solver: the round update is
// -eta * sum_i a_i * grad_i, where grad_i is the stochastic gradient at the
// i-th local iterate.

#ifndef SECCOGC_TRAINER_H_
#define SECCOGC_TRAINER_H_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "seccogc/rng.h"
#include "seccogc/status.h"

namespace seccogc {

enum class ObjectiveKind { kQuadratic, kLogistic };

// 0.5 * (theta - target)^T curvature (theta - target)
struct QuadraticLoss {
  Eigen::MatrixXd curvature;
  Eigen::VectorXd target;
};

// Mean binary cross-entropy plus 0.5 * l2 * |theta|^2.
struct LogisticLoss {
  Eigen::MatrixXd features;  // n x D
  Eigen::VectorXd labels;    // n, values in {0, 1}
  double l2 = 0.0;
};

struct Objective {
  ObjectiveKind kind = ObjectiveKind::kQuadratic;
  int D = 0;
  std::vector<QuadraticLoss> quadratic;
  std::vector<LogisticLoss> logistic;
  std::optional<Eigen::VectorXd> known_optimum;
  // Per-coordinate stddev of additive noise on quadratic gradients; models the
  // minibatch variance sigma^2 = D * gradient_noise^2.
  double gradient_noise = 0.0;

  int K() const {
    return static_cast<int>(kind == ObjectiveKind::kQuadratic ? quadratic.size()
                                                              : logistic.size());
  }

  double LocalLoss(int k, const Eigen::VectorXd& theta) const {
    if (kind == ObjectiveKind::kQuadratic) {
      const auto& q = quadratic[k];
      const Eigen::VectorXd diff = theta - q.target;
      return 0.5 * diff.dot(q.curvature * diff);
    }
    const auto& l = logistic[k];
    const Eigen::VectorXd z = l.features * theta;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      // log(1 + e^z) - y z, evaluated stably
      const double softplus = z(i) > 0 ? z(i) + std::log1p(std::exp(-z(i)))
                                       : std::log1p(std::exp(z(i)));
      loss += softplus - l.labels(i) * z(i);
    }
    return loss / static_cast<double>(z.size()) + 0.5 * l.l2 * theta.squaredNorm();
  }

  Eigen::VectorXd LocalGradient(int k, const Eigen::VectorXd& theta) const {
    if (kind == ObjectiveKind::kQuadratic) {
      const auto& q = quadratic[k];
      return q.curvature * (theta - q.target);
    }
    const auto& l = logistic[k];
    std::vector<int> all(l.features.rows());
    std::iota(all.begin(), all.end(), 0);
    return LogisticBatchGradient(l, theta, all);
  }

  // batch <= 0 or >= dataset size means full batch.
  Eigen::VectorXd StochasticGradient(int k, const Eigen::VectorXd& theta, int batch,
                                     CounterRng& rng) const {
    if (kind == ObjectiveKind::kQuadratic) {
      Eigen::VectorXd g = LocalGradient(k, theta);
      if (gradient_noise > 0.0) {
        for (Eigen::Index d = 0; d < g.size(); ++d) g(d) += gradient_noise * rng.Normal();
      }
      return g;
    }
    const auto& l = logistic[k];
    const int n = static_cast<int>(l.features.rows());
    if (batch <= 0 || batch >= n) return LocalGradient(k, theta);
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < batch; ++i) {
      const int j = i + static_cast<int>(rng.Uniform() * (n - i));
      std::swap(idx[i], idx[std::min(j, n - 1)]);
    }
    idx.resize(batch);
    return LogisticBatchGradient(l, theta, idx);
  }

 private:
  static Eigen::VectorXd LogisticBatchGradient(const LogisticLoss& l,
                                               const Eigen::VectorXd& theta,
                                               const std::vector<int>& rows) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
    for (int i : rows) {
      const double z = l.features.row(i).dot(theta);
      const double sigmoid = 1.0 / (1.0 + std::exp(-z));
      g += (sigmoid - l.labels(i)) * l.features.row(i).transpose();
    }
    g /= static_cast<double>(rows.size());
    return g + l.l2 * theta;
  }
};

struct LocalSolver {
  Eigen::VectorXd a;  // one weight per local iteration
  double eta = 0.01;
  int batch = 0;
  std::optional<double> clip_radius;  // enforce |delta| <= R when set

  int I() const { return static_cast<int>(a.size()); }
};

inline Eigen::VectorXd LocalUpdate(const Eigen::VectorXd& theta0, const Objective& obj,
                                   int k, const LocalSolver& solver, CounterRng& rng) {
  if (theta0.size() != obj.D) throw Error(ErrorCode::kDimMismatch, "theta0 has wrong dimension");
  Eigen::VectorXd theta = theta0;
  for (int i = 0; i < solver.I(); ++i) {
    theta -= solver.eta * solver.a(i) * obj.StochasticGradient(k, theta, solver.batch, rng);
  }
  Eigen::VectorXd delta = theta - theta0;
  if (solver.clip_radius) {
    const double norm = delta.norm();
    if (norm > *solver.clip_radius && norm > 0.0) delta *= *solver.clip_radius / norm;
  }
  return delta;
}

inline double GlobalLoss(const Eigen::VectorXd& theta, const Objective& obj) {
  double total = 0.0;
  for (int k = 0; k < obj.K(); ++k) total += obj.LocalLoss(k, theta);
  return total / obj.K();
}

inline Eigen::VectorXd GlobalGradient(const Eigen::VectorXd& theta, const Objective& obj) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(obj.D);
  for (int k = 0; k < obj.K(); ++k) g += obj.LocalGradient(k, theta);
  return g / obj.K();
}

inline double GlobalGradNorm(const Eigen::VectorXd& theta, const Objective& obj) {
  return GlobalGradient(theta, obj).norm();
}

// Closed-form minimizer of the average of quadratic losses.
inline Eigen::VectorXd QuadraticOptimum(const std::vector<QuadraticLoss>& clients) {
  const Eigen::Index D = clients.front().target.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(D, D);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(D);
  for (const auto& q : clients) {
    h += q.curvature;
    b += q.curvature * q.target;
  }
  return h.ldlt().solve(b);
}

// Largest curvature eigenvalue across clients (gradient Lipschitz constant).
inline double QuadraticSmoothness(const Objective& obj) {
  double g = 0.0;
  for (const auto& q : obj.quadratic) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.curvature);
    g = std::max(g, es.eigenvalues().maxCoeff());
  }
  return g;
}

struct QuadraticSuiteOptions {
  double min_curvature = 0.5;
  double max_curvature = 2.0;
  double target_spread = 1.0;  // stddev of client targets around 0
  double gradient_noise = 0.0;
};

// Diagonal curvatures drawn uniformly in [min, max]; targets ~ N(0, spread^2).
inline Objective MakeQuadraticSuite(int K, int D, std::uint64_t seed,
                                    const QuadraticSuiteOptions& options = {}) {
  if (K < 1 || D < 1) throw Error(ErrorCode::kInvalidArgument, "need K, D >= 1");
  if (!(options.min_curvature > 0.0) || options.max_curvature < options.min_curvature) {
    throw Error(ErrorCode::kInvalidArgument, "curvatures must be positive and ordered");
  }
  CounterRng rng(seed, {static_cast<std::uint64_t>(Stream::kData), 1});
  Objective obj;
  obj.kind = ObjectiveKind::kQuadratic;
  obj.D = D;
  obj.gradient_noise = options.gradient_noise;
  for (int k = 0; k < K; ++k) {
    QuadraticLoss q;
    q.curvature = Eigen::MatrixXd::Zero(D, D);
    q.target.resize(D);
    for (int d = 0; d < D; ++d) {
      q.curvature(d, d) = options.min_curvature +
                          (options.max_curvature - options.min_curvature) * rng.Uniform();
      q.target(d) = options.target_spread * rng.Normal();
    }
    obj.quadratic.push_back(std::move(q));
  }
  obj.known_optimum = QuadraticOptimum(obj.quadratic);
  return obj;
}

// Per-client class proportions, each row ~ Dirichlet(concentration * 1).
inline Eigen::MatrixXd DirichletPartition(int n_classes, int K, double concentration,
                                          std::uint64_t seed) {
  if (!(concentration > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "Dirichlet concentration must be > 0");
  }
  if (n_classes < 1 || K < 1) throw Error(ErrorCode::kInvalidArgument, "need classes, K >= 1");
  Eigen::MatrixXd props(K, n_classes);
  for (int k = 0; k < K; ++k) {
    CounterRng rng(seed, {static_cast<std::uint64_t>(Stream::kData), 2,
                          static_cast<std::uint64_t>(k)});
    double total = 0.0;
    for (int c = 0; c < n_classes; ++c) {
      props(k, c) = rng.Gamma(concentration);
      total += props(k, c);
    }
    if (total <= 0.0) {
      // All gammas underflowed: put the mass on one class.
      props.row(k).setZero();
      props(k, static_cast<int>(rng.Uniform() * n_classes) % n_classes) = 1.0;
      continue;
    }
    props.row(k) /= total;
    double head = 0.0;
    for (int c = 0; c + 1 < n_classes; ++c) head += props(k, c);
    props(k, n_classes - 1) = 1.0 - head;
  }
  return props;
}

// Splits n samples by proportions using largest remainders.
inline std::vector<int> AllocateCounts(const Eigen::RowVectorXd& props, int n) {
  const int classes = static_cast<int>(props.size());
  std::vector<int> counts(classes);
  std::vector<std::pair<double, int>> remainders;
  int used = 0;
  for (int c = 0; c < classes; ++c) {
    const double exact = props(c) * n;
    counts[c] = static_cast<int>(std::floor(exact));
    used += counts[c];
    remainders.emplace_back(exact - counts[c], c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (int i = 0; used < n; ++i, ++used) ++counts[remainders[i % classes].second];
  return counts;
}

struct LogisticSuiteOptions {
  int n_per_client = 200;
  double concentration = 0.5;  // Dirichlet Gamma
  double separation = 1.5;     // distance of class means from the origin
  double l2 = 1e-2;
};

// Binary logistic regression with label skew from a Dirichlet partition.
// Features are N(+/- separation * u, I) for a seeded unit direction u.
inline Objective MakeLogisticSuite(int K, int D, std::uint64_t seed,
                                   const LogisticSuiteOptions& options = {}) {
  const Eigen::MatrixXd props = DirichletPartition(2, K, options.concentration, seed);
  CounterRng dir_rng(seed, {static_cast<std::uint64_t>(Stream::kData), 3});
  Eigen::VectorXd u(D);
  for (int d = 0; d < D; ++d) u(d) = dir_rng.Normal();
  u.normalize();
  Objective obj;
  obj.kind = ObjectiveKind::kLogistic;
  obj.D = D;
  for (int k = 0; k < K; ++k) {
    CounterRng rng(seed, {static_cast<std::uint64_t>(Stream::kData), 4,
                          static_cast<std::uint64_t>(k)});
    const std::vector<int> counts = AllocateCounts(props.row(k), options.n_per_client);
    LogisticLoss l;
    l.l2 = options.l2;
    l.features.resize(options.n_per_client, D);
    l.labels.resize(options.n_per_client);
    int row = 0;
    for (int c = 0; c < 2; ++c) {
      const double sign = c == 0 ? -1.0 : 1.0;
      for (int i = 0; i < counts[c]; ++i, ++row) {
        for (int d = 0; d < D; ++d) {
          l.features(row, d) = sign * options.separation * u(d) + rng.Normal();
        }
        l.labels(row) = c;
      }
    }
    obj.logistic.push_back(std::move(l));
  }
  return obj;
}

// Smallest kappa^2 such that the uniform-weight dissimilarity bound
// mean_k |grad_k|^2 <= beta2 * |grad|^2 + kappa^2 holds at every given point.
inline double FitDissimilarity(const Objective& obj, const std::vector<Eigen::VectorXd>& points,
                               double beta2) {
  double kappa2 = 0.0;
  for (const auto& theta : points) {
    double local = 0.0;
    for (int k = 0; k < obj.K(); ++k) local += obj.LocalGradient(k, theta).squaredNorm();
    local /= obj.K();
    kappa2 = std::max(kappa2, local - beta2 * GlobalGradient(theta, obj).squaredNorm());
  }
  return kappa2;
}

}  // namespace seccogc

#endif  // SECCOGC_TRAINER_H_
