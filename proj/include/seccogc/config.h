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

// Experiment configuration: one JSON document describing code, keys,
// network, training, privacy and bound parameters. Loading validates every
// block and reports all violations at once.

#ifndef SECCOGC_CONFIG_H_
#define SECCOGC_CONFIG_H_

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "seccogc/convergence_bound.h"
#include "seccogc/gradient_code.h"
#include "seccogc/network_model.h"
#include "seccogc/privacy_accounting.h"
#include "seccogc/protocol.h"
#include "seccogc/secret_keys.h"
#include "seccogc/status.h"
#include "seccogc/trainer.h"

namespace seccogc {

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : Error(ErrorCode::kConfigError, Join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string Join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : "; ") + s;
    return out;
  }
  std::vector<std::string> violations_;
};

struct CodeSpec {
  int K = 0;
  int s = 0;
  std::optional<std::uint64_t> seed;
};

struct KeySpec {
  ConstructionTag construction = ConstructionTag::kFairCyclic;
  int L = 0;  // defaults to K
  int gamma = 1;
  double lambda2 = 1.0;
  std::optional<std::uint64_t> seed;
};

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::kQuadratic;
  int D = 10;
  std::optional<std::uint64_t> seed;
  QuadraticSuiteOptions quadratic;
  LogisticSuiteOptions logistic;
};

struct TrainingSpec {
  std::int64_t T = 100;
  int I = 5;
  std::optional<double> eta;  // defaults to (1 / G) sqrt(K / T) for quadratics
  std::vector<double> a;      // defaults to I ones
  int batch = 0;
  FailureMode on_failure = FailureMode::kAccumulate;
  std::optional<double> clip_radius;
  ObjectiveSpec objective;
};

struct BoundSpec {
  double sigma2 = 0.0;
  std::optional<double> kappa2;  // fitted from the objective when unset
  double beta2 = 1.0;
  std::optional<double> P_O;     // exact enumeration when unset
  int runs = 1;
};

struct OutputSpec {
  std::string dir = ".";
  TraceLevel trace = TraceLevel::kSummary;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  CodeSpec code;
  KeySpec keys;
  NetworkModel network;
  TrainingSpec training;
  PrivacyParams privacy;
  BoundSpec bound;
  OutputSpec output;

  std::uint64_t code_seed() const { return code.seed.value_or(seed); }
  std::uint64_t key_seed() const { return keys.seed.value_or(seed); }
  std::uint64_t objective_seed() const { return training.objective.seed.value_or(seed); }

  // --seed on the command line replaces the master seed and every block seed.
  void OverrideSeed(std::uint64_t s) {
    seed = s;
    code.seed.reset();
    keys.seed.reset();
    training.objective.seed.reset();
  }
};

inline std::string_view TraceLevelName(TraceLevel t) {
  switch (t) {
    case TraceLevel::kNone: return "none";
    case TraceLevel::kSummary: return "summary";
    case TraceLevel::kFull: return "full";
  }
  return "summary";
}

inline std::optional<TraceLevel> TraceLevelFromName(std::string_view s) {
  if (s == "none") return TraceLevel::kNone;
  if (s == "summary") return TraceLevel::kSummary;
  if (s == "full") return TraceLevel::kFull;
  return std::nullopt;
}

namespace internal {

// Reads optional fields, recording a violation per bad field instead of
// stopping at the first.
class FieldReader {
 public:
  FieldReader(const nlohmann::json& j, std::string prefix, std::vector<std::string>* errors)
      : j_(j), prefix_(std::move(prefix)), errors_(errors) {}

  bool Has(const char* key) const { return j_.is_object() && j_.contains(key); }

  template <typename T>
  void Get(const char* key, T* out, bool required = false) {
    if (!Has(key)) {
      if (required) Fail(key, "is required");
      return;
    }
    try {
      *out = j_.at(key).get<T>();
    } catch (const std::exception&) {
      Fail(key, "has the wrong type");
    }
  }

  template <typename T>
  void GetOptional(const char* key, std::optional<T>* out) {
    if (!Has(key) || j_.at(key).is_null()) return;
    T v{};
    Get(key, &v);
    *out = v;
  }

  void Fail(const char* key, const std::string& what) {
    errors_->push_back(prefix_ + "." + key + " " + what);
  }

  void Check(bool ok, const char* key, const std::string& what) {
    if (!ok) Fail(key, what);
  }

  const nlohmann::json& json() const { return j_; }

 private:
  const nlohmann::json& j_;
  std::string prefix_;
  std::vector<std::string>* errors_;
};

inline const nlohmann::json& Block(const nlohmann::json& root, const char* name, bool required,
                                   std::vector<std::string>* errors) {
  static const nlohmann::json kEmpty = nlohmann::json::object();
  if (!root.contains(name)) {
    if (required) errors->push_back(std::string(name) + " block is required");
    return kEmpty;
  }
  if (!root.at(name).is_object()) {
    errors->push_back(std::string(name) + " must be an object");
    return kEmpty;
  }
  return root.at(name);
}

}  // namespace internal

inline ExperimentConfig ParseConfig(const nlohmann::json& root) {
  std::vector<std::string> errors;
  ExperimentConfig cfg;
  if (!root.is_object()) throw ConfigError({"config must be a JSON object"});
  if (root.contains("seed")) {
    try {
      cfg.seed = root.at("seed").get<std::uint64_t>();
    } catch (const std::exception&) {
      errors.push_back("seed must be a nonnegative integer");
    }
  }

  internal::FieldReader code(internal::Block(root, "code", true, &errors), "code", &errors);
  code.Get("K", &cfg.code.K, true);
  code.Get("s", &cfg.code.s, true);
  code.GetOptional("seed", &cfg.code.seed);
  const int K = cfg.code.K;
  const bool have_k = K >= 1;
  if (code.Has("K")) code.Check(K >= 1, "K", "must be >= 1");
  if (code.Has("s") && have_k) {
    code.Check(cfg.code.s >= 0 && cfg.code.s <= K - 1, "s", "must lie in [0, K-1]");
  }

  internal::FieldReader keys(internal::Block(root, "keys", true, &errors), "keys", &errors);
  std::string construction = "fair_cyclic";
  keys.Get("construction", &construction);
  try {
    cfg.keys.construction = TagFromName(construction);
  } catch (const Error&) {
    keys.Fail("construction", "must be general, fair_general or fair_cyclic");
  }
  keys.Get("L", &cfg.keys.L);
  keys.Get("gamma", &cfg.keys.gamma);
  keys.Get("lambda2", &cfg.keys.lambda2);
  keys.GetOptional("seed", &cfg.keys.seed);
  if (keys.Has("K") && have_k) {
    int key_k = 0;
    keys.Get("K", &key_k);
    keys.Check(key_k == K, "K", "must equal code.K");
  }
  if (cfg.keys.L == 0) cfg.keys.L = K;
  keys.Check(cfg.keys.lambda2 > 0.0, "lambda2", "must be > 0");
  if (have_k) {
    keys.Check(K >= 2, "construction", "needs K >= 2");
    if (cfg.keys.construction == ConstructionTag::kGeneral) {
      keys.Check(cfg.keys.L >= K - 1, "L", "must be >= K-1");
    } else {
      keys.Check(cfg.keys.L == K, "L", "must equal K for fair constructions");
    }
    if (cfg.keys.construction == ConstructionTag::kFairCyclic) {
      keys.Check(cfg.keys.gamma >= 1 && cfg.keys.gamma <= K - 1, "gamma", "must lie in [1, K-1]");
    }
  }

  const nlohmann::json& net_json = internal::Block(root, "network", true, &errors);
  internal::FieldReader net(net_json, "network", &errors);
  if (net_json.is_object() && !net_json.empty()) {
    const bool outage = net.Has("p_up") && net.Has("p_inter");
    const bool connectivity = net.Has("connectivity_up") && net.Has("connectivity_inter");
    if (!outage && !connectivity) {
      if (!net.Has("p_up")) net.Fail("p_up", "is required");
      if (!net.Has("p_inter")) net.Fail("p_inter", "is required");
    }
    if ((outage || connectivity) && have_k) {
      try {
        cfg.network = NetworkFromJson(net_json, K);
      } catch (const std::exception& e) {
        errors.push_back(std::string("network: ") + e.what());
      }
    }
  }

  internal::FieldReader tr(internal::Block(root, "training", false, &errors), "training",
                           &errors);
  TrainingSpec& t = cfg.training;
  tr.Get("T", &t.T);
  tr.Get("I", &t.I);
  tr.GetOptional("eta", &t.eta);
  tr.Get("a", &t.a);
  tr.Get("batch", &t.batch);
  tr.GetOptional("clip_radius", &t.clip_radius);
  tr.Check(t.T >= 1, "T", "must be >= 1");
  tr.Check(t.I >= 1, "I", "must be >= 1");
  if (t.a.empty() && t.I >= 1) t.a.assign(t.I, 1.0);
  tr.Check(static_cast<int>(t.a.size()) == t.I, "a", "must have length I");
  if (t.eta) tr.Check(*t.eta > 0.0, "eta", "must be > 0");
  tr.Check(t.batch >= 0, "batch", "must be >= 0");
  std::string on_failure = "accumulate";
  tr.Get("on_failure", &on_failure);
  if (on_failure == "accumulate") {
    t.on_failure = FailureMode::kAccumulate;
  } else if (on_failure == "retry") {
    t.on_failure = FailureMode::kRetry;
  } else {
    tr.Fail("on_failure", "must be accumulate or retry");
  }
  if (tr.Has("objective")) {
    internal::FieldReader ob(tr.json().at("objective"), "training.objective", &errors);
    std::string kind = "quadratic";
    ob.Get("kind", &kind);
    if (kind == "quadratic") {
      t.objective.kind = ObjectiveKind::kQuadratic;
    } else if (kind == "logistic") {
      t.objective.kind = ObjectiveKind::kLogistic;
    } else {
      ob.Fail("kind", "must be quadratic or logistic");
    }
    ob.Get("D", &t.objective.D);
    ob.GetOptional("seed", &t.objective.seed);
    ob.Get("min_curvature", &t.objective.quadratic.min_curvature);
    ob.Get("max_curvature", &t.objective.quadratic.max_curvature);
    ob.Get("target_spread", &t.objective.quadratic.target_spread);
    ob.Get("gradient_noise", &t.objective.quadratic.gradient_noise);
    ob.Get("n_per_client", &t.objective.logistic.n_per_client);
    ob.Get("separation", &t.objective.logistic.separation);
    ob.Get("l2", &t.objective.logistic.l2);
    ob.Check(t.objective.D >= 1, "D", "must be >= 1");
    ob.Check(t.objective.quadratic.min_curvature > 0 &&
                 t.objective.quadratic.max_curvature >= t.objective.quadratic.min_curvature,
             "min_curvature", "curvatures must be positive and ordered");
    ob.Check(t.objective.logistic.n_per_client >= 1, "n_per_client", "must be >= 1");
  }
  tr.Get("concentration", &t.objective.logistic.concentration);
  tr.Check(t.objective.logistic.concentration > 0.0, "concentration", "must be > 0");

  internal::FieldReader pr(internal::Block(root, "privacy", false, &errors), "privacy", &errors);
  PrivacyParams& p = cfg.privacy;
  p.D = t.objective.D;
  pr.Get("D", &p.D);
  pr.Get("zeta2", &p.zeta2);
  pr.Get("R", &p.R);
  pr.Get("weights", &p.weights);
  pr.Get("delta_prime", &p.delta_prime);
  pr.Get("combinator", &p.combinator);
  pr.Get("log_base", &p.log_base);
  p.lambda2 = cfg.keys.lambda2;
  if (pr.Has("deltas")) {
    std::vector<double> d;
    pr.Get("deltas", &d);
    if (d.size() == 7) {
      for (int i = 0; i < 7; ++i) p.delta[i + 1] = d[i];
    } else {
      pr.Fail("deltas", "must list delta1..delta7");
    }
  }
  for (int i = 1; i <= 7; ++i) {
    pr.Check(p.delta[i] > 0.0 && p.delta[i] <= 1.0, "deltas", "entries must lie in (0, 1]");
  }
  if (pr.Has("bernstein")) {
    internal::FieldReader b(pr.json().at("bernstein"), "privacy.bernstein", &errors);
    b.GetOptional("r1", &p.r1);
    b.GetOptional("r2", &p.r2);
    b.GetOptional("r3", &p.r3);
    b.Get("samples", &p.bernstein_samples);
    b.Check(p.bernstein_samples >= static_cast<int>(kMinBernsteinSamples), "samples",
            "must be >= 1000");
  }
  pr.Check(p.D >= 1, "D", "must be >= 1");
  pr.Check(p.zeta2 > 0.0, "zeta2", "must be > 0");
  pr.Check(p.R >= 0.0, "R", "must be >= 0");
  pr.Check(p.delta_prime > 0.0 && p.delta_prime < 1.0, "delta_prime", "must lie in (0, 1)");
  pr.Check(p.log_base > 1.0, "log_base", "must be > 1");
  if (have_k) {
    pr.Check(p.weights.empty() || static_cast<int>(p.weights.size()) == K, "weights",
             "must have length K");
  }
  if (!p.weights.empty()) {
    double sum = 0.0;
    bool nonnegative = true;
    for (double w : p.weights) {
      sum += w;
      nonnegative = nonnegative && w >= 0.0;
    }
    pr.Check(nonnegative && std::abs(sum - 1.0) <= 1e-9, "weights",
             "must be nonnegative and sum to 1");
  }

  internal::FieldReader bd(internal::Block(root, "bound", false, &errors), "bound", &errors);
  bd.Get("sigma2", &cfg.bound.sigma2);
  bd.GetOptional("kappa2", &cfg.bound.kappa2);
  bd.Get("beta2", &cfg.bound.beta2);
  bd.GetOptional("P_O", &cfg.bound.P_O);
  bd.Get("runs", &cfg.bound.runs);
  bd.Check(cfg.bound.sigma2 >= 0.0, "sigma2", "must be >= 0");
  bd.Check(cfg.bound.beta2 >= 1.0, "beta2", "must be >= 1");
  bd.Check(cfg.bound.runs >= 1, "runs", "must be >= 1");
  if (cfg.bound.P_O) bd.Check(*cfg.bound.P_O >= 0.0 && *cfg.bound.P_O < 1.0, "P_O", "must lie in [0, 1)");

  internal::FieldReader out(internal::Block(root, "output", false, &errors), "output", &errors);
  out.Get("dir", &cfg.output.dir);
  std::string trace = "summary";
  out.Get("trace", &trace);
  if (auto level = TraceLevelFromName(trace)) {
    cfg.output.trace = *level;
  } else {
    out.Fail("trace", "must be none, summary or full");
  }

  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

inline nlohmann::json ToJson(const ExperimentConfig& c) {
  auto opt_seed = [](const std::optional<std::uint64_t>& s) {
    return s ? nlohmann::json(*s) : nlohmann::json(nullptr);
  };
  nlohmann::json j;
  j["seed"] = c.seed;
  j["code"] = {{"K", c.code.K}, {"s", c.code.s}, {"seed", opt_seed(c.code.seed)}};
  j["keys"] = {{"construction", std::string(TagName(c.keys.construction))},
               {"L", c.keys.L},
               {"gamma", c.keys.gamma},
               {"lambda2", c.keys.lambda2},
               {"seed", opt_seed(c.keys.seed)}};
  j["network"] = ToJson(c.network);
  const TrainingSpec& t = c.training;
  j["training"] = {
      {"T", t.T},
      {"I", t.I},
      {"eta", t.eta ? nlohmann::json(*t.eta) : nlohmann::json(nullptr)},
      {"a", t.a},
      {"batch", t.batch},
      {"on_failure", t.on_failure == FailureMode::kRetry ? "retry" : "accumulate"},
      {"clip_radius", t.clip_radius ? nlohmann::json(*t.clip_radius) : nlohmann::json(nullptr)},
      {"concentration", t.objective.logistic.concentration},
      {"objective",
       {{"kind", t.objective.kind == ObjectiveKind::kLogistic ? "logistic" : "quadratic"},
        {"D", t.objective.D},
        {"seed", opt_seed(t.objective.seed)},
        {"min_curvature", t.objective.quadratic.min_curvature},
        {"max_curvature", t.objective.quadratic.max_curvature},
        {"target_spread", t.objective.quadratic.target_spread},
        {"gradient_noise", t.objective.quadratic.gradient_noise},
        {"n_per_client", t.objective.logistic.n_per_client},
        {"separation", t.objective.logistic.separation},
        {"l2", t.objective.logistic.l2}}}};
  const PrivacyParams& p = c.privacy;
  j["privacy"] = {{"D", p.D},
                  {"zeta2", p.zeta2},
                  {"R", p.R},
                  {"weights", p.weights},
                  {"deltas", std::vector<double>(p.delta + 1, p.delta + 8)},
                  {"delta_prime", p.delta_prime},
                  {"combinator", p.combinator},
                  {"log_base", p.log_base},
                  {"bernstein",
                   {{"r1", NullableNumber(p.r1)},
                    {"r2", NullableNumber(p.r2)},
                    {"r3", NullableNumber(p.r3)},
                    {"samples", p.bernstein_samples}}}};
  j["bound"] = {{"sigma2", c.bound.sigma2},
                {"kappa2", NullableNumber(c.bound.kappa2)},
                {"beta2", c.bound.beta2},
                {"P_O", NullableNumber(c.bound.P_O)},
                {"runs", c.bound.runs}};
  j["output"] = {{"dir", c.output.dir}, {"trace", std::string(TraceLevelName(c.output.trace))}};
  return j;
}

// Everything a run needs, built from a validated config. Pointers inside
// `context` refer to members, so the struct is not copyable.
struct Experiment {
  ExperimentConfig config;
  GcCode code;
  GeneratorMatrix keys;
  Objective objective;
  ProtocolContext context;

  Experiment() = default;
  Experiment(const Experiment&) = delete;
  Experiment& operator=(const Experiment&) = delete;
};

inline GeneratorMatrix BuildKeys(const ExperimentConfig& c) {
  switch (c.keys.construction) {
    case ConstructionTag::kGeneral:
      return ConstructGeneral(c.code.K, c.keys.L, c.key_seed());
    case ConstructionTag::kFairGeneral:
      return ConstructFairGeneral(c.code.K, c.keys.lambda2, c.key_seed());
    case ConstructionTag::kFairCyclic:
      return ConstructFairCyclic(c.code.K, c.keys.gamma, c.keys.lambda2);
  }
  throw Error(ErrorCode::kConfigError, "unknown construction");
}

inline Objective BuildObjective(const ExperimentConfig& c) {
  const ObjectiveSpec& o = c.training.objective;
  if (o.kind == ObjectiveKind::kLogistic) {
    return MakeLogisticSuite(c.code.K, o.D, c.objective_seed(), o.logistic);
  }
  return MakeQuadraticSuite(c.code.K, o.D, c.objective_seed(), o.quadratic);
}

// Smoothness constant: exact for quadratics, the usual |X|^2 / (4 n) + l2
// bound for logistic losses.
inline double SmoothnessOf(const Objective& obj) {
  if (obj.kind == ObjectiveKind::kQuadratic) return QuadraticSmoothness(obj);
  double g = 0.0;
  for (const LogisticLoss& l : obj.logistic) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(l.features);
    const double top = svd.singularValues()(0);
    g = std::max(g, top * top / (4.0 * l.features.rows()) + l.l2);
  }
  return g;
}

inline void BuildExperiment(const ExperimentConfig& c, Experiment* e) {
  e->config = c;
  e->code = BuildCode(c.code.K, c.code.s, c.code_seed());
  e->keys = BuildKeys(c);
  e->objective = BuildObjective(c);
  LocalSolver solver;
  solver.a = Eigen::Map<const Eigen::VectorXd>(c.training.a.data(),
                                               static_cast<Eigen::Index>(c.training.a.size()));
  solver.eta = c.training.eta.value_or(
      StandardStepSize(SmoothnessOf(e->objective), c.code.K, static_cast<double>(c.training.T)));
  solver.batch = c.training.batch;
  solver.clip_radius = c.training.clip_radius;
  e->context.code = &e->code;
  e->context.keys = &e->keys;
  e->context.net = &e->config.network;
  e->context.objective = &e->objective;
  e->context.solver = solver;
  e->context.on_failure = c.training.on_failure;
  e->context.seed = c.seed;
}

// Probe points for the dissimilarity fit: the origin, the known optimum and
// n seeded Gaussian points at the optimum's scale.
inline std::vector<Eigen::VectorXd> DissimilarityProbes(const Objective& obj, int n,
                                                        std::uint64_t seed) {
  std::vector<Eigen::VectorXd> points = {Eigen::VectorXd::Zero(obj.D)};
  double scale = 1.0;
  if (obj.known_optimum) {
    points.push_back(*obj.known_optimum);
    scale = std::max(1.0, obj.known_optimum->norm() / std::sqrt(static_cast<double>(obj.D)));
  }
  CounterRng rng(seed, {static_cast<std::uint64_t>(Stream::kData), 7});
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x(obj.D);
    for (int d = 0; d < obj.D; ++d) x(d) = 2.0 * scale * rng.Normal();
    points.push_back(std::move(x));
  }
  return points;
}

// Bound parameters matching an experiment: G from the objective, L0 gap from
// the known optimum (or the nonnegative logistic loss), sigma^2 from the
// injected gradient noise when not configured, kappa^2 fitted when unset.
inline ConvergenceParams BoundParamsFor(const Experiment& e, double p_outage) {
  const ExperimentConfig& c = e.config;
  ConvergenceParams p;
  p.T = static_cast<double>(c.training.T);
  p.K = c.code.K;
  p.G_smooth = SmoothnessOf(e.objective);
  p.a = c.training.a;
  p.sigma2 = c.bound.sigma2;
  if (p.sigma2 == 0.0 && e.objective.gradient_noise > 0.0) {
    p.sigma2 = e.objective.D * e.objective.gradient_noise * e.objective.gradient_noise;
  }
  p.beta2 = c.bound.beta2;
  p.kappa2 = c.bound.kappa2.value_or(
      FitDissimilarity(e.objective, DissimilarityProbes(e.objective, 64, c.objective_seed()),
                       p.beta2));
  p.P_O = p_outage;
  const Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(e.objective.D);
  p.L0_gap = e.objective.known_optimum
                 ? GlobalLoss(theta0, e.objective) - GlobalLoss(*e.objective.known_optimum, e.objective)
                 : GlobalLoss(theta0, e.objective);
  p.eta = e.context.solver.eta;
  return p;
}


}  // namespace seccogc

#endif  // SECCOGC_CONFIG_H_
