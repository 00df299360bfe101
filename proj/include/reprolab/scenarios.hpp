#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reprolab/core.hpp"
#include "reprolab/costs.hpp"
#include "reprolab/oracles.hpp"
#include "reprolab/rng.hpp"
#include "reprolab/solvers.hpp"

namespace reprolab {

using ParamMap = std::map<std::string, double>;

inline constexpr std::size_t kDefaultMaxDimensionBudget = 32768;

struct SolverConfig {
  StepSchedule schedule;
  AveragingScheme averaging;
  std::size_t batch_size = 1;
  bool project = true;  // only meaningful when the cost declares a radius
};

// Deviation exponents per axis; nullopt where the cell is a sum of two
// regimes or not a power law at all.
struct ExpectedSlopes {
  std::optional<double> T, epsilon, delta;
};

// Setting/error-model cell -> exponents of its deviation bound.
inline const std::map<std::string, ExpectedSlopes>& expected_slope_table() {
  static const std::map<std::string, ExpectedSlopes> table = {
      {"smooth/stochastic", {-1.0, -2.0, 2.0}},         // delta^2 / (T eps^2)
      {"smooth/nonstochastic", {0.0, -2.0, 2.0}},       // delta^2 / eps^2
      {"smooth/init", {0.0, 0.0, 2.0}},                 // delta^2
      {"smooth_sc/stochastic", {-1.0, 0.0, 2.0}},       // delta^2 / T, capped by eps
      {"smooth_sc/nonstochastic", {0.0, 0.0, 2.0}},     // delta^2, capped by eps
      {"smooth_sc/init", {std::nullopt, 0.0, 2.0}},     // exp(-cT) delta^2, capped by eps
      {"nonsmooth/stochastic", {-1.0, -2.0, 0.0}},      // 1 / (T eps^2)
      {"nonsmooth/nonstochastic", {std::nullopt, -2.0, std::nullopt}},  // 1/(T eps^2) + delta^2/eps^2
      {"nonsmooth/init", {std::nullopt, std::nullopt, std::nullopt}},   // 1/(T eps^2) + delta^2
      {"nonsmooth_sc/stochastic", {-1.0, 0.0, 0.0}},    // 1/T, capped by eps
      {"nonsmooth_sc/nonstochastic", {std::nullopt, 0.0, std::nullopt}},  // 1/T + delta^2, capped by eps
      {"nonsmooth_sc/init", {-1.0, 0.0, 0.0}},          // 1/T, capped by eps
  };
  return table;
}

inline std::optional<double> expected_slope(const std::string& cell, const std::string& axis) {
  const auto& t = expected_slope_table();
  auto it = t.find(cell);
  if (it == t.end()) return std::nullopt;
  if (axis == "T") return it->second.T;
  if (axis == "epsilon") return it->second.epsilon;
  if (axis == "delta") return it->second.delta;
  return std::nullopt;
}

struct Instance {
  std::string scenario;
  ParamMap params;
  CostPtr cost;
  OracleSpec oracle;
  SolverConfig solver;
  Vector x_ref;
  std::size_t T = 0;
  std::string cell;
  std::optional<double> epsilon;  // accuracy target, when the scenario has one
};

struct ScenarioInfo {
  std::string id;
  std::vector<std::string> required;
  ParamMap optional;  // name -> default
  std::string dim_formula;
  std::string description;
  std::string cell;
};

namespace detail {

struct ScenarioDef {
  ScenarioInfo info;
  std::function<Instance(const ParamMap&)> build;
};

inline StepSchedule make_schedule(StepKind k, ParamMap p) { return StepSchedule{k, std::move(p)}; }

inline NoiseSchedule make_noise(NoiseKind k, double delta, std::map<std::string, double> p = {}) {
  NoiseSchedule s;
  s.kind = k;
  s.delta = delta;
  s.params = std::move(p);
  return s;
}

inline std::size_t as_count(const ParamMap& p, const std::string& key) {
  const double v = p.at(key);
  if (!(v >= 1.0) || v != std::floor(v)) throw InvalidParameter("param '" + key + "' must be a positive integer");
  return std::size_t(v);
}

inline double positive(const ParamMap& p, const std::string& key) {
  const double v = p.at(key);
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter("param '" + key + "' must be positive");
  return v;
}

inline double nonneg(const ParamMap& p, const std::string& key) {
  const double v = p.at(key);
  if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidParameter("param '" + key + "' must be nonnegative");
  return v;
}

inline Instance base(const std::string& id, const ParamMap& p, const std::string& cell) {
  Instance in;
  in.scenario = id;
  in.params = p;
  in.cell = cell;
  in.T = as_count(p, "T");
  if (p.count("epsilon")) in.epsilon = positive(p, "epsilon");
  return in;
}

inline const std::vector<ScenarioDef>& scenario_defs() {
  static const std::vector<ScenarioDef> defs = [] {
    std::vector<ScenarioDef> d;

    d.push_back({{"smooth_sto_lb",
                  {"T", "epsilon", "delta"},
                  {},
                  "T+1",
                  "smooth: 4 eps F(y+1) on the last coordinate; Rademacher noise on dummy coordinate t",
                  "smooth/stochastic"},
                 [](const ParamMap& p) {
                   Instance in = base("smooth_sto_lb", p, "smooth/stochastic");
                   const double eps = positive(p, "epsilon");
                   in.cost = std::make_shared<RampCost>("smooth_sto_lb", in.T + 1, in.T, eps);
                   in.oracle.kind = OracleKind::stochastic_inexact;
                   in.oracle.schedule = make_noise(NoiseKind::rademacher_coordinate, nonneg(p, "delta"),
                                                   {{"offset", 0.0}, {"span", double(in.T)}});
                   in.solver.schedule = make_schedule(StepKind::slowed, {{"epsilon", eps}, {"T", double(in.T)}});
                   in.solver.averaging = {AvgKind::uniform};
                   return in;
                 }});

    d.push_back({{"smooth_det_lb",
                  {"T", "epsilon", "delta"},
                  {{"D", 2.0}, {"ratio", 1.0}},
                  "2",
                  "smooth: 4 eps F(y+1) on (x, y); noise delta * ratio * df/dy on x; ball of radius D",
                  "smooth/nonstochastic"},
                 [](const ParamMap& p) {
                   Instance in = base("smooth_det_lb", p, "smooth/nonstochastic");
                   const double eps = positive(p, "epsilon");
                   auto cost = std::make_shared<RampCost>("smooth_det_lb", 2, 1, eps);
                   cost->set_domain_radius(positive(p, "D"));
                   in.cost = cost;
                   in.oracle.kind = OracleKind::nonstochastic_inexact;
                   in.oracle.schedule = make_noise(NoiseKind::gradient_proportional, nonneg(p, "delta"),
                                                   {{"source", 1.0}, {"target", 0.0}, {"ratio", p.at("ratio")}});
                   in.solver.schedule = make_schedule(StepKind::inverse_L, {{"L", 8.0 * eps}});
                   in.solver.averaging = {AvgKind::uniform};
                   return in;
                 }});

    d.push_back({{"smooth_init_lb",
                  {"T", "delta"},
                  {},
                  "2",
                  "smooth: (y-1)^2 on (x, y); initial point shifted by delta along x",
                  "smooth/init"},
                 [](const ParamMap& p) {
                   Instance in = base("smooth_init_lb", p, "smooth/init");
                   in.cost = std::make_shared<DiagonalQuadraticCost>("smooth_init_lb", Vector{0.0, 2.0},
                                                                     Vector{0.0, -2.0}, 1.0);
                   in.oracle.kind = OracleKind::inexact_init;
                   in.oracle.init = {InitMode::fixed_coordinate, nonneg(p, "delta"), {}};
                   in.solver.schedule = make_schedule(StepKind::inverse_L, {{"L", 2.0}});
                   in.solver.averaging = {AvgKind::last};
                   return in;
                 }});

    d.push_back({{"smooth_sc_sto_lb",
                  {"T", "mu", "delta"},
                  {},
                  "T+1",
                  "smooth strongly convex: y + (mu/2)y^2 + (mu/2)|dummies|^2; Rademacher noise on dummy t",
                  "smooth_sc/stochastic"},
                 [](const ParamMap& p) {
                   Instance in = base("smooth_sc_sto_lb", p, "smooth_sc/stochastic");
                   const double mu = positive(p, "mu");
                   Vector a(in.T + 1, mu), b(in.T + 1, 0.0);
                   b[in.T] = 1.0;
                   in.cost = std::make_shared<DiagonalQuadraticCost>("smooth_sc_sto_lb", a, b, 0.0);
                   in.oracle.kind = OracleKind::stochastic_inexact;
                   in.oracle.schedule = make_noise(NoiseKind::rademacher_coordinate, nonneg(p, "delta"),
                                                   {{"offset", 0.0}, {"span", double(in.T)}});
                   const double k = default_shift_k(mu, mu);
                   in.solver.schedule = make_schedule(StepKind::smooth_sc, {{"L", mu}, {"mu", mu}, {"k", k}});
                   in.solver.averaging = {AvgKind::shifted_linear, k};
                   return in;
                 }});

    d.push_back({{"smooth_sc_det_lb",
                  {"T", "mu", "delta"},
                  {{"D", 0.0}},
                  "2",
                  "smooth strongly convex: y + (mu/2)y^2 + (mu/2)x^2; fixed noise delta e_1; ball of radius D "
                  "(0 means 2/mu)",
                  "smooth_sc/nonstochastic"},
                 [](const ParamMap& p) {
                   Instance in = base("smooth_sc_det_lb", p, "smooth_sc/nonstochastic");
                   const double mu = positive(p, "mu");
                   auto cost = std::make_shared<DiagonalQuadraticCost>("smooth_sc_det_lb", Vector{mu, mu},
                                                                       Vector{0.0, 1.0}, 0.0);
                   cost->set_domain_radius(p.at("D") > 0.0 ? p.at("D") : 2.0 / mu);
                   in.cost = cost;
                   in.oracle.kind = OracleKind::nonstochastic_inexact;
                   in.oracle.schedule = make_noise(NoiseKind::fixed_direction, nonneg(p, "delta"), {{"coordinate", 0.0}});
                   in.solver.schedule = make_schedule(StepKind::inverse_L, {{"L", mu}});
                   in.solver.averaging = {AvgKind::last};
                   return in;
                 }});

    d.push_back({{"nesterov_chain",
                  {"T", "kappa", "mu", "delta"},
                  {{"truncation_dim", 0.0}},
                  "2*truncation_dim (default truncation_dim = 4T)",
                  "smooth strongly convex tridiagonal chain, two blocks; second block starts at its optimum, "
                  "perturbed by truncating its tail",
                  "smooth_sc/init"},
                 [](const ParamMap& p) {
                   Instance in = base("nesterov_chain", p, "smooth_sc/init");
                   const double trunc = p.at("truncation_dim");
                   const std::size_t n = trunc > 0.0 ? as_count(p, "truncation_dim") : 4 * in.T;
                   const double kappa = positive(p, "kappa"), mu = positive(p, "mu");
                   auto cost = std::make_shared<NesterovChainCost>(n, kappa, mu);
                   in.x_ref.assign(2 * n, 0.0);
                   for (std::size_t i = 0; i < n; ++i) in.x_ref[n + i] = cost->block_optimum()[i];
                   in.cost = cost;
                   in.oracle.kind = OracleKind::inexact_init;
                   in.oracle.init = {InitMode::tail_truncation,
                                     nonneg(p, "delta"),
                                     {{"block_offset", double(n)}, {"block_size", double(n)}}};
                   in.solver.schedule = make_schedule(StepKind::inverse_L, {{"L", mu * kappa}});
                   in.solver.averaging = {AvgKind::last};
                   return in;
                 }});

    d.push_back({{"nonsmooth_sto_lb",
                  {"T", "epsilon", "delta"},
                  {},
                  "3T+1",
                  "nonsmooth: G(x_err, y, z) + 2 eps max(w+1, 0); Rademacher noise on x_err[t]",
                  "nonsmooth/stochastic"},
                 [](const ParamMap& p) {
                   Instance in = base("nonsmooth_sto_lb", p, "nonsmooth/stochastic");
                   const double eps = positive(p, "epsilon");
                   in.cost = std::make_shared<NestedMaxCost>("nonsmooth_sto_lb", in.T, eps, 0.0, 0.0, false);
                   in.oracle.kind = OracleKind::stochastic_inexact;
                   in.oracle.schedule = make_noise(NoiseKind::rademacher_coordinate, nonneg(p, "delta"),
                                                   {{"offset", 0.0}, {"span", double(in.T)}});
                   in.solver.schedule = make_schedule(StepKind::slowed, {{"epsilon", eps}, {"T", double(in.T)}});
                   in.solver.averaging = {AvgKind::uniform};
                   return in;
                 }});

    d.push_back({{"nonsmooth_det_lb",
                  {"T", "epsilon", "delta"},
                  {},
                  "3T+2",
                  "nonsmooth: G(x_err, y, z) + 2 eps max(w+1, 0) plus dummy u; noise split between x_err[t] and u",
                  "nonsmooth/nonstochastic"},
                 [](const ParamMap& p) {
                   Instance in = base("nonsmooth_det_lb", p, "nonsmooth/nonstochastic");
                   const double eps = positive(p, "epsilon");
                   auto cost = std::make_shared<NestedMaxCost>("nonsmooth_det_lb", in.T, eps, 0.0, 0.0, true);
                   in.oracle.kind = OracleKind::nonstochastic_inexact;
                   in.oracle.schedule =
                       make_noise(NoiseKind::split_dummy, nonneg(p, "delta"),
                                  {{"offset", 0.0}, {"span", double(in.T)}, {"dummy", double(cost->dummy_index())}});
                   in.cost = cost;
                   in.solver.schedule = make_schedule(StepKind::slowed, {{"epsilon", eps}, {"T", double(in.T)}});
                   in.solver.averaging = {AvgKind::uniform};
                   return in;
                 }});

    d.push_back({{"nonsmooth_init_lb",
                  {"T", "epsilon", "delta"},
                  {},
                  "2T+2",
                  "nonsmooth: max(0, x_err[i] + y[i]) + 2 eps max(w+1, 0) plus dummy u; spread initial perturbation",
                  "nonsmooth/init"},
                 [](const ParamMap& p) {
                   Instance in = base("nonsmooth_init_lb", p, "nonsmooth/init");
                   const double eps = positive(p, "epsilon");
                   in.cost = std::make_shared<PairMaxCost>("nonsmooth_init_lb", in.T, eps, 0.0);
                   in.oracle.kind = OracleKind::inexact_init;
                   in.oracle.init = {InitMode::spread, nonneg(p, "delta"), {{"T", double(in.T)}}};
                   in.solver.schedule = make_schedule(StepKind::slowed, {{"epsilon", eps}, {"T", double(in.T)}});
                   in.solver.averaging = {AvgKind::uniform};
                   return in;
                 }});

    d.push_back({{"nonsmooth_sc_sto_lb",
                  {"T", "mu", "delta"},
                  {},
                  "3T+1",
                  "nonsmooth strongly convex: G(x_err + delta e_1, y, z) + (mu/2)|(x_err,y,z)|^2 + w + (mu/2)w^2; "
                  "Rademacher noise on x_err[t]",
                  "nonsmooth_sc/stochastic"},
                 [](const ParamMap& p) {
                   Instance in = base("nonsmooth_sc_sto_lb", p, "nonsmooth_sc/stochastic");
                   const double mu = positive(p, "mu"), delta = nonneg(p, "delta");
                   in.cost = std::make_shared<NestedMaxCost>("nonsmooth_sc_sto_lb", in.T, 0.0, mu, delta, false);
                   in.oracle.kind = OracleKind::stochastic_inexact;
                   in.oracle.schedule = make_noise(NoiseKind::rademacher_coordinate, delta,
                                                   {{"offset", 0.0}, {"span", double(in.T)}});
                   in.solver.schedule = make_schedule(StepKind::sc_classic, {{"mu", mu}});
                   in.solver.averaging = {AvgKind::sc_linear};
                   return in;
                 }});

    d.push_back({{"nonsmooth_sc_det_lb",
                  {"T", "mu", "delta"},
                  {},
                  "3T+2",
                  "nonsmooth strongly convex construction plus dummy u with (mu/2)u^2; noise split between x_err[t] "
                  "and u",
                  "nonsmooth_sc/nonstochastic"},
                 [](const ParamMap& p) {
                   Instance in = base("nonsmooth_sc_det_lb", p, "nonsmooth_sc/nonstochastic");
                   const double mu = positive(p, "mu"), delta = nonneg(p, "delta");
                   auto cost = std::make_shared<NestedMaxCost>("nonsmooth_sc_det_lb", in.T, 0.0, mu, delta, true);
                   in.oracle.kind = OracleKind::nonstochastic_inexact;
                   in.oracle.schedule =
                       make_noise(NoiseKind::split_dummy, delta,
                                  {{"offset", 0.0}, {"span", double(in.T)}, {"dummy", double(cost->dummy_index())}});
                   in.cost = cost;
                   in.solver.schedule = make_schedule(StepKind::sc_det, {{"mu", mu}});
                   in.solver.averaging = {AvgKind::sc_linear_det};
                   return in;
                 }});

    d.push_back({{"nonsmooth_sc_init_lb",
                  {"T", "mu", "delta"},
                  {},
                  "2T+1",
                  "nonsmooth strongly convex: max(0, x_err[i] + y[i]) + w + (mu/2)|(x_err,y,w)|^2; initial "
                  "perturbation delta/sqrt(T) on each x_err entry",
                  "nonsmooth_sc/init"},
                 [](const ParamMap& p) {
                   Instance in = base("nonsmooth_sc_init_lb", p, "nonsmooth_sc/init");
                   const double mu = positive(p, "mu");
                   in.cost = std::make_shared<PairMaxCost>("nonsmooth_sc_init_lb", in.T, 0.0, mu);
                   in.oracle.kind = OracleKind::inexact_init;
                   in.oracle.init = {InitMode::block, nonneg(p, "delta"), {{"T", double(in.T)}}};
                   in.solver.schedule = make_schedule(StepKind::sc_classic, {{"mu", mu}});
                   in.solver.averaging = {AvgKind::sc_linear};
                   return in;
                 }});

    d.push_back({{"theta_quadratic",
                  {"T", "theta", "epsilon", "delta"},
                  {},
                  "1",
                  "one-dimensional 100 eps (x-theta)^2 on [-1,1] with linear extension; Bernoulli(200 eps) spike "
                  "oracle",
                  "smooth/stochastic"},
                 [](const ParamMap& p) {
                   Instance in = base("theta_quadratic", p, "smooth/stochastic");
                   const double eps = positive(p, "epsilon");
                   if (!(200.0 * eps <= 1.0)) throw InvalidParameter("theta_quadratic needs epsilon <= 1/200");
                   in.cost = std::make_shared<ThetaFamilyCost>(ThetaVariant::interval_quadratic, p.at("theta"), eps);
                   in.oracle.kind = OracleKind::stochastic_inexact;
                   in.oracle.schedule = make_noise(NoiseKind::bernoulli_spike, nonneg(p, "delta"), {{"p", 200.0 * eps}});
                   in.solver.schedule = make_schedule(StepKind::slowed, {{"epsilon", eps}, {"T", double(in.T)}});
                   in.solver.averaging = {AvgKind::uniform};
                   return in;
                 }});

    d.push_back({{"theta_sco",
                  {"T", "theta", "epsilon", "delta"},
                  {},
                  "1",
                  "one-dimensional 200 eps (x^2/2 - theta x) on [1,2] with linear extension; sampled-function "
                  "oracle that is zero with probability 1 - 200 eps",
                  "smooth/stochastic"},
                 [](const ParamMap& p) {
                   Instance in = base("theta_sco", p, "smooth/stochastic");
                   const double eps = positive(p, "epsilon");
                   if (!(200.0 * eps < 1.0)) throw InvalidParameter("theta_sco needs epsilon < 1/200");
                   in.cost = std::make_shared<ThetaFamilyCost>(ThetaVariant::sco, p.at("theta"), eps);
                   in.x_ref = {1.0};
                   in.oracle.kind = OracleKind::global;
                   in.oracle.schedule = make_noise(NoiseKind::none, nonneg(p, "delta"));
                   in.solver.schedule = make_schedule(StepKind::slowed, {{"epsilon", eps}, {"T", double(in.T)}});
                   in.solver.averaging = {AvgKind::uniform};
                   return in;
                 }});

    d.push_back({{"finite_sum_median",
                  {"T", "epsilon", "delta"},
                  {{"m", 7.0}, {"dim", 4.0}, {"D", 1.0}, {"seed", 0.0}},
                  "dim",
                  "average of m scaled L1 distances to random centres (minimiser: coordinate-wise median); "
                  "fixed-direction component noise; ball of radius D",
                  "nonsmooth/nonstochastic"},
                 [](const ParamMap& p) {
                   Instance in = base("finite_sum_median", p, "nonsmooth/nonstochastic");
                   const double eps = positive(p, "epsilon");
                   RngStream rng(RngState(std::uint64_t(nonneg(p, "seed"))).derive("finite_sum_median", 0));
                   auto fs = make_median_finite_sum(as_count(p, "m"), as_count(p, "dim"), rng);
                   fs->set_domain_radius(positive(p, "D"));
                   in.cost = fs;
                   in.oracle.kind = OracleKind::component;
                   in.oracle.schedule = make_noise(NoiseKind::fixed_direction, nonneg(p, "delta"), {{"coordinate", -1.0}});
                   in.solver.schedule = make_schedule(StepKind::slowed, {{"epsilon", eps}, {"T", double(in.T)}});
                   in.solver.averaging = {AvgKind::uniform};
                   return in;
                 }});

    d.push_back({{"random_quadratic",
                  {"T", "mu", "L", "delta"},
                  {{"dim", 8.0}, {"seed", 0.0}},
                  "dim",
                  "random quadratic with spectrum in [mu, L]; initial point perturbed uniformly on the delta-sphere",
                  "smooth_sc/init"},
                 [](const ParamMap& p) {
                   Instance in = base("random_quadratic", p, "smooth_sc/init");
                   const double mu = positive(p, "mu"), L = positive(p, "L");
                   if (mu > L) throw InvalidParameter("random_quadratic needs mu <= L");
                   RngStream rng(RngState(std::uint64_t(nonneg(p, "seed"))).derive("random_quadratic", 0));
                   in.cost = QuadraticCost::random(as_count(p, "dim"), mu, L, rng);
                   in.oracle.kind = OracleKind::inexact_init;
                   in.oracle.init = {InitMode::sphere_uniform, nonneg(p, "delta"), {}};
                   in.solver.schedule = make_schedule(StepKind::inverse_L, {{"L", L}});
                   in.solver.averaging = {AvgKind::last};
                   return in;
                 }});
    return d;
  }();
  return defs;
}

}  // namespace detail

inline std::vector<ScenarioInfo> scenario_catalog() {
  std::vector<ScenarioInfo> out;
  for (const auto& d : detail::scenario_defs()) out.push_back(d.info);
  return out;
}

inline std::vector<std::string> scenario_ids() {
  std::vector<std::string> out;
  for (const auto& d : detail::scenario_defs()) out.push_back(d.info.id);
  return out;
}

inline const ScenarioInfo& scenario_info(const std::string& id) {
  for (const auto& d : detail::scenario_defs())
    if (d.info.id == id) return d.info;
  std::string valid;
  for (const auto& s : scenario_ids()) valid += (valid.empty() ? "" : ", ") + s;
  throw InvalidParameter("unknown scenario '" + id + "' (valid: " + valid + ")");
}

// Every scenario also accepts an optional accuracy target "epsilon".
inline Instance build_instance(const std::string& id, const ParamMap& params,
                               std::size_t max_dimension_budget = kDefaultMaxDimensionBudget) {
  const detail::ScenarioDef* def = nullptr;
  for (const auto& d : detail::scenario_defs())
    if (d.info.id == id) def = &d;
  if (!def) scenario_info(id);  // throws with the list of valid ids

  ParamMap full = def->info.optional;
  for (const auto& [k, v] : params) {
    const bool known = std::find(def->info.required.begin(), def->info.required.end(), k) != def->info.required.end() ||
                       def->info.optional.count(k) || k == "epsilon";
    if (!known) throw InvalidParameter("scenario '" + id + "' does not take param '" + k + "'");
    if (!std::isfinite(v)) throw InvalidParameter("param '" + k + "' must be finite");
    full[k] = v;
  }
  for (const auto& r : def->info.required)
    if (!full.count(r)) throw InvalidParameter("scenario '" + id + "' is missing param '" + r + "'");
  if (full.at("T") > double(max_dimension_budget))
    throw ResourceError("T = " + std::to_string(full.at("T")) + " exceeds the dimension budget " +
                        std::to_string(max_dimension_budget));

  Instance in = def->build(full);
  if (in.cost->dim() > 4 * max_dimension_budget)
    throw ResourceError("dimension " + std::to_string(in.cost->dim()) + " exceeds the budget");
  if (in.x_ref.empty()) in.x_ref.assign(in.cost->dim(), 0.0);
  return in;
}

// Fills schedule params the user left out from the instance (epsilon, T, L, mu, k).
inline StepSchedule resolve_schedule(StepSchedule s, const Instance& in) {
  auto fill = [&](const std::string& key, std::optional<double> v) {
    if (!s.params.count(key) && v) s.params[key] = *v;
  };
  fill("T", double(in.T));
  fill("epsilon", in.epsilon);
  fill("L", in.cost->meta().smoothness_L);
  const double mu = in.cost->meta().strong_convexity_mu;
  if (mu > 0.0) fill("mu", mu);
  return s;
}

}  // namespace reprolab
