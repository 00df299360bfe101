#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reprolab/core.hpp"
#include "reprolab/costs.hpp"
#include "reprolab/rng.hpp"

namespace reprolab {

enum class NoiseKind {
  none,
  gaussian_iid,
  rademacher_coordinate,
  gradient_proportional,
  split_dummy,
  bernoulli_spike,
  fixed_direction,
  custom_adversary
};

inline const std::vector<std::pair<NoiseKind, std::string>>& noise_kind_names() {
  static const std::vector<std::pair<NoiseKind, std::string>> v = {
      {NoiseKind::none, "none"},
      {NoiseKind::gaussian_iid, "gaussian_iid"},
      {NoiseKind::rademacher_coordinate, "rademacher_coordinate"},
      {NoiseKind::gradient_proportional, "gradient_proportional"},
      {NoiseKind::split_dummy, "split_dummy"},
      {NoiseKind::bernoulli_spike, "bernoulli_spike"},
      {NoiseKind::fixed_direction, "fixed_direction"},
      {NoiseKind::custom_adversary, "custom_adversary"}};
  return v;
}

inline std::string to_string(NoiseKind k) {
  for (const auto& [kind, name] : noise_kind_names())
    if (kind == k) return name;
  return "?";
}

inline bool is_stochastic(NoiseKind k) {
  return k == NoiseKind::gaussian_iid || k == NoiseKind::rademacher_coordinate || k == NoiseKind::bernoulli_spike;
}

// The adversary sees the current iterate, the step, and every earlier iterate.
using History = std::vector<Vector>;
using AdversaryFn = std::function<Vector(const Vector& x, std::size_t t, const History& history)>;

// params by kind:
//   rademacher_coordinate  offset (coordinate hit at t=0), span (usable coordinates), fixed_sign (0 random, else +-1)
//   gradient_proportional  source, target, ratio: noise = delta * ratio * (df/dx_source) e_target
//   split_dummy            offset, span, dummy
//   bernoulli_spike        p (spike probability)
//   fixed_direction        coordinate (index; negative means the normalised all-ones direction)
struct NoiseSchedule {
  NoiseKind kind = NoiseKind::none;
  double delta = 0.0;
  std::map<std::string, double> params;
  AdversaryFn adversary;

  double param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
  double required(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw InvalidParameter("noise schedule '" + to_string(kind) + "' needs param '" + key + "'");
    return it->second;
  }
};

enum class InitMode { exact, sphere_uniform, fixed_coordinate, spread, block, tail_truncation };

inline const std::vector<std::pair<InitMode, std::string>>& init_mode_names() {
  static const std::vector<std::pair<InitMode, std::string>> v = {{InitMode::exact, "exact"},
                                                                 {InitMode::sphere_uniform, "sphere_uniform"},
                                                                 {InitMode::fixed_coordinate, "fixed_coordinate"},
                                                                 {InitMode::spread, "spread"},
                                                                 {InitMode::block, "block"},
                                                                 {InitMode::tail_truncation, "tail_truncation"}};
  return v;
}

inline std::string to_string(InitMode m) {
  for (const auto& [mode, name] : init_mode_names())
    if (mode == m) return name;
  return "?";
}

// params: T for spread/block; block_offset and block_size for tail_truncation.
struct InitSchedule {
  InitMode mode = InitMode::exact;
  double delta = 0.0;
  std::map<std::string, double> params;
};

enum class OracleKind { exact, stochastic_inexact, nonstochastic_inexact, inexact_init, component, global };

inline const std::vector<std::pair<OracleKind, std::string>>& oracle_kind_names() {
  static const std::vector<std::pair<OracleKind, std::string>> v = {
      {OracleKind::exact, "exact"},
      {OracleKind::stochastic_inexact, "stochastic_inexact"},
      {OracleKind::nonstochastic_inexact, "nonstochastic_inexact"},
      {OracleKind::inexact_init, "inexact_init"},
      {OracleKind::component, "component"},
      {OracleKind::global, "global"}};
  return v;
}

inline std::string to_string(OracleKind k) {
  for (const auto& [kind, name] : oracle_kind_names())
    if (kind == k) return name;
  return "?";
}

struct OracleSpec {
  OracleKind kind = OracleKind::exact;
  NoiseSchedule schedule;
  InitSchedule init;
};

// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t coordinate_for_step(const NoiseSchedule& s, std::size_t t, std::size_t dim) {
  const auto offset = std::size_t(s.param("offset", 0.0));
  const auto span = std::size_t(s.param("span", double(dim) - 1.0));
  if (t >= span || offset + t >= dim)
    throw ScheduleExhausted("noise schedule '" + to_string(s.kind) + "' exhausted at step " + std::to_string(t) +
                            " (span " + std::to_string(span) + ")");
  return offset + t;
}

inline void check_bound(const Vector& delta_vec, double delta) {
  if (norm(delta_vec) > delta * (1.0 + 1e-12))
    throw ContractViolation("non-stochastic noise of norm " + std::to_string(norm(delta_vec)) + " exceeds delta " +
                            std::to_string(delta));
}

}  // namespace detail

// Adds stochastic noise for step t to g (which holds the exact gradient at x).
inline void add_stochastic_noise(Vector& g, std::size_t t, RngStream& rng, const NoiseSchedule& s) {
  const std::size_t dim = g.size();
  switch (s.kind) {
    case NoiseKind::none:
      return;
    case NoiseKind::gaussian_iid: {
      const double sd = s.delta / std::sqrt(double(dim));
      for (double& v : g) v += sd * rng.normal();
      return;
    }
    case NoiseKind::rademacher_coordinate: {
      const std::size_t j = detail::coordinate_for_step(s, t, dim);
      const double fixed = s.param("fixed_sign", 0.0);
      const double r = fixed != 0.0 ? (fixed > 0 ? 1.0 : -1.0) : rng.rademacher();
      g[j] += s.delta * r;
      return;
    }
    case NoiseKind::bernoulli_spike: {
      const double p = s.required("p");
      if (!(p > 0.0 && p <= 1.0)) throw InvalidParameter("bernoulli_spike needs 0 < p <= 1");
      const double sd = s.delta / std::sqrt(2.0 * p * double(dim));
      const bool hit = rng.bernoulli(p);
      for (double& v : g) {
        const double z = sd * rng.normal();
        v = hit ? v / p + z : 0.0;
      }
      return;
    }
    default:
      throw InvalidParameter("noise kind '" + to_string(s.kind) + "' is not stochastic");
  }
}

inline Vector stochastic_gradient(const Cost& cost, const Vector& x, std::size_t t, const RngState& rng,
                                  const NoiseSchedule& s) {
  Vector g = cost.subgradient(x);
  RngStream stream(rng.derive("grad", std::int64_t(t)));
  add_stochastic_noise(g, t, stream, s);
  return g;
}

// The deterministic perturbation Delta_t (not yet added to the gradient).
inline Vector nonstochastic_noise(const Vector& x, std::size_t t, const NoiseSchedule& s, const Vector& exact_grad, const History& history) {
  const std::size_t dim = x.size();
  Vector d(dim, 0.0);
  switch (s.kind) {
    case NoiseKind::none:
      return d;
    case NoiseKind::gradient_proportional: {
      const auto src = std::size_t(s.required("source"));
      const auto tgt = std::size_t(s.param("target", 0.0));
      if (src >= dim || tgt >= dim) throw InvalidParameter("gradient_proportional coordinates out of range");
      d[tgt] = s.delta * s.param("ratio", 1.0) * exact_grad[src];
      break;
    }
    case NoiseKind::split_dummy: {
      const std::size_t j = detail::coordinate_for_step(s, t, dim);
      const auto dummy = std::size_t(s.param("dummy", double(dim) - 1.0));
      if (dummy >= dim) throw InvalidParameter("split_dummy dummy coordinate out of range");
      const double a = s.delta / std::sqrt(2.0);
      d[j] += a;
      d[dummy] += a;
      break;
    }
    case NoiseKind::fixed_direction: {
      const double c = s.param("coordinate", -1.0);
      if (c >= 0.0) {
        if (std::size_t(c) >= dim) throw InvalidParameter("fixed_direction coordinate out of range");
        d[std::size_t(c)] = s.delta;
      } else {
        const double a = s.delta / std::sqrt(double(dim));
        for (double& v : d) v = a;
      }
      break;
    }
    case NoiseKind::custom_adversary: {
      if (!s.adversary) throw InvalidParameter("custom_adversary without a callback");
      d = s.adversary(x, t, history);
      if (d.size() != dim) throw ContractViolation("adversary returned a vector of the wrong dimension");
      break;
    }
    default:
      throw InvalidParameter("noise kind '" + to_string(s.kind) + "' is stochastic");
  }
  detail::check_bound(d, s.delta);
  return d;
}

inline Vector nonstochastic_gradient(const Cost& cost, const Vector& x_t, std::size_t t, const NoiseSchedule& s,
                                     const History& history = {}) {
  Vector g = cost.subgradient(x_t);
  const Vector d = nonstochastic_noise(x_t, t, s, g, history);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += d[i];
  return g;
}

inline Vector component_gradient(const FiniteSum& fs, std::size_t i, const Vector& x, const NoiseSchedule& s,
                                 std::size_t t = 0, const History& history = {}) {
  if (i >= fs.m()) throw InvalidInput("component index " + std::to_string(i) + " out of range");
  return nonstochastic_gradient(fs.component(i), x, t, s, history);
}

// Perturbed initial point with |x0 - x_ref| <= delta.
inline Vector inexact_init(const Vector& x_ref, const InitSchedule& s, RngStream& rng) {
  Vector x = x_ref;
  const std::size_t dim = x.size();
  const double d = s.delta;
  if (d == 0.0) return x;
  auto need_T = [&] {
    auto it = s.params.find("T");
    if (it == s.params.end()) throw InvalidParameter("init mode '" + to_string(s.mode) + "' needs param T");
    return std::size_t(it->second);
  };
  switch (s.mode) {
    case InitMode::exact:
      return x;
    case InitMode::sphere_uniform: {
      Vector u(dim);
      for (double& v : u) v = rng.normal();
      const double n = norm(u);
      for (std::size_t i = 0; i < dim; ++i) x[i] += d * u[i] / n;
      return x;
    }
    case InitMode::fixed_coordinate:
      x.at(0) += d;
      return x;
    case InitMode::spread: {
      const std::size_t T = need_T();
      if (T >= dim) throw InvalidParameter("spread init needs dim > T");
      for (std::size_t i = 0; i < T; ++i) x[i] += d / std::sqrt(2.0 * double(T));
      x[dim - 1] += d / std::sqrt(2.0);
      return x;
    }
    case InitMode::block: {
      const std::size_t T = need_T();
      if (T > dim) throw InvalidParameter("block init needs dim >= T");
      for (std::size_t i = 0; i < T; ++i) x[i] += d / std::sqrt(double(T));
      return x;
    }
    case InitMode::tail_truncation: {
      // Zero the longest tail of the block whose norm stays within delta.
      const auto off = std::size_t(s.params.at("block_offset"));
      const auto n = std::size_t(s.params.at("block_size"));
      std::size_t keep = n;
      double tail = 0.0;
      while (keep > 0) {
        const double next = tail + x[off + keep - 1] * x[off + keep - 1];
        if (std::sqrt(next) > d) break;
        tail = next;
        --keep;
      }
      for (std::size_t i = keep; i < n; ++i) x[off + i] = 0.0;
      return x;
    }
  }
  return x;
}

inline Vector inexact_init(const Vector& x_ref, const InitSchedule& s, const RngState& rng) {
  RngStream stream(rng.derive("init", 0));
  return inexact_init(x_ref, s, stream);
}

// ---------------------------------------------------------------------------
// Stochastic global oracle over the sco family.

struct SampledFunction {
  bool spike = false;
  double inv_p = 0.0;  // 1/(200 eps)
  double z = 0.0;
  std::shared_ptr<const ThetaFamilyCost> family;

  // f(x, xi) = inv_p * F_theta(x) + z x on a spike, 0 otherwise.
  double value(double x) const { return spike ? inv_p * family->value({x}) + z * x : 0.0; }
  double gradient(double x) const { return spike ? inv_p * family->derivative(x) + z : 0.0; }
  // theta - z, the quantity a single spike-branch gradient reveals.
  double shifted_theta() const { return family->theta() - z; }
};

inline SampledFunction global_sample(const std::shared_ptr<const ThetaFamilyCost>& family, double delta,
                                     RngStream& rng) {
  if (family->variant() != ThetaVariant::sco) throw InvalidParameter("global_sample needs the sco family");
  const double p = 200.0 * family->eps();
  if (!(p < 1.0)) throw InvalidParameter("global_sample needs epsilon < 1/200");
  SampledFunction s;
  s.family = family;
  s.inv_p = 1.0 / p;
  s.spike = rng.bernoulli(p);
  const double z = delta / std::sqrt(2.0 * p) * rng.normal();
  if (s.spike) s.z = z;
  return s;
}

}  // namespace reprolab
