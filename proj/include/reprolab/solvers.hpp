#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reprolab/core.hpp"
#include "reprolab/costs.hpp"
#include "reprolab/oracles.hpp"
#include "reprolab/rng.hpp"

namespace reprolab {

enum class StepKind { constant, slowed, smooth_sc, sc_classic, sc_det, inverse_L };

inline const std::vector<std::pair<StepKind, std::string>>& step_kind_names() {
  static const std::vector<std::pair<StepKind, std::string>> v = {
      {StepKind::constant, "constant"}, {StepKind::slowed, "slowed"},   {StepKind::smooth_sc, "smooth_sc"},
      {StepKind::sc_classic, "sc_classic"}, {StepKind::sc_det, "sc_det"}, {StepKind::inverse_L, "inverse_L"}};
  return v;
}

inline std::string to_string(StepKind k) {
  for (const auto& [kind, name] : step_kind_names())
    if (kind == k) return name;
  return "?";
}

// params: eta (constant), epsilon and T (slowed), L and mu (smooth_sc, k optional), mu (sc_*), L (inverse_L).
struct StepSchedule {
  StepKind kind = StepKind::constant;
  std::map<std::string, double> params;

  double need(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw InvalidParameter("step schedule '" + to_string(kind) + "' needs param '" + key + "'");
    return it->second;
  }
};

// Smallest integer k with k >= 4L/mu.
inline double default_shift_k(double L, double mu) { return std::ceil(4.0 * L / mu); }

inline double eta_at(const StepSchedule& s, std::size_t t) {
  const double tt = double(t);
  double eta = 0.0;
  switch (s.kind) {
    case StepKind::constant:
      eta = s.need("eta");
      break;
    case StepKind::slowed:
      eta = 1.0 / (s.need("epsilon") * s.need("T"));
      break;
    case StepKind::smooth_sc: {
      const double L = s.need("L"), mu = s.need("mu");
      auto it = s.params.find("k");
      const double k = it == s.params.end() ? default_shift_k(L, mu) : it->second;
      if (k < 4.0 * L / mu) throw InvalidParameter("smooth_sc needs k >= 4L/mu");
      const double lambda = 2.0 / ((tt + k) * mu - 2.0 * L);
      eta = 1.0 / (L + 1.0 / lambda);
      break;
    }
    case StepKind::sc_classic:
      eta = 2.0 / (s.need("mu") * (tt + 1.0));
      break;
    case StepKind::sc_det:
      eta = 1.0 / (s.need("mu") * (tt + 1.0));
      break;
    case StepKind::inverse_L:
      eta = 1.0 / s.need("L");
      break;
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidParameter("step size must be positive and finite");
  return eta;
}

enum class AvgKind { last, uniform, shifted_linear, sc_linear, sc_linear_det };

inline const std::vector<std::pair<AvgKind, std::string>>& avg_kind_names() {
  static const std::vector<std::pair<AvgKind, std::string>> v = {{AvgKind::last, "last"},
                                                                {AvgKind::uniform, "uniform"},
                                                                {AvgKind::shifted_linear, "shifted_linear"},
                                                                {AvgKind::sc_linear, "sc_linear"},
                                                                {AvgKind::sc_linear_det, "sc_linear_det"}};
  return v;
}

inline std::string to_string(AvgKind k) {
  for (const auto& [kind, name] : avg_kind_names())
    if (kind == k) return name;
  return "?";
}

struct AveragingScheme {
  AvgKind kind = AvgKind::last;
  double k = 0.0;  // shift for shifted_linear
};

// Weight of x_t (t = 0..T) in the output. Only sc_linear_det puts mass on x_0.
inline double averaging_weight(const AveragingScheme& a, std::size_t T, std::size_t t) {
  const double TT = double(T), tt = double(t);
  switch (a.kind) {
    case AvgKind::last:
      return t == T ? 1.0 : 0.0;
    case AvgKind::uniform:
      return t == 0 ? 0.0 : 1.0 / TT;
    case AvgKind::shifted_linear: {
      if (t == 0) return 0.0;
      const double total = TT * (TT + 1.0) / 2.0 + TT * (a.k - 2.0);
      return (tt + a.k - 2.0) / total;
    }
    case AvgKind::sc_linear:
      return t == 0 ? 0.0 : 2.0 * tt / (TT * (TT + 1.0));
    case AvgKind::sc_linear_det:
      return 2.0 * (tt + 1.0) / ((TT + 1.0) * (TT + 2.0));
  }
  return 0.0;
}

// Streaming weighted average; accumulation order is the iterate order.
class Averager {
 public:
  Averager(const AveragingScheme& a, std::size_t T, std::size_t dim) : a_(a), T_(T), acc_(dim, 0.0) {
    if (a.kind == AvgKind::shifted_linear && !(a.k >= 2.0))
      throw InvalidParameter("shifted_linear averaging needs k >= 2");
  }
  void add(std::size_t t, const Vector& x) {
    if (a_.kind == AvgKind::last) {
      if (t == T_) acc_ = x;
      return;
    }
    const double w = averaging_weight(a_, T_, t);
    if (w == 0.0) return;
    for (std::size_t i = 0; i < acc_.size(); ++i) acc_[i] += w * x[i];
  }
  const Vector& result() const { return acc_; }

 private:
  AveragingScheme a_;
  std::size_t T_;
  Vector acc_;
};

// Averages the points the scheme ranges over: x_1..x_n for uniform,
// shifted_linear and sc_linear; x_0..x_{n-1} for sc_linear_det.
inline Vector average_iterates(const std::vector<Vector>& traj, const AveragingScheme& a) {
  if (traj.empty()) throw InvalidInput("average_iterates: empty trajectory");
  if (a.kind == AvgKind::last) return traj.back();
  const std::size_t n = traj.size();
  const bool from_zero = a.kind == AvgKind::sc_linear_det;
  const std::size_t T = from_zero ? n - 1 : n;
  Averager avg(a, T, traj.front().size());
  for (std::size_t i = 0; i < n; ++i) avg.add(from_zero ? i : i + 1, traj[i]);
  return avg.result();
}

// lambda[t-1] holds lambda_i^{(t)} for i = 0..t-1, t = 1..T.
struct CoefficientMatrix {
  std::vector<std::vector<double>> lambda;

  std::size_t T() const { return lambda.size(); }

  static CoefficientMatrix constant_step(std::size_t T, double eta) {
    CoefficientMatrix c;
    for (std::size_t t = 1; t <= T; ++t) c.lambda.emplace_back(t, eta);
    return c;
  }

  void validate() const {
    for (std::size_t t = 1; t <= lambda.size(); ++t)
      if (lambda[t - 1].size() != t)
        throw InvalidInput("coefficient row " + std::to_string(t) + " must have " + std::to_string(t) + " entries");
  }

  bool nonzero_latest() const {
    for (const auto& row : lambda)
      if (row.back() == 0.0) return false;
    return true;
  }

  // |lambda_0^{(T)}| / |sum_{t>=1} lambda_t^{(T)}|; infinity when the tail sums to zero.
  double first_to_rest_ratio() const {
    if (lambda.empty()) return 0.0;
    const auto& row = lambda.back();
    double rest = 0.0;
    for (std::size_t i = 1; i < row.size(); ++i) rest += row[i];
    return rest == 0.0 ? INFINITY : std::fabs(row[0]) / std::fabs(rest);
  }
};

struct RunOptions {
  std::size_t batch_size = 1;
  std::optional<double> project_radius;
  bool keep_trajectory = false;
};

struct RunResult {
  Vector output;
  std::vector<Vector> trajectory;  // x_0..x_T when requested
  std::vector<Vector> queried;     // oracle outputs g_0..g_{T-1} (general FOI only)
  std::optional<double> suboptimality;
  std::uint64_t oracle_calls = 0;
  std::string seed_path;
  std::vector<std::string> warnings;
};

inline Vector gd_step(const Vector& x, const Vector& g, double eta, std::optional<double> D = std::nullopt) {
  require_same_dim(x, g, "gd_step");
  if (!(eta > 0.0)) throw InvalidParameter("gd_step: eta must be positive");
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - eta * g[i];
  if (D) project_ball_inplace(out, *D);
  return out;
}

// Per-run oracle state: counts calls and keeps the iterate history when an
// adversary needs it.
class GradientOracle {
 public:
  GradientOracle(const Cost& cost, const OracleSpec& spec, const RngState& rng)
      : cost_(cost), spec_(spec), rng_(rng) {
    if (spec.kind == OracleKind::component) {
      fs_ = dynamic_cast<const FiniteSum*>(&cost);
      if (!fs_) throw InvalidParameter("component oracle needs a finite-sum cost");
    }
    if (spec.kind == OracleKind::global) {
      sco_ = dynamic_cast<const ThetaFamilyCost*>(&cost);
      if (!sco_ || sco_->variant() != ThetaVariant::sco) throw InvalidParameter("global oracle needs the sco family");
      sco_shared_ = std::make_shared<ThetaFamilyCost>(ThetaVariant::sco, sco_->theta(), sco_->eps());
    }
    if (spec.kind == OracleKind::stochastic_inexact && !is_stochastic(spec.schedule.kind) &&
        spec.schedule.kind != NoiseKind::none)
      throw InvalidParameter("stochastic oracle with non-stochastic noise '" + to_string(spec.schedule.kind) + "'");
    if ((spec.kind == OracleKind::nonstochastic_inexact || spec.kind == OracleKind::component) &&
        is_stochastic(spec.schedule.kind))
      throw InvalidParameter("non-stochastic oracle with stochastic noise '" + to_string(spec.schedule.kind) + "'");
    track_history_ = spec.schedule.kind == NoiseKind::custom_adversary;
  }

  // Averaged oracle output over `batch` draws at x for step t.
  void query(const Vector& x, std::size_t t, std::size_t batch, Vector& g) {
    if (track_history_) history_.push_back(x);
    const std::size_t dim = x.size();
    if (batch == 1) {
      draw(x, t, 0, g);
    } else {
      g.assign(dim, 0.0);
      for (std::size_t b = 0; b < batch; ++b) {
        draw(x, t, b, scratch_);
        for (std::size_t i = 0; i < dim; ++i) g[i] += scratch_[i];
      }
      for (double& v : g) v /= double(batch);
    }
  }

  std::uint64_t calls() const { return calls_; }

 private:
  void draw(const Vector& x, std::size_t t, std::size_t b, Vector& g) {
    ++calls_;
    auto stream_for = [&](const char* label) {
      RngState st = rng_.derive(label, std::int64_t(t));
      return RngStream(b == 0 ? st : st.derive("draw", std::int64_t(b)));
    };
    switch (spec_.kind) {
      case OracleKind::exact:
      case OracleKind::inexact_init:
        cost_.subgradient(x, g);
        return;
      case OracleKind::stochastic_inexact: {
        cost_.subgradient(x, g);
        RngStream s = stream_for("grad");
        add_stochastic_noise(g, t, s, spec_.schedule);
        return;
      }
      case OracleKind::nonstochastic_inexact: {
        cost_.subgradient(x, g);
        const Vector d = nonstochastic_noise(x, t, spec_.schedule, g, history_);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += d[i];
        return;
      }
      case OracleKind::component: {
        RngStream s = stream_for("sample");
        const std::size_t i = std::size_t(s.below(fs_->m()));
        fs_->component(i).subgradient(x, g);
        const Vector d = nonstochastic_noise(x, t, spec_.schedule, g, history_);
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += d[k];
        return;
      }
      case OracleKind::global: {
        RngStream s = stream_for("sample");
        const SampledFunction f = global_sample(sco_shared_, spec_.schedule.delta, s);
        g.assign(1, f.gradient(x[0]));
        return;
      }
    }
  }

  const Cost& cost_;
  const OracleSpec& spec_;
  RngState rng_;
  const FiniteSum* fs_ = nullptr;
  const ThetaFamilyCost* sco_ = nullptr;
  std::shared_ptr<const ThetaFamilyCost> sco_shared_;
  bool track_history_ = false;
  History history_;
  Vector scratch_;
  std::uint64_t calls_ = 0;
};

inline void finalize(const Cost& cost, RunResult& r) {
  if (!all_finite(r.output)) throw NumericError("run produced a non-finite output");
  if (cost.optimum()) r.suboptimality = cost.suboptimality(r.output);
}

// x_{t+1} = P_D[x_t - eta_t g(x_t)], t < T, output averaged per `avg`.
inline RunResult run_foi(const Cost& cost, const OracleSpec& oracle, const Vector& init, const StepSchedule& schedule,
                         const AveragingScheme& avg, std::size_t T, const RunOptions& opt, const RngState& rng) {
  if (T < 1) throw InvalidParameter("run_foi needs T >= 1");
  if (init.size() != cost.dim()) throw InvalidInput("initial point has the wrong dimension");
  if (opt.batch_size < 1) throw InvalidParameter("batch_size must be >= 1");
  GradientOracle orc(cost, oracle, rng);
  RunResult r;
  r.seed_path = rng.path_string();
  Vector x = init, g;
  if (opt.project_radius) project_ball_inplace(x, *opt.project_radius);
  Averager averager(avg, T, x.size());
  averager.add(0, x);
  if (opt.keep_trajectory) r.trajectory.push_back(x);
  for (std::size_t t = 0; t < T; ++t) {
    orc.query(x, t, opt.batch_size, g);
    const double eta = eta_at(schedule, t);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= eta * g[i];
    if (opt.project_radius) project_ball_inplace(x, *opt.project_radius);
    if (!all_finite(x)) throw NumericError("iterate became non-finite at step " + std::to_string(t + 1));
    averager.add(t + 1, x);
    if (opt.keep_trajectory) r.trajectory.push_back(x);
  }
  r.output = averager.result();
  r.oracle_calls = orc.calls();
  finalize(cost, r);
  return r;
}

// x_t = x_0 - sum_{i<t} lambda_i^{(t)} g(x_i), accumulated left to right.
inline RunResult run_general_foi(const Cost& cost, const OracleSpec& oracle, const Vector& init,
                                 const CoefficientMatrix& coeffs, const RngState& rng) {
  coeffs.validate();
  const std::size_t T = coeffs.T();
  if (T < 1) throw InvalidParameter("run_general_foi needs T >= 1");
  if (init.size() != cost.dim()) throw InvalidInput("initial point has the wrong dimension");
  GradientOracle orc(cost, oracle, rng);
  RunResult r;
  r.seed_path = rng.path_string();
  if (!coeffs.nonzero_latest())
    r.warnings.push_back("coefficient matrix has a zero latest coefficient; lower-bound lemmas do not apply");
  r.trajectory.push_back(init);
  for (std::size_t t = 1; t <= T; ++t) {
    Vector g;
    orc.query(r.trajectory[t - 1], t - 1, 1, g);
    r.queried.push_back(std::move(g));
    Vector x = init;
    const auto& row = coeffs.lambda[t - 1];
    for (std::size_t i = 0; i < t; ++i) {
      const double l = row[i];
      const Vector& gi = r.queried[i];
      for (std::size_t k = 0; k < x.size(); ++k) x[k] -= l * gi[k];
    }
    if (!all_finite(x)) throw NumericError("iterate became non-finite at step " + std::to_string(t));
    r.trajectory.push_back(std::move(x));
  }
  r.output = r.trajectory.back();
  r.oracle_calls = orc.calls();
  finalize(cost, r);
  return r;
}

}  // namespace reprolab
