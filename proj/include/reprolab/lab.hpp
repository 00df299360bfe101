#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "reprolab/core.hpp"
#include "reprolab/costs.hpp"
#include "reprolab/oracles.hpp"
#include "reprolab/rng.hpp"
#include "reprolab/scenarios.hpp"
#include "reprolab/solvers.hpp"

namespace reprolab {

enum class Pairing { independent, exact_vs_adversary, init_pair };

inline const std::vector<std::pair<Pairing, std::string>>& pairing_names() {
  static const std::vector<std::pair<Pairing, std::string>> v = {{Pairing::independent, "independent"},
                                                                 {Pairing::exact_vs_adversary, "exact_vs_adversary"},
                                                                 {Pairing::init_pair, "init_pair"}};
  return v;
}

inline std::string to_string(Pairing p) {
  for (const auto& [k, n] : pairing_names())
    if (k == p) return n;
  return "?";
}

inline Pairing parse_pairing(const std::string& s) {
  for (const auto& [k, n] : pairing_names())
    if (n == s) return k;
  throw InvalidParameter("unknown pairing '" + s + "' (valid: independent, exact_vs_adversary, init_pair)");
}

struct DeviationEstimate {
  double mean_sq_dev = 0.0;
  double stderr_ = 0.0;
  std::size_t trials = 0;
  Pairing pairing = Pairing::independent;
  std::size_t adversary_search_n = 0;
};

struct AccuracyEstimate {
  double mean_subopt = 0.0;
  double max_subopt = 0.0;
  std::size_t runs = 0;
};

struct LabOptions {
  std::size_t threads = 1;
  std::size_t adversary_search_n = 16;
  const std::atomic<bool>* cancel = nullptr;
};

// Thrown when the cancel flag is raised mid-measurement.
struct Cancelled : Error {
  Cancelled() : Error("cancelled") {}
};

namespace detail {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must go to
// per-index slots; the error reported is the one with the lowest index.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn,
                         const std::atomic<bool>* cancel = nullptr) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      if (cancel && cancel->load()) return;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t k = std::max<std::size_t>(1, std::min(threads, n));
  if (k == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < k; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  if (cancel && cancel->load()) throw Cancelled();
}

inline RunOptions run_options(const Instance& in) {
  RunOptions o;
  o.batch_size = in.solver.batch_size;
  if (in.solver.project) o.project_radius = in.cost->meta().domain_radius_D;
  return o;
}

// Starting point for one run: the perturbed init for init oracles, else x_ref.
inline Vector start_point(const Instance& in, const OracleSpec& oracle, const RngState& rng) {
  if (oracle.kind == OracleKind::inexact_init) return inexact_init(in.x_ref, oracle.init, rng);
  return in.x_ref;
}

inline RunResult run_once(const Instance& in, const OracleSpec& oracle, const Vector& init, const RngState& rng) {
  const StepSchedule s = resolve_schedule(in.solver.schedule, in);
  return run_foi(*in.cost, oracle, init, s, in.solver.averaging, in.T, run_options(in), rng);
}

// Random bounded schedules used to approximate the sup over adversaries.
// Even j: one fixed dense direction; odd j: a random signed coordinate per step.
inline NoiseSchedule random_adversary(const RngState& base, std::size_t j, double delta, std::size_t dim) {
  NoiseSchedule s;
  s.kind = NoiseKind::custom_adversary;
  s.delta = delta;
  const RngState st = base.derive("adversary", std::int64_t(j));
  if (j % 2 == 0) {
    RngStream r(st);
    Vector dir(dim);
    for (double& v : dir) v = r.normal();
    const double n = norm(dir);
    for (double& v : dir) v *= delta / n;
    s.adversary = [dir](const Vector&, std::size_t, const History&) { return dir; };
  } else {
    s.adversary = [st, delta, dim](const Vector&, std::size_t t, const History&) {
      RngStream r(st.derive("step", std::int64_t(t)));
      Vector d(dim, 0.0);
      d[std::size_t(r.below(dim))] = delta * r.rademacher();
      return d;
    };
  }
  return s;
}

struct TrialOutcome {
  double dev = 0.0;
  std::vector<double> subopts;
  std::uint64_t calls = 0;
};

inline void collect(TrialOutcome& o, const RunResult& r) {
  o.calls += r.oracle_calls;
  if (r.suboptimality) o.subopts.push_back(*r.suboptimality);
}

inline void check_pairing(const Instance& in, Pairing p, std::size_t trials, std::size_t adversary_n) {
  const OracleKind k = in.oracle.kind;
  switch (p) {
    case Pairing::independent:
      if (trials < 2) throw InvalidParameter("independent pairing needs trials >= 2");
      return;
    case Pairing::exact_vs_adversary:
      if (k != OracleKind::nonstochastic_inexact)
        throw InvalidParameter("exact_vs_adversary pairing needs a non-stochastic oracle, got '" + to_string(k) + "'");
      if (adversary_n < 1 && in.oracle.schedule.kind == NoiseKind::none)
        throw InvalidParameter("exact_vs_adversary pairing needs adversary_search_n >= 1");
      return;
    case Pairing::init_pair:
      if (k != OracleKind::inexact_init)
        throw InvalidParameter("init_pair pairing needs an inexact-init oracle, got '" + to_string(k) + "'");
      if (trials < 1) throw InvalidParameter("init_pair pairing needs trials >= 1");
      return;
  }
}

}  // namespace detail


struct InsufficientData : Error {
  using Error::Error;
};

// Deviation and accuracy taken from the same set of runs.
struct RowMeasurement {
  DeviationEstimate deviation;
  std::optional<AccuracyEstimate> accuracy;  // nullopt when the optimum is unknown
  std::uint64_t oracle_calls = 0;
};

// independent: trial k runs twice, seeds trial.derive("run", 0|1).
// exact_vs_adversary: exact run vs the scenario's adversary and N random
//   schedules, max reported (a lower estimate of the sup). The random
//   schedules depend only on `adversary_base`, so every row faces the same ones.
// init_pair: run from x_ref vs run from the perturbed init; the gradient
//   oracle shares one seed. Accuracy is taken from the perturbed runs.
inline RowMeasurement measure_row(const Instance& in, std::size_t trials, Pairing pairing, const RngState& row_rng,
                                  const RngState& adversary_base, const LabOptions& opt = {}) {
  detail::check_pairing(in, pairing, trials, opt.adversary_search_n);
  RowMeasurement m;
  m.deviation.pairing = pairing;
  std::vector<double> subopts;

  if (pairing == Pairing::exact_vs_adversary) {
    const std::size_t n = opt.adversary_search_n + 2;  // exact, scenario adversary, random ones
    std::vector<RunResult> runs(n);
    const RngState run_rng = row_rng.derive("trial", 0).derive("run", 0);
    detail::parallel_for(
        n, opt.threads,
        [&](std::size_t i) {
          OracleSpec o = in.oracle;
          if (i == 0) {
            o.kind = OracleKind::exact;
            o.schedule = {};
          } else if (i >= 2) {
            o.schedule = detail::random_adversary(adversary_base, i - 2, in.oracle.schedule.delta, in.cost->dim());
          }
          runs[i] = detail::run_once(in, o, in.x_ref, run_rng);
        },
        opt.cancel);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      m.oracle_calls += runs[i].oracle_calls;
      if (i == 0) continue;
      worst = std::max(worst, dist_sq(runs[i].output, runs[0].output));
      if (runs[i].suboptimality) subopts.push_back(*runs[i].suboptimality);
    }
    m.deviation.mean_sq_dev = worst;
    m.deviation.trials = 1;
    m.deviation.adversary_search_n = opt.adversary_search_n;
  } else {
    std::vector<detail::TrialOutcome> out(trials);
    detail::parallel_for(
        trials, opt.threads,
        [&](std::size_t k) {
          const RngState tr = row_rng.derive("trial", std::int64_t(k));
          const RngState r0 = tr.derive("run", 0), r1 = tr.derive("run", 1);
          if (pairing == Pairing::independent) {
            const RunResult a = detail::run_once(in, in.oracle, detail::start_point(in, in.oracle, r0), r0);
            const RunResult b = detail::run_once(in, in.oracle, detail::start_point(in, in.oracle, r1), r1);
            out[k].dev = dist_sq(a.output, b.output);
            detail::collect(out[k], a);
            detail::collect(out[k], b);
          } else {
            const RunResult a = detail::run_once(in, in.oracle, in.x_ref, r0);
            const RunResult b = detail::run_once(in, in.oracle, inexact_init(in.x_ref, in.oracle.init, r1), r0);
            out[k].dev = dist_sq(a.output, b.output);
            out[k].calls += a.oracle_calls;
            detail::collect(out[k], b);
          }
        },
        opt.cancel);
    double sum = 0.0;
    for (const auto& o : out) sum += o.dev;
    const double mean = sum / double(trials);
    double ss = 0.0;
    for (const auto& o : out) ss += (o.dev - mean) * (o.dev - mean);
    m.deviation.mean_sq_dev = mean;
    m.deviation.stderr_ = trials > 1 ? std::sqrt(ss / double(trials - 1) / double(trials)) : 0.0;
    m.deviation.trials = trials;
    for (const auto& o : out) {
      m.oracle_calls += o.calls;
      subopts.insert(subopts.end(), o.subopts.begin(), o.subopts.end());
    }
  }

  if (!subopts.empty()) {
    AccuracyEstimate a;
    double s = 0.0;
    for (double v : subopts) {
      s += v;
      a.max_subopt = std::max(a.max_subopt, v);
    }
    a.mean_subopt = s / double(subopts.size());
    a.runs = subopts.size();
    m.accuracy = a;
  }
  return m;
}

// Same seeds as row 0 of a sweep with this master seed.
inline DeviationEstimate measure_deviation(const Instance& in, std::size_t trials, Pairing pairing,
                                           std::uint64_t master_seed, const LabOptions& opt = {}) {
  const RngState master(master_seed);
  return measure_row(in, trials, pairing, master.derive("row", 0), master, opt).deviation;
}

// Runs that use the first seed of each trial (run 0), from the oracle's init.
inline AccuracyEstimate measure_accuracy(const Instance& in, std::size_t trials, std::uint64_t master_seed,
                                         const LabOptions& opt = {}) {
  if (!in.cost->optimum()) throw Unsupported("scenario '" + in.scenario + "' has no known optimum");
  if (trials < 1) throw InvalidParameter("measure_accuracy needs trials >= 1");
  const RngState row = RngState(master_seed).derive("row", 0);
  std::vector<double> sub(trials);
  detail::parallel_for(
      trials, opt.threads,
      [&](std::size_t k) {
        const RngState r0 = row.derive("trial", std::int64_t(k)).derive("run", 0);
        sub[k] = *detail::run_once(in, in.oracle, detail::start_point(in, in.oracle, r0), r0).suboptimality;
      },
      opt.cancel);
  AccuracyEstimate a;
  double s = 0.0;
  for (double v : sub) {
    s += v;
    a.max_subopt = std::max(a.max_subopt, v);
  }
  a.mean_subopt = s / double(trials);
  a.runs = trials;
  return a;
}

// ---------------------------------------------------------------------------
// Sweeps.

inline const std::vector<std::string>& grid_axes() {
  static const std::vector<std::string> v = {"T", "epsilon", "delta", "mu"};
  return v;
}

struct SweepRow {
  ParamMap params;
  DeviationEstimate deviation;
  std::optional<AccuracyEstimate> accuracy;
  bool accuracy_failed = false;
  std::uint64_t oracle_calls = 0;
  double wallclock_s = 0.0;

  std::optional<double> param(const std::string& k) const {
    auto it = params.find(k);
    if (it == params.end()) return std::nullopt;
    return it->second;
  }
};

struct SweepTable {
  std::string scenario;
  std::string cell;
  std::vector<std::string> axes;  // grid axes in canonical order
  std::vector<SweepRow> rows;
  bool truncated = false;
  std::string truncation_reason;
};

struct SweepSpec {
  ParamMap base;
  std::map<std::string, std::vector<double>> grid;  // empty grid: one row from `base`
  std::size_t trials = 64;
  Pairing pairing = Pairing::independent;
  std::uint64_t master_seed = 0;
  double accuracy_tolerance = 0.0;
  double budget_seconds = 0.0;  // 0: unlimited
};

using InstanceFactory = std::function<Instance(const ParamMap&)>;

// Cartesian product of the deduplicated, ascending grid values; the first
// canonical axis varies slowest.
inline std::vector<ParamMap> expand_grid(const ParamMap& base, const std::map<std::string, std::vector<double>>& grid,
                                         std::vector<std::string>* axes_out = nullptr) {
  for (const auto& [axis, values] : grid) {
    if (std::find(grid_axes().begin(), grid_axes().end(), axis) == grid_axes().end())
      throw InvalidParameter("grid axis '" + axis + "' is not one of T, epsilon, delta, mu");
    if (values.empty()) throw InvalidParameter("grid axis '" + axis + "' has no values");
  }
  std::vector<std::string> axes;
  std::vector<std::vector<double>> vals;
  for (const auto& a : grid_axes()) {
    auto it = grid.find(a);
    if (it == grid.end()) continue;
    std::vector<double> v = it->second;
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    axes.push_back(a);
    vals.push_back(std::move(v));
  }
  std::vector<ParamMap> rows{base};
  for (std::size_t a = 0; a < axes.size(); ++a) {
    std::vector<ParamMap> next;
    for (const auto& r : rows)
      for (double v : vals[a]) {
        ParamMap p = r;
        p[axes[a]] = v;
        next.push_back(std::move(p));
      }
    rows = std::move(next);
  }
  if (axes_out) *axes_out = axes;
  return rows;
}

// Row r is seeded by master.derive("row", r). A raised cancel flag or an
// exhausted budget stops the sweep and marks the table truncated.
inline SweepTable sweep(const InstanceFactory& make, const SweepSpec& spec, const LabOptions& opt = {},
                        bool record_wallclock = true) {
  SweepTable table;
  const std::vector<ParamMap> rows = expand_grid(spec.base, spec.grid, &table.axes);
  const RngState master(spec.master_seed);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (opt.cancel && opt.cancel->load()) {
      table.truncated = true;
      table.truncation_reason = "interrupted";
      break;
    }
    if (spec.budget_seconds > 0.0 && elapsed() > spec.budget_seconds) {
      table.truncated = true;
      table.truncation_reason = "time budget exhausted";
      break;
    }
    const Instance in = make(rows[r]);
    if (r == 0) {
      table.scenario = in.scenario;
      table.cell = in.cell;
    }
    const auto t0 = std::chrono::steady_clock::now();
    RowMeasurement m;
    try {
      m = measure_row(in, spec.trials, spec.pairing, master.derive("row", std::int64_t(r)), master, opt);
    } catch (const Cancelled&) {
      table.truncated = true;
      table.truncation_reason = "interrupted";
      break;
    }
    SweepRow row;
    row.params = in.params;
    row.deviation = m.deviation;
    row.accuracy = m.accuracy;
    row.oracle_calls = m.oracle_calls;
    if (record_wallclock)
      row.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (in.epsilon && m.accuracy)
      row.accuracy_failed = m.accuracy->mean_subopt > *in.epsilon * (1.0 + spec.accuracy_tolerance);
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Log-log fits.

struct ScalingFit {
  std::string axis;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::optional<double> expected_slope;
  std::optional<bool> within_tolerance;
  std::size_t points = 0;
  std::size_t dropped_zero = 0;
  std::size_t excluded_accuracy = 0;
  ParamMap group;  // values of the other multi-valued grid axes
  bool ok = false;
  std::string note;
};

// Least squares of log(y) on log(x).
inline ScalingFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw InvalidInput("fit_loglog: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw InvalidInput("fit_loglog: values must be positive");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  std::vector<double> distinct = lx;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3)
    throw InsufficientData("need at least 3 distinct axis values, have " + std::to_string(distinct.size()));
  const double n = double(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  ScalingFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (f.intercept + f.slope * lx[i]);
    ss_res += e * e;
  }
  f.r_squared = syy == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  f.points = lx.size();
  f.ok = true;
  return f;
}

// Fit over the given rows: accuracy-failed rows are excluded, zero-deviation
// rows dropped; both are counted in the result.
inline ScalingFit fit_scaling(const std::vector<SweepRow>& rows, const std::string& axis) {
  if (std::find(grid_axes().begin(), grid_axes().end(), axis) == grid_axes().end())
    throw InvalidParameter("fit axis '" + axis + "' is not one of T, epsilon, delta, mu");
  std::vector<double> xs, ys;
  std::size_t zero = 0, failed = 0;
  for (const auto& r : rows) {
    if (r.accuracy_failed) {
      ++failed;
      continue;
    }
    const auto x = r.param(axis);
    if (!x) throw InvalidParameter("rows have no value for axis '" + axis + "'");
    if (!(r.deviation.mean_sq_dev > 0.0)) {
      ++zero;
      continue;
    }
    xs.push_back(*x);
    ys.push_back(r.deviation.mean_sq_dev);
  }
  ScalingFit f;
  try {
    f = fit_loglog(xs, ys);
  } catch (const InsufficientData& e) {
    throw InsufficientData(std::string(e.what()) + " after dropping " + std::to_string(zero) +
                           " zero-deviation and " + std::to_string(failed) + " accuracy-failed rows");
  }
  f.axis = axis;
  f.dropped_zero = zero;
  f.excluded_accuracy = failed;
  return f;
}

// One fit per grid axis and per combination of the other multi-valued axes.
// Groups without enough data come back with ok = false and a note.
inline std::vector<ScalingFit> fit_table(const SweepTable& table, double slope_tolerance) {
  std::vector<ScalingFit> fits;
  for (const auto& axis : table.axes) {
    std::map<std::vector<double>, std::vector<SweepRow>> groups;
    std::vector<std::string> others;
    for (const auto& a : table.axes)
      if (a != axis) others.push_back(a);
    for (const auto& r : table.rows) {
      std::vector<double> key;
      for (const auto& a : others) key.push_back(r.params.at(a));
      groups[key].push_back(r);
    }
    for (const auto& [key, rows] : groups) {
      ScalingFit f;
      try {
        f = fit_scaling(rows, axis);
      } catch (const InsufficientData& e) {
        f.axis = axis;
        f.ok = false;
        f.note = e.what();
      }
      for (std::size_t i = 0; i < others.size(); ++i) f.group[others[i]] = key[i];
      f.expected_slope = expected_slope(table.cell, axis);
      if (f.ok && f.expected_slope) f.within_tolerance = std::fabs(f.slope - *f.expected_slope) <= slope_tolerance;
      fits.push_back(std::move(f));
    }
  }
  return fits;
}

// ---------------------------------------------------------------------------
// Structural identities of the lower-bound constructions, checked along
// general FOI runs with random coefficient matrices.

inline const std::vector<std::string>& invariant_ids() {
  static const std::vector<std::string> v = {"rel_xy", "smooth_str_identity", "conserve", "pattern_support"};
  return v;
}

struct InvariantReport {
  std::string id;
  bool passed = false;
  double max_residual = 0.0;
  double tolerance = 1e-9;
  std::size_t T = 0;
  std::size_t matrices = 0;
  double max_first_to_rest_ratio = 0.0;
  std::vector<std::string> notes;
};

// Matrix 0 is constant-step GD with step `eta`; the rest draw
// lambda_i^{(t)} = u / t with u uniform on (0, 1], so every entry is positive.
inline CoefficientMatrix random_coefficients(std::size_t T, RngStream& rng) {
  CoefficientMatrix c;
  for (std::size_t t = 1; t <= T; ++t) {
    std::vector<double> row(t);
    for (double& v : row) v = rng.uniform_pos() / double(t);
    c.lambda.push_back(std::move(row));
  }
  return c;
}

inline InvariantReport verify_invariant(const std::string& id, const ParamMap& params, std::uint64_t master_seed) {
  if (std::find(invariant_ids().begin(), invariant_ids().end(), id) == invariant_ids().end())
    throw InvalidParameter("unknown invariant '" + id +
                           "' (valid: rel_xy, smooth_str_identity, conserve, pattern_support)");
  auto get = [&](const std::string& k, double d) {
    auto it = params.find(k);
    return it == params.end() ? d : it->second;
  };
  InvariantReport rep;
  rep.id = id;
  rep.T = std::size_t(get("T", 16.0));
  rep.matrices = std::size_t(get("matrices", 20.0));
  rep.tolerance = get("tolerance", 1e-9);
  const double eps = get("epsilon", 0.05), delta = get("delta", 0.01), mu = get("mu", 1.0), eta = get("eta", 1.0);
  const std::size_t T = rep.T;
  if (T < 1 || rep.matrices < 1) throw InvalidParameter("verify_invariant needs T >= 1 and matrices >= 1");

  Instance in;
  if (id == "rel_xy") {
    in = build_instance("smooth_det_lb", {{"T", double(T)}, {"epsilon", eps}, {"delta", delta}, {"ratio", get("ratio", 1.0)}});
  } else if (id == "smooth_str_identity") {
    in = build_instance("smooth_sc_sto_lb", {{"T", double(T)}, {"mu", mu}, {"delta", delta}});
    in.oracle.schedule.params["fixed_sign"] = 1.0;
  } else if (id == "conserve") {
    in = build_instance("nonsmooth_sc_sto_lb", {{"T", double(T)}, {"mu", mu}, {"delta", delta}});
  } else {
    in = build_instance("nonsmooth_sto_lb", {{"T", double(T)}, {"epsilon", eps}, {"delta", delta}});
  }

  const RngState master(master_seed);
  RngStream coeff_rng(master.derive("invariant_coefficients", 0));
  double worst = 0.0;
  auto note = [&](double r, std::size_t mat, std::size_t t, const char* what) {
    if (r > worst) worst = r;
    if (r > rep.tolerance && rep.notes.size() < 8)
      rep.notes.push_back(std::string(what) + " residual " + std::to_string(r) + " at matrix " + std::to_string(mat) +
                          ", t = " + std::to_string(t));
  };

  for (std::size_t mat = 0; mat < rep.matrices; ++mat) {
    const CoefficientMatrix c = mat == 0 ? CoefficientMatrix::constant_step(T, eta) : random_coefficients(T, coeff_rng);
    rep.max_first_to_rest_ratio = std::max(rep.max_first_to_rest_ratio, T > 1 ? c.first_to_rest_ratio() : 0.0);
    const RunResult r = run_general_foi(*in.cost, in.oracle, in.x_ref, c, master.derive("run", std::int64_t(mat)));
    const auto& X = r.trajectory;
    const auto& Gq = r.queried;

    if (id == "rel_xy") {
      const double k = delta * get("ratio", 1.0);
      for (std::size_t t = 0; t <= T; ++t) note(std::fabs(X[t][0] - k * X[t][1]), mat, t, "x = delta*ratio*y");
    } else if (id == "smooth_str_identity") {
      for (std::size_t t = 0; t <= T; ++t) {
        double s = 0.0;
        for (std::size_t i = 0; i < T; ++i) s += X[t][i];
        note(std::fabs(delta * X[t][T] - s), mat, t, "delta*y = sum(x_dum)");
      }
      for (std::size_t t = 0; t < T; ++t) {
        double s = 0.0;
        for (std::size_t i = 0; i < T; ++i) s += Gq[t][i];
        note(std::fabs(delta * Gq[t][T] - s), mat, t, "delta*g_y = sum(g_dum)");
      }
    } else if (id == "conserve") {
      const std::size_t w = 3 * T;
      for (std::size_t t = 0; t <= T; ++t) {
        double s = 0.0;
        for (std::size_t i = T; i < 3 * T; ++i) s += X[t][i];
        note(std::fabs(X[t][w] - s), mat, t, "w = sum(y + z)");
      }
      for (std::size_t t = 0; t < T; ++t) {
        double s = 0.0;
        for (std::size_t i = T; i < 3 * T; ++i) s += Gq[t][i];
        note(std::fabs(Gq[t][w] - s), mat, t, "g_w = sum(g_y + g_z)");
      }
    } else {
      // At x_t (t >= 1) the (y, z) block of the subgradient is one unit entry
      // in block i_t <= t; with positive coefficients i_t = t.
      for (std::size_t t = 1; t < T; ++t) {
        double res = 0.0;
        std::size_t units = 0, where = 0;
        for (std::size_t i = T; i < 3 * T; ++i) {
          const double v = Gq[t][i];
          if (v == 1.0) {
            ++units;
            where = (i - T) % T;
          } else {
            res = std::max(res, std::fabs(v));
          }
        }
        if (units != 1 || where + 1 > t) res = std::max(res, 1.0);
        note(res, mat, t, "single unit subgradient entry");
      }
    }
  }
  rep.max_residual = worst;
  rep.passed = worst <= rep.tolerance;
  return rep;
}

}  // namespace reprolab
