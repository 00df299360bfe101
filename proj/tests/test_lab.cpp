#include <gtest/gtest.h>

#include <cmath>

#include "reprolab/lab.hpp"

using namespace reprolab;

namespace {

// Zero cost on T+1 coordinates, Rademacher noise on coordinate t, constant eta.
Instance pure_noise(std::size_t T, double eta, double delta) {
  Instance in;
  in.scenario = "pure_noise";
  in.cell = "smooth/stochastic";
  in.T = T;
  in.cost = std::make_shared<DiagonalQuadraticCost>("pure_noise", Vector(T + 1, 0.0), Vector(T + 1, 0.0), 0.0);
  in.oracle.kind = OracleKind::stochastic_inexact;
  in.oracle.schedule.kind = NoiseKind::rademacher_coordinate;
  in.oracle.schedule.delta = delta;
  in.oracle.schedule.params = {{"span", double(T)}};
  in.solver.schedule = {StepKind::constant, {{"eta", eta}}};
  in.solver.averaging = {AvgKind::last};
  in.x_ref = Vector(T + 1, 0.0);
  return in;
}

SweepRow row(const std::string& axis, double x, double dev) {
  SweepRow r;
  r.params[axis] = x;
  r.deviation.mean_sq_dev = dev;
  return r;
}

class NoOptimum final : public Cost {
 public:
  using Cost::subgradient;
  NoOptimum() : Cost(1, "no_optimum") {}
  double value(const Vector& x) const override { return x[0]; }
  void subgradient(const Vector&, Vector& g) const override { g.assign(1, 1.0); }
};

}  // namespace

// Exact expectation over all 2^4 x 2^4 sign outcomes of two independent runs.
TEST(MeasureDeviation, PureNoiseBruteForce) {
  const std::size_t T = 4;
  const double eta = 0.5, delta = 1.0;
  double exact = 0.0;
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) {
      double d = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const double sa = (a >> t) & 1 ? 1.0 : -1.0, sb = (b >> t) & 1 ? 1.0 : -1.0;
        d += (eta * delta * (sa - sb)) * (eta * delta * (sa - sb));
      }
      exact += d / 256.0;
    }
  ASSERT_DOUBLE_EQ(exact, 2.0);
  ASSERT_DOUBLE_EQ(exact, 2.0 * T * eta * eta * delta * delta);

  const auto est = measure_deviation(pure_noise(T, eta, delta), 20000, Pairing::independent, 5);
  EXPECT_NEAR(est.mean_sq_dev, exact, 5 * est.stderr_);
  EXPECT_EQ(est.trials, 20000u);
}

TEST(MeasureDeviation, StderrShrinksWithTrials) {
  const Instance in = pure_noise(4, 0.5, 1.0);
  const auto a = measure_deviation(in, 2000, Pairing::independent, 6);
  const auto b = measure_deviation(in, 8000, Pairing::independent, 6);
  EXPECT_NEAR(a.stderr_ / b.stderr_, 2.0, 0.3);
}

TEST(MeasureDeviation, ZeroNoiseDeterministicIsZero) {
  const Instance in = build_instance("smooth_det_lb", {{"T", 16}, {"epsilon", 0.05}, {"delta", 0.0}});
  EXPECT_EQ(measure_deviation(in, 2, Pairing::exact_vs_adversary, 1).mean_sq_dev, 0.0);
  EXPECT_EQ(measure_deviation(in, 4, Pairing::independent, 1).mean_sq_dev, 0.0);
}

TEST(MeasureDeviation, InitPairFullContraction) {
  Instance in;
  in.scenario = "unit_quadratic";
  in.cell = "smooth_sc/init";
  in.T = 5;
  in.cost = std::make_shared<DiagonalQuadraticCost>("unit_quadratic", Vector{1, 1, 1}, Vector{0, 0, 0}, 0.0);
  in.oracle.kind = OracleKind::inexact_init;
  in.oracle.init = {InitMode::sphere_uniform, 0.5, {}};
  in.solver.schedule = {StepKind::inverse_L, {{"L", 1.0}}};
  in.solver.averaging = {AvgKind::last};
  in.x_ref = {0.2, -0.1, 0.4};
  // x_ref is not the minimiser, so a zero deviation means both runs reached it.
  EXPECT_EQ(measure_deviation(in, 8, Pairing::init_pair, 3).mean_sq_dev, 0.0);
}

TEST(MeasureDeviation, PairingChecks) {
  const Instance sto = build_instance("smooth_sto_lb", {{"T", 8}, {"epsilon", 0.05}, {"delta", 1}});
  EXPECT_THROW(measure_deviation(sto, 1, Pairing::independent, 1), InvalidParameter);
  EXPECT_THROW(measure_deviation(sto, 4, Pairing::exact_vs_adversary, 1), InvalidParameter);
  EXPECT_THROW(measure_deviation(sto, 4, Pairing::init_pair, 1), InvalidParameter);
  EXPECT_THROW(parse_pairing("paired"), InvalidParameter);
}

TEST(MeasureDeviation, ThreadCountDoesNotChangeResult) {
  const Instance in = build_instance("nonsmooth_sto_lb", {{"T", 64}, {"epsilon", 0.05}, {"delta", 0.5}});
  LabOptions one, many;
  many.threads = 5;
  const auto a = measure_deviation(in, 12, Pairing::independent, 77, one);
  const auto b = measure_deviation(in, 12, Pairing::independent, 77, many);
  EXPECT_EQ(a.mean_sq_dev, b.mean_sq_dev);
  EXPECT_EQ(a.stderr_, b.stderr_);
}

TEST(MeasureAccuracy, RampAtOriginIsFourEpsilon) {
  Instance in = build_instance("smooth_sto_lb", {{"T", 8}, {"epsilon", 0.05}, {"delta", 0.0}});
  EXPECT_DOUBLE_EQ(in.cost->suboptimality(in.x_ref), 0.2);
  // A step too small to register in y + 1.
  in.solver.schedule = {StepKind::constant, {{"eta", 1e-300}}};
  const auto a = measure_accuracy(in, 3, 1);
  EXPECT_DOUBLE_EQ(a.mean_subopt, 0.2);
  EXPECT_DOUBLE_EQ(a.max_subopt, 0.2);
}

TEST(MeasureAccuracy, ExactGdConverges) {
  const Instance in = build_instance("random_quadratic", {{"T", 400}, {"mu", 0.5}, {"L", 1}, {"delta", 0.0}});
  EXPECT_LE(measure_accuracy(in, 2, 1).mean_subopt, 1e-10);
}

TEST(MeasureAccuracy, UnknownOptimum) {
  Instance in = pure_noise(2, 0.1, 0.0);
  in.cost = std::make_shared<NoOptimum>();
  in.x_ref = {0.0};
  EXPECT_THROW(measure_accuracy(in, 2, 1), Unsupported);
}

TEST(Sweep, OnePointEqualsDirectMeasurement) {
  const ParamMap base = {{"epsilon", 0.05}, {"delta", 1.0}};
  SweepSpec spec;
  spec.base = base;
  spec.grid = {{"T", {64}}};
  spec.trials = 6;
  spec.master_seed = 123;
  const auto make = [](const ParamMap& p) { return build_instance("smooth_sto_lb", p); };
  const SweepTable t = sweep(make, spec);
  ASSERT_EQ(t.rows.size(), 1u);
  const auto direct = measure_deviation(make({{"epsilon", 0.05}, {"delta", 1.0}, {"T", 64}}), 6, Pairing::independent, 123);
  EXPECT_EQ(t.rows[0].deviation.mean_sq_dev, direct.mean_sq_dev);
  EXPECT_EQ(t.rows[0].deviation.stderr_, direct.stderr_);
}

TEST(Sweep, DuplicatesCollapseAndRowsAreOrdered) {
  SweepSpec spec;
  spec.base = {{"epsilon", 0.05}};
  spec.grid = {{"T", {200, 100, 200}}, {"delta", {0.5}}};
  spec.trials = 2;
  const SweepTable t = sweep([](const ParamMap& p) { return build_instance("smooth_sto_lb", p); }, spec);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(*t.rows[0].param("T"), 100.0);
  EXPECT_EQ(*t.rows[1].param("T"), 200.0);
  EXPECT_EQ(t.axes, (std::vector<std::string>{"T", "delta"}));
  EXPECT_FALSE(t.truncated);
}

TEST(Sweep, BadAxis) {
  SweepSpec spec;
  spec.grid = {{"kappa", {1, 2}}};
  EXPECT_THROW(sweep([](const ParamMap& p) { return build_instance("smooth_sto_lb", p); }, spec), InvalidParameter);
}

TEST(Sweep, CancelTruncates) {
  std::atomic<bool> stop{true};
  LabOptions opt;
  opt.cancel = &stop;
  SweepSpec spec;
  spec.base = {{"epsilon", 0.05}, {"delta", 1.0}};
  spec.grid = {{"T", {8, 16, 32}}};
  spec.trials = 2;
  const SweepTable t = sweep([](const ParamMap& p) { return build_instance("smooth_sto_lb", p); }, spec, opt);
  EXPECT_TRUE(t.truncated);
  EXPECT_TRUE(t.rows.empty());
}

TEST(Fit, SyntheticSlopes) {
  std::vector<SweepRow> inv, sq, flat;
  for (double T : {100.0, 200.0, 400.0}) inv.push_back(row("T", T, 4.0 / T));
  for (double d : {0.1, 0.2, 0.4}) sq.push_back(row("delta", d, d * d));
  for (double T : {100.0, 200.0, 400.0}) flat.push_back(row("T", T, 0.3));
  const auto a = fit_scaling(inv, "T");
  EXPECT_NEAR(a.slope, -1.0, 1e-12);
  EXPECT_NEAR(a.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(fit_scaling(sq, "delta").slope, 2.0, 1e-12);
  EXPECT_NEAR(fit_scaling(flat, "T").slope, 0.0, 1e-12);
}

TEST(Fit, ZeroRowsDroppedThenInsufficient) {
  std::vector<SweepRow> rows;
  for (double T : {100.0, 200.0, 400.0, 800.0}) rows.push_back(row("T", T, 1.0 / T));
  rows.push_back(row("T", 1600.0, 0.0));
  const auto f = fit_scaling(rows, "T");
  EXPECT_EQ(f.dropped_zero, 1u);
  EXPECT_EQ(f.points, 4u);
  rows[0].deviation.mean_sq_dev = rows[1].deviation.mean_sq_dev = 0.0;
  EXPECT_THROW(fit_scaling(rows, "T"), InsufficientData);
}

TEST(Fit, TableGroupsAndTolerance) {
  SweepTable t;
  t.cell = "smooth/stochastic";
  t.axes = {"T", "delta"};
  for (double T : {100.0, 200.0, 400.0})
    for (double d : {0.5, 1.0}) {
      SweepRow r;
      r.params = {{"T", T}, {"delta", d}};
      r.deviation.mean_sq_dev = d * d / T;
      t.rows.push_back(r);
    }
  const auto fits = fit_table(t, 0.35);
  std::size_t t_fits = 0, d_fits = 0;
  for (const auto& f : fits) {
    if (f.axis == "T") {
      ++t_fits;
      EXPECT_TRUE(f.ok);
      EXPECT_TRUE(*f.within_tolerance);
    } else {
      ++d_fits;
      EXPECT_FALSE(f.ok);  // only two delta values
    }
  }
  EXPECT_EQ(t_fits, 2u);
  EXPECT_EQ(d_fits, 3u);
}

TEST(Invariants, CatalogExamples) {
  EXPECT_TRUE(verify_invariant("rel_xy", {{"T", 20}, {"epsilon", 0.05}, {"delta", 0.01}, {"eta", 1}}, 1).passed);
  EXPECT_TRUE(verify_invariant("smooth_str_identity", {{"T", 16}}, 2).passed);
  EXPECT_TRUE(verify_invariant("conserve", {{"T", 8}}, 3).passed);
  const auto p = verify_invariant("pattern_support", {{"T", 32}}, 4);
  EXPECT_TRUE(p.passed);
  EXPECT_LE(p.max_residual, 1e-9);
  EXPECT_THROW(verify_invariant("nope", {}, 1), InvalidParameter);
}

TEST(Invariants, StatedRelXyConstantViolatesOracleBound) {
  // ratio 1/(4 eps) gives noise of norm up to 2 delta; the oracle refuses it.
  EXPECT_THROW(verify_invariant("rel_xy", {{"T", 8}, {"epsilon", 0.05}, {"delta", 0.01}, {"ratio", 5.0}}, 1),
               ContractViolation);
}
