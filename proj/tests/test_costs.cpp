#include <gtest/gtest.h>

#include <cmath>

#include "reprolab/costs.hpp"
#include "reprolab/scenarios.hpp"

using namespace reprolab;

TEST(HelperF, Branches) {
  EXPECT_EQ(eval_helper_F(0.5).value, 0.25);
  EXPECT_EQ(eval_helper_F(0.5).derivative, 1.0);
  EXPECT_EQ(eval_helper_F(-1.0).value, 0.0);
  EXPECT_EQ(eval_helper_F(-1.0).derivative, 0.0);
  EXPECT_EQ(eval_helper_F(2.0).value, 3.0);
  EXPECT_EQ(eval_helper_F(2.0).derivative, 2.0);
}

TEST(HelperF, ContinuousAtJoints) {
  for (double x : {0.0, 1.0}) {
    EXPECT_NEAR(eval_helper_F(std::nextafter(x, -1.0)).value, eval_helper_F(x).value, 1e-15);
    EXPECT_NEAR(eval_helper_F(std::nextafter(x, -1.0)).derivative, eval_helper_F(x).derivative, 1e-15);
  }
}

TEST(HelperG, AllZeroPicksConstant) {
  const auto r = eval_helper_G({0, 0}, {0, 0}, {0, 0});
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.branch.index, 0u);
  for (const auto* g : {&r.gx, &r.gy, &r.gz}) EXPECT_EQ(*g, (Vector{0, 0}));
}

// Branch values enumerate to [0.5, -0.5, 0.5, 0.5]; the first i=1 y-branch wins.
TEST(HelperG, PositiveFirstEntry) {
  const auto r = eval_helper_G({0.5, 0}, {0, 0}, {0, 0});
  EXPECT_EQ(r.value, 0.5);
  EXPECT_EQ(r.gx, (Vector{1, 0}));
  EXPECT_EQ(r.gy, (Vector{1, 0}));
  EXPECT_EQ(r.gz, (Vector{0, 0}));
}

TEST(HelperG, NegativeFirstEntry) {
  const auto r = eval_helper_G({-0.5, 0}, {0, 0}, {0, 0});
  EXPECT_EQ(r.value, 0.5);
  EXPECT_EQ(r.gx, (Vector{-1, 0}));
  EXPECT_EQ(r.gy, (Vector{0, 0}));
  EXPECT_EQ(r.gz, (Vector{1, 0}));
}

TEST(HelperG, MismatchedLengths) {
  EXPECT_THROW(eval_helper_G({0, 0}, {0}, {0, 0}), InvalidInput);
  EXPECT_THROW(eval_helper_G({}, {}, {}), InvalidInput);
}

// Brute-force enumeration of the 2T+1 candidates in plain doubles, with the
// first-maximiser rule; small T keeps doubles exact enough.
TEST(HelperG, MatchesEnumeration) {
  RngStream rng(RngState(21));
  for (int k = 0; k < 3000; ++k) {
    const std::size_t T = 1 + rng.below(6);
    Vector x(T), y(T), z(T);
    for (std::size_t i = 0; i < T; ++i) x[i] = rng.normal(), y[i] = rng.normal(), z[i] = rng.normal();
    double best = 0.0, prefix = 0.0;
    std::size_t bi = 0;
    int bs = 0;
    for (std::size_t i = 0; i < T; ++i) {
      const double sc = std::ldexp(1.0, -int(i));
      const double cy = std::max(y[i], 0.0) + prefix + x[i] * sc, cz = std::max(z[i], 0.0) + prefix - x[i] * sc;
      if (cy > best) best = cy, bi = i + 1, bs = 1;
      if (cz > best) best = cz, bi = i + 1, bs = -1;
      prefix += std::fabs(x[i]) * sc;
    }
    const auto r = eval_helper_G(x, y, z);
    ASSERT_EQ(r.branch.index, bi);
    ASSERT_EQ(r.branch.side, bs);
    EXPECT_NEAR(r.value, best, 1e-14);
    Vector gx(T, 0.0), gy(T, 0.0), gz(T, 0.0);
    if (bi) {
      for (std::size_t j = 0; j + 1 < bi; ++j) gx[j] = (x[j] >= 0 ? 1.0 : -1.0) * std::ldexp(1.0, -int(j));
      gx[bi - 1] = bs * std::ldexp(1.0, -int(bi - 1));
      (bs > 0 ? gy : gz)[bi - 1] = (bs > 0 ? y : z)[bi - 1] >= 0 ? 1.0 : 0.0;
    }
    EXPECT_EQ(r.gx, gx);
    EXPECT_EQ(r.gy, gy);
    EXPECT_EQ(r.gz, gz);
    EXPECT_LE(norm_sq(r.gx) + norm_sq(r.gy) + norm_sq(r.gz), kHelperGGradNormSqBound + 1e-12);
  }
}

// x_1 = x_101 = 1: the i=101 y-branch exceeds the i=1 one by 2^-100, which a
// plain double sum rounds away. The exact comparison must still pick it, and
// later equal candidates must not displace it.
TEST(HelperG, DeepTailStrictWin) {
  const std::size_t T = 128;
  Vector x(T, 0.0), y(T, 0.0), z(T, 0.0);
  x[0] = 1.0;
  x[100] = 1.0;
  const auto r = eval_helper_G(x, y, z);
  EXPECT_EQ(r.branch.index, 101u);
  EXPECT_EQ(r.branch.side, 1);
  EXPECT_EQ(r.gy[100], 1.0);
  EXPECT_EQ(r.gx[100], std::ldexp(1.0, -100));
  EXPECT_EQ(r.value, 1.0);
}

TEST(HelperG, ExactTieKeepsFirst) {
  // y-branch of block 1 and z-branch of block 2 both equal 1.
  const auto r = eval_helper_G({0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0});
  EXPECT_EQ(r.branch.index, 1u);
  EXPECT_EQ(r.branch.side, 1);
}

TEST(Scenarios, SmoothStochasticAtOrigin) {
  const Instance in = build_instance("smooth_sto_lb", {{"T", 8}, {"epsilon", 0.05}, {"delta", 0.1}});
  EXPECT_EQ(in.cost->dim(), 9u);
  EXPECT_DOUBLE_EQ(in.cost->value(Vector(9, 0.0)), 0.2);
}

TEST(Scenarios, ThetaQuadraticClosedForm) {
  const Instance in = build_instance("theta_quadratic", {{"T", 4}, {"theta", 0.0}, {"epsilon", 0.005}, {"delta", 0.0}});
  // 100 eps h(x), h = x^2 inside [-1, 1] and 2|x| - 1 outside.
  EXPECT_NEAR(in.cost->value({0.1}), 0.005, 1e-15);
  EXPECT_NEAR(in.cost->value({2.0}), 1.5, 1e-15);
  EXPECT_NEAR(in.cost->value({-3.0}), 2.5, 1e-15);
  EXPECT_THROW(build_instance("theta_quadratic", {{"T", 4}, {"theta", 0.0}, {"epsilon", 0.01}, {"delta", 0.0}}),
               InvalidParameter);
}

TEST(Scenarios, NesterovChainOptimum) {
  const Instance in =
      build_instance("nesterov_chain", {{"T", 4}, {"kappa", 4}, {"mu", 1}, {"delta", 0}, {"truncation_dim", 16}});
  const auto& c = dynamic_cast<const NesterovChainCost&>(*in.cost);
  EXPECT_DOUBLE_EQ(c.q(), 1.0 / 3.0);
  // Truncation perturbs the infinite-chain optimum q^i by O(q^(2n)).
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(c.block_optimum()[i], std::pow(1.0 / 3.0, double(i + 1)), 1e-7);
  EXPECT_NEAR(c.block_optimum()[1], 1.0 / 9.0, 1e-9);
}

TEST(Scenarios, Dimensions) {
  const ParamMap p = {{"T", 5}, {"epsilon", 0.05}, {"delta", 0.1}};
  EXPECT_EQ(build_instance("nonsmooth_sto_lb", p).cost->dim(), 16u);
  EXPECT_EQ(build_instance("nonsmooth_det_lb", p).cost->dim(), 17u);
  EXPECT_EQ(build_instance("smooth_sto_lb", p).cost->dim(), 6u);
}

TEST(Scenarios, Errors) {
  EXPECT_THROW(build_instance("nope", {}), InvalidParameter);
  EXPECT_THROW(build_instance("smooth_sto_lb", {{"T", 8}, {"epsilon", 0.05}}), InvalidParameter);
  EXPECT_THROW(build_instance("smooth_sto_lb", {{"T", 8}, {"epsilon", 0.05}, {"delta", 0.1}, {"foo", 1}}),
               InvalidParameter);
  EXPECT_THROW(build_instance("smooth_sto_lb", {{"T", 1e6}, {"epsilon", 0.05}, {"delta", 0.1}}), ResourceError);
}

TEST(FiniteSum, Examples) {
  auto one = std::make_shared<CenteredSquareCost>(Vector{1.0});
  FiniteSum single("s", {one});
  EXPECT_EQ(finite_sum_eval(single, {3.0}), one->value({3.0}));
  FiniteSum twin("t", {one, one});
  EXPECT_EQ(finite_sum_eval(twin, {3.0}), one->value({3.0}));
  FiniteSum three("q", {std::make_shared<CenteredSquareCost>(Vector{0.0}), std::make_shared<CenteredSquareCost>(Vector{1.0}),
                        std::make_shared<CenteredSquareCost>(Vector{2.0})});
  EXPECT_NEAR(finite_sum_eval(three, {1.0}), (0.5 + 0.0 + 0.5) / 3.0, 1e-15);
  EXPECT_THROW(finite_sum_eval(three, {1.0, 2.0}), InvalidInput);
}

TEST(FiniteSum, MedianOptimum) {
  RngStream rng(RngState(3));
  const auto fs = make_median_finite_sum(5, 3, rng);
  const auto& opt = *fs->optimum();
  RngStream probe(RngState(4));
  for (int k = 0; k < 200; ++k) {
    Vector x(3);
    for (double& v : x) v = probe.normal();
    EXPECT_GE(fs->value(x), opt.value - 1e-12);
  }
}

// Property checks on every scenario's cost.
namespace {

ParamMap params_for(const ScenarioInfo& info) {
  ParamMap p;
  for (const auto& k : info.required) {
    if (k == "T") p[k] = 6;
    else if (k == "epsilon") p[k] = info.id.rfind("theta", 0) == 0 ? 0.001 : 0.05;
    else if (k == "delta") p[k] = 0.1;
    else if (k == "mu") p[k] = 0.5;
    else if (k == "kappa") p[k] = 4;
    else if (k == "L") p[k] = 2;
    else if (k == "theta") p[k] = info.id == "theta_sco" ? 1.5 : 0.2;
    else p[k] = 1;
  }
  return p;
}

Vector random_point(std::size_t d, RngStream& rng, double s = 1.0) {
  Vector x(d);
  for (double& v : x) v = s * rng.normal();
  return x;
}

}  // namespace

class ScenarioCost : public ::testing::TestWithParam<std::string> {};

TEST_P(ScenarioCost, ConvexWithValidSubgradients) {
  const Instance in = build_instance(GetParam(), params_for(scenario_info(GetParam())));
  const Cost& f = *in.cost;
  RngStream rng(RngState(8).derive(GetParam(), 0));
  for (int k = 0; k < 200; ++k) {
    const Vector x = random_point(f.dim(), rng), y = random_point(f.dim(), rng);
    Vector mid(f.dim());
    for (std::size_t i = 0; i < f.dim(); ++i) mid[i] = 0.5 * x[i] + 0.5 * y[i];
    EXPECT_LE(f.value(mid), 0.5 * f.value(x) + 0.5 * f.value(y) + 1e-9);
    const Vector g = f.subgradient(x);
    double lin = f.value(x);
    for (std::size_t i = 0; i < f.dim(); ++i) lin += g[i] * (y[i] - x[i]);
    EXPECT_GE(f.value(y), lin - 1e-9);
    if (f.meta().lipschitz_G) {
      EXPECT_LE(norm(g), *f.meta().lipschitz_G * (1 + 1e-9));
    }
    if (f.optimum()) {
      EXPECT_GE(f.value(x), f.optimum()->value - 1e-12);
    }
  }
}

TEST_P(ScenarioCost, FiniteDifferenceGradient) {
  const Instance in = build_instance(GetParam(), params_for(scenario_info(GetParam())));
  const Cost& f = *in.cost;
  if (!f.meta().smoothness_L) GTEST_SKIP() << "nonsmooth";
  RngStream rng(RngState(9).derive(GetParam(), 0));
  const double h = 1e-6;
  for (int k = 0; k < 100; ++k) {
    Vector x = random_point(f.dim(), rng);
    const Vector g = f.subgradient(x);
    Vector fd(f.dim());
    for (std::size_t i = 0; i < f.dim(); ++i) {
      const double xi = x[i];
      x[i] = xi + h;
      const double up = f.value(x);
      x[i] = xi - h;
      const double dn = f.value(x);
      x[i] = xi;
      fd[i] = (up - dn) / (2 * h);
    }
    EXPECT_LE(std::sqrt(dist_sq(fd, g)), 1e-5 * std::max(1.0, norm(g)));
  }
}

INSTANTIATE_TEST_SUITE_P(All, ScenarioCost, ::testing::ValuesIn(scenario_ids()));
