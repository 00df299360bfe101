#include <gtest/gtest.h>

#include <cmath>

#include "reprolab/oracles.hpp"
#include "reprolab/scenarios.hpp"

using namespace reprolab;

namespace {

std::shared_ptr<DiagonalQuadraticCost> quad(std::size_t d) {
  Vector a(d), b(d);
  for (std::size_t i = 0; i < d; ++i) a[i] = 1.0 + double(i), b[i] = 0.5 - double(i);
  return std::make_shared<DiagonalQuadraticCost>("q", a, b, 0.0);
}

NoiseSchedule noise(NoiseKind k, double delta, std::map<std::string, double> p = {}) {
  NoiseSchedule s;
  s.kind = k;
  s.delta = delta;
  s.params = std::move(p);
  return s;
}

}  // namespace

TEST(StochasticOracle, ZeroDeltaIsExact) {
  const auto f = quad(4);
  const Vector x = {0.3, -1, 2, 0.1};
  for (auto k : {NoiseKind::gaussian_iid, NoiseKind::rademacher_coordinate})
    EXPECT_EQ(stochastic_gradient(*f, x, 1, RngState(1), noise(k, 0.0)), f->subgradient(x));
}

TEST(StochasticOracle, RademacherHitsStepCoordinate) {
  const auto f = quad(5);
  const Vector x(5, 0.2);
  const Vector g = stochastic_gradient(*f, x, 2, RngState(1), noise(NoiseKind::rademacher_coordinate, 0.5));
  const Vector e = f->subgradient(x);
  Vector d(5);
  for (std::size_t i = 0; i < 5; ++i) d[i] = g[i] - e[i];
  EXPECT_DOUBLE_EQ(norm(d), 0.5);
  EXPECT_NE(d[2], 0.0);
  EXPECT_EQ(norm_sq(d), d[2] * d[2]);
}

TEST(StochasticOracle, RademacherScheduleExhausts) {
  const auto f = quad(3);
  EXPECT_THROW(stochastic_gradient(*f, Vector(3, 0.0), 2, RngState(1), noise(NoiseKind::rademacher_coordinate, 1.0)),
               ScheduleExhausted);
}

TEST(StochasticOracle, GaussianMoments) {
  const auto f = quad(3);
  const Vector x = {0.1, 0.2, 0.3}, e = f->subgradient(x);
  const double delta = 0.7;
  const int N = 100000;
  Vector mean(3, 0.0);
  double sq = 0.0;
  for (int n = 0; n < N; ++n) {
    const Vector g = stochastic_gradient(*f, x, std::size_t(n), RngState(2), noise(NoiseKind::gaussian_iid, delta));
    for (std::size_t i = 0; i < 3; ++i) {
      mean[i] += g[i] / N;
      sq += (g[i] - e[i]) * (g[i] - e[i]) / N;
    }
  }
  EXPECT_LE(std::sqrt(dist_sq(mean, e)), 5 * delta / std::sqrt(double(N)));
  EXPECT_LE(std::fabs(sq - delta * delta), 0.05 * delta * delta);
}

TEST(StochasticOracle, BiasAndSecondMomentAtRandomPoints) {
  const auto f = quad(4);
  RngStream pts(RngState(30));
  for (auto kind : {NoiseKind::gaussian_iid, NoiseKind::rademacher_coordinate}) {
    for (int p = 0; p < 10; ++p) {
      Vector x(4);
      for (double& v : x) v = pts.normal();
      const Vector e = f->subgradient(x);
      const int N = 10000;
      Vector s(4, 0.0), ss(4, 0.0);
      double sq = 0.0;
      for (int n = 0; n < N; ++n) {
        NoiseSchedule sch = noise(kind, 0.3, {{"span", 4.0}});
        // coordinate schedules need t < span; vary the stream instead of t
        const Vector g = stochastic_gradient(*f, x, std::size_t(n % 3), RngState(31).derive("n", n), sch);
        for (std::size_t i = 0; i < 4; ++i) {
          const double d = g[i] - e[i];
          s[i] += d, ss[i] += d * d, sq += d * d;
        }
      }
      for (std::size_t i = 0; i < 4; ++i) {
        const double m = s[i] / N, sd = std::sqrt(std::max(ss[i] / N - m * m, 0.0));
        EXPECT_LE(std::fabs(m), 5 * sd / std::sqrt(double(N)) + 1e-15);
      }
      EXPECT_LE(sq / N, 1.1 * 0.3 * 0.3);
    }
  }
}

TEST(StochasticOracle, SpikeVarianceClosedForm) {
  // sco family: E|g - F'|^2 = p(1-p)(x-theta)^2 + delta^2/2 with p = 200 eps.
  const double eps = 0.001, theta = 1.2, delta = 0.8, p = 200 * eps;
  auto fam = std::make_shared<ThetaFamilyCost>(ThetaVariant::sco, theta, eps);
  for (double x : {1.0, 1.6, 2.0}) {
    const int N = 200000;
    double s = 0.0, ss = 0.0;
    const double Fp = fam->derivative(x);
    for (int n = 0; n < N; ++n) {
      const Vector g = stochastic_gradient(*fam, {x}, 0, RngState(5).derive("n", n),
                                           noise(NoiseKind::bernoulli_spike, delta, {{"p", p}}));
      s += g[0] - Fp;
      ss += (g[0] - Fp) * (g[0] - Fp);
    }
    const double expect = p * (1 - p) * (x - theta) * (x - theta) + delta * delta / 2;
    const double var = ss / N;
    EXPECT_NEAR(var, expect, 0.03 * expect) << "x=" << x;
    EXPECT_LE(std::fabs(s / N), 5 * std::sqrt(var / N));
  }
}

TEST(NonstochasticOracle, ZeroDeltaIsExact) {
  const auto f = quad(3);
  const Vector x = {1, 2, 3};
  EXPECT_EQ(nonstochastic_gradient(*f, x, 0, noise(NoiseKind::fixed_direction, 0.0)), f->subgradient(x));
}

TEST(NonstochasticOracle, SplitDummy) {
  const auto f = quad(4);
  const Vector x(4, 0.0), e = f->subgradient(x);
  const Vector g = nonstochastic_gradient(*f, x, 0, noise(NoiseKind::split_dummy, 1.0, {{"dummy", 3.0}}));
  EXPECT_DOUBLE_EQ(g[0] - e[0], 1 / std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(g[3] - e[3], 1 / std::sqrt(2.0));
  EXPECT_EQ(g[1], e[1]);
  EXPECT_EQ(g[2], e[2]);
}

// d/dy [4 eps F(y+1)] at y = 0 is 8 eps = 0.4, so the noise is 0.1 * 0.4 on x.
TEST(NonstochasticOracle, GradientProportional) {
  const Instance in = build_instance("smooth_det_lb", {{"T", 4}, {"epsilon", 0.05}, {"delta", 0.1}});
  const Vector x = {0.0, 0.0};
  const Vector e = in.cost->subgradient(x);
  const Vector g = nonstochastic_gradient(*in.cost, x, 0, in.oracle.schedule);
  EXPECT_DOUBLE_EQ(e[1], 0.4);
  EXPECT_NEAR(g[0] - e[0], 0.04, 1e-16);
  EXPECT_EQ(g[1], e[1]);
}

TEST(NonstochasticOracle, AdversaryBoundEnforced) {
  const auto f = quad(2);
  NoiseSchedule s = noise(NoiseKind::custom_adversary, 0.1);
  s.adversary = [](const Vector&, std::size_t, const History&) { return Vector{0.2, 0.0}; };
  EXPECT_THROW(nonstochastic_gradient(*f, {0, 0}, 0, s), ContractViolation);
  s.adversary = [](const Vector&, std::size_t t, const History& h) { return Vector{0.1 * double(h.size() == t), 0.0}; };
  EXPECT_NO_THROW(nonstochastic_gradient(*f, {0, 0}, 0, s));
}

TEST(NonstochasticOracle, RandomCallsStayWithinDelta) {
  const auto f = quad(5);
  RngStream rng(RngState(12));
  for (auto kind : {NoiseKind::split_dummy, NoiseKind::fixed_direction}) {
    for (int k = 0; k < 500; ++k) {
      Vector x(5);
      for (double& v : x) v = rng.normal();
      const double delta = rng.uniform();
      const Vector g = nonstochastic_gradient(*f, x, std::size_t(k % 3), noise(kind, delta, {{"span", 4.0}}));
      EXPECT_LE(std::sqrt(dist_sq(g, f->subgradient(x))), delta * (1 + 1e-12));
    }
  }
}

TEST(InexactInit, Modes) {
  const Vector ref(6, 0.0);
  EXPECT_EQ(inexact_init(ref, {InitMode::sphere_uniform, 0.0, {}}, RngState(1)), ref);
  const Vector fc = inexact_init(ref, {InitMode::fixed_coordinate, 0.3, {}}, RngState(1));
  EXPECT_EQ(fc, (Vector{0.3, 0, 0, 0, 0, 0}));
  const Vector sp = inexact_init(ref, {InitMode::spread, 1.0, {{"T", 2}}}, RngState(1));
  EXPECT_DOUBLE_EQ(sp[0], 0.5);
  EXPECT_DOUBLE_EQ(sp[1], 0.5);
  EXPECT_EQ(sp[2], 0.0);
  EXPECT_DOUBLE_EQ(sp[5], 1 / std::sqrt(2.0));
  EXPECT_NEAR(norm_sq(sp), 1.0, 1e-15);
  const Vector sph = inexact_init(ref, {InitMode::sphere_uniform, 0.7, {}}, RngState(2));
  EXPECT_NEAR(norm(sph), 0.7, 1e-15);
  const Vector blk = inexact_init(ref, {InitMode::block, 0.5, {{"T", 4}}}, RngState(2));
  EXPECT_NEAR(norm(blk), 0.5, 1e-15);
}

TEST(ComponentOracle, Examples) {
  auto a = std::make_shared<CenteredSquareCost>(Vector{1.0, 0.0});
  auto b = std::make_shared<CenteredSquareCost>(Vector{-1.0, 2.0});
  FiniteSum fs("fs", {a, b});
  const Vector x = {0.3, 0.4};
  EXPECT_EQ(component_gradient(fs, 1, x, noise(NoiseKind::fixed_direction, 0.0)), b->subgradient(x));
  const Vector g = component_gradient(fs, 0, x, noise(NoiseKind::fixed_direction, 0.1));
  EXPECT_NEAR(std::sqrt(dist_sq(g, a->subgradient(x))), 0.1, 1e-15);
  EXPECT_THROW(component_gradient(fs, 2, x, noise(NoiseKind::none, 0.0)), InvalidInput);

  FiniteSum same("same", {a, a, a});
  const NoiseSchedule s = noise(NoiseKind::fixed_direction, 0.2, {{"coordinate", 1.0}});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(component_gradient(same, i, x, s), nonstochastic_gradient(*a, x, 0, s));
}

TEST(GlobalSample, UnbiasedAtPoint) {
  auto fam = std::make_shared<ThetaFamilyCost>(ThetaVariant::sco, 1.2, 0.001);
  const int N = 100000;
  double s = 0.0, ss = 0.0;
  for (int n = 0; n < N; ++n) {
    RngStream r(RngState(77).derive("sample", n));
    const double v = global_sample(fam, 1.0, r).value(1.5);
    s += v, ss += v * v;
  }
  const double m = s / N, var = (ss - N * m * m) / (N - 1);
  EXPECT_LE(std::fabs(m - fam->value({1.5})), 5 * std::sqrt(var / N));
}

TEST(GlobalSample, ZeroAndSpikeBranches) {
  auto fam = std::make_shared<ThetaFamilyCost>(ThetaVariant::sco, 1.7, 0.001);
  bool seen_zero = false, seen_spike = false;
  for (int n = 0; n < 200 && !(seen_zero && seen_spike); ++n) {
    RngStream r(RngState(3).derive("sample", n));
    const SampledFunction f = global_sample(fam, 0.5, r);
    if (!f.spike) {
      seen_zero = true;
      for (double x : {-3.0, 1.0, 1.4, 9.0}) {
        EXPECT_EQ(f.value(x), 0.0);
        EXPECT_EQ(f.gradient(x), 0.0);
      }
    } else {
      seen_spike = true;
      // One gradient query at x in [1,2] reveals theta - z.
      const double x = 1.3;
      EXPECT_NEAR(x - f.gradient(x), f.shifted_theta(), 1e-12);
    }
  }
  EXPECT_TRUE(seen_zero && seen_spike);
}

TEST(GlobalSample, RejectsLargeEpsilon) {
  auto fam = std::make_shared<ThetaFamilyCost>(ThetaVariant::sco, 1.5, 0.01);
  RngStream r(RngState(1));
  EXPECT_THROW(global_sample(fam, 1.0, r), InvalidParameter);
}
