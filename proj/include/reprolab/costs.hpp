#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "reprolab/core.hpp"
#include "reprolab/rng.hpp"

namespace reprolab {

struct RegularityMeta {
  std::optional<double> smoothness_L;  // nullopt: nonsmooth
  std::optional<double> lipschitz_G;   // nullopt: unbounded gradients
  double strong_convexity_mu = 0.0;
  std::optional<double> domain_radius_D;  // nullopt: unconstrained
};

struct Optimum {
  Vector point;
  double value;
};

class Cost {
 public:
  virtual ~Cost() = default;

  std::size_t dim() const { return dim_; }
  const RegularityMeta& meta() const { return meta_; }
  const std::optional<Optimum>& optimum() const { return optimum_; }
  const std::string& scenario_id() const { return scenario_id_; }

  virtual double value(const Vector& x) const = 0;
  // Writes a subgradient into g (resized to dim).
  virtual void subgradient(const Vector& x, Vector& g) const = 0;

  Vector subgradient(const Vector& x) const {
    Vector g;
    subgradient(x, g);
    return g;
  }

  double suboptimality(const Vector& x) const {
    if (!optimum_) throw Unsupported("cost '" + scenario_id_ + "' has no known optimum");
    return value(x) - optimum_->value;
  }

 protected:
  Cost(std::size_t dim, std::string id) : dim_(dim), scenario_id_(std::move(id)) {}
  void check_dim(const Vector& x) const {
    if (x.size() != dim_)
      throw InvalidInput("cost '" + scenario_id_ + "': expected dim " + std::to_string(dim_) + ", got " +
                         std::to_string(x.size()));
  }

  std::size_t dim_;
  std::string scenario_id_;
  RegularityMeta meta_;
  std::optional<Optimum> optimum_;
};

using CostPtr = std::shared_ptr<const Cost>;

// ---------------------------------------------------------------------------
// Scalar helpers

struct ValueDeriv {
  double value;
  double derivative;
};

// Huber-like ramp: 0 left of 0, x^2 on [0,1), 2x-1 from 1 on.
inline ValueDeriv eval_helper_F(double x) {
  if (x < 0.0) return {0.0, 0.0};
  if (x < 1.0) return {x * x, 2.0 * x};
  return {2.0 * x - 1.0, 2.0};
}

inline double ramp(double v) { return v > 0.0 ? v : 0.0; }
inline double ramp_deriv(double v) { return v >= 0.0 ? 1.0 : 0.0; }
inline double sign_pos(double v) { return v >= 0.0 ? 1.0 : -1.0; }

// ---------------------------------------------------------------------------
// The nested-max helper G(x, y, z) over T blocks.
//
// Candidates are enumerated as: the constant 0, then for i = 1..T the
// y-branch  ramp(y_i) + sum_{j<i} |x_j| 2^{-(j-1)} + x_i 2^{-(i-1)}  and the
// z-branch  ramp(z_i) + sum_{j<i} |x_j| 2^{-(j-1)} - x_i 2^{-(i-1)}.
// The subgradient is that of the first candidate attaining the maximum.
//
// Plain doubles cannot decide that argmax once i exceeds ~55: the tail terms
// are absorbed by the prefix sum and, past i ~ 1075, underflow outright.
// Comparisons therefore run on differences carried as mantissa * 2^exponent
// with an unbounded integer exponent, which keeps exact ties exact and
// orders strict inequalities correctly.

struct GBranch {
  std::size_t index = 0;  // 0: the constant; otherwise 1-based block index
  int side = 0;           // +1 y-branch, -1 z-branch
  double value = 0.0;
};

namespace detail {

struct Scaled {
  double m = 0.0;
  long e = 0;
};

// v * 2^e for e <= 0. A single multiply by an exact power of two rounds the
// same way ldexp does; the table only avoids the libm call.
inline double times_pow2(double v, long e) {
  static const std::array<double, 1075> table = [] {
    std::array<double, 1075> t{};
    for (int i = 0; i < 1075; ++i) t[std::size_t(i)] = std::ldexp(1.0, -i);
    return t;
  }();
  if (e >= -1074) return v * table[std::size_t(-e)];
  return e < -1200 ? 0.0 : std::ldexp(v, int(e));
}

inline Scaled scaled_add(Scaled a, double t, long et) {
  if (t == 0.0) return a;
  if (a.m == 0.0) return {t, et};
  if (et <= a.e) {
    a.m += times_pow2(t, et - a.e);
    return a;
  }
  return {times_pow2(a.m, a.e - et) + t, et};
}

// Sign of d + s.m * 2^s.e.
inline int sign_of_sum(double d, Scaled s) {
  if (s.m == 0.0) return (d > 0) - (d < 0);
  if (d == 0.0) return (s.m > 0) - (s.m < 0);
  const double tail = times_pow2(s.m, s.e);
  const double v = d + tail;
  if (v == 0.0 && tail == 0.0) return (d > 0) - (d < 0);
  return (v > 0) - (v < 0);
}

}  // namespace detail

// xs(j), ys(j), zs(j) give the 0-based j-th block entries.
template <class XF, class YF, class ZF>
GBranch helper_G_argmax(std::size_t T, XF xs, YF ys, ZF zs) {
  GBranch best;  // the constant 0
  double chi_best = 0.0;
  detail::Scaled q;  // (candidate's prefix part) - (best's full dyadic part)
  // Past the last block with x != 0, y > 0 or z > 0 every candidate has the
  // same value, so only the first of them can be selected.
  std::size_t end = T;
  while (end > 0 && xs(end - 1) == 0.0 && !(ys(end - 1) > 0.0) && !(zs(end - 1) > 0.0)) --end;
  end = std::min(T, end + 1);
  for (std::size_t k = 0; k < end; ++k) {
    const double xk = xs(k);
    const long ek = -long(k);
    for (int side : {+1, -1}) {
      const double chi = ramp(side > 0 ? ys(k) : zs(k));
      const detail::Scaled s = detail::scaled_add(q, side * xk, ek);
      if (detail::sign_of_sum(chi - chi_best, s) > 0) {
        best.index = k + 1;
        best.side = side;
        chi_best = chi;
        q = {-side * xk, ek};
      }
    }
    q = detail::scaled_add(q, std::fabs(xk), ek);
  }
  if (best.index > 0) {
    const std::size_t i = best.index - 1;
    double prefix = 0.0;
    for (std::size_t j = 0; j < i; ++j) prefix += detail::times_pow2(std::fabs(xs(j)), -long(j));
    best.value = chi_best + prefix + detail::times_pow2(best.side * xs(i), -long(i));
  }
  return best;
}

// Adds the subgradient of the selected branch into gx, gy, gz (length T each).
template <class XF, class YF, class ZF>
void helper_G_accumulate(const GBranch& b, XF xs, YF ys, ZF zs, double* gx, double* gy, double* gz) {
  if (b.index == 0) return;
  const std::size_t i = b.index - 1;
  for (std::size_t j = 0; j < i; ++j) gx[j] += detail::times_pow2(sign_pos(xs(j)), -long(j));
  gx[i] += detail::times_pow2(double(b.side), -long(i));
  if (b.side > 0)
    gy[i] += ramp_deriv(ys(i));
  else
    gz[i] += ramp_deriv(zs(i));
}

struct HelperGResult {
  double value;
  Vector gx, gy, gz;
  GBranch branch;
};

inline HelperGResult eval_helper_G(const Vector& x, const Vector& y, const Vector& z) {
  if (x.empty() || x.size() != y.size() || x.size() != z.size())
    throw InvalidInput("eval_helper_G: x, y, z must share a positive length");
  const std::size_t T = x.size();
  auto xs = [&](std::size_t j) { return x[j]; };
  auto ys = [&](std::size_t j) { return y[j]; };
  auto zs = [&](std::size_t j) { return z[j]; };
  HelperGResult r{0.0, Vector(T, 0.0), Vector(T, 0.0), Vector(T, 0.0), {}};
  r.branch = helper_G_argmax(T, xs, ys, zs);
  r.value = r.branch.value;
  helper_G_accumulate(r.branch, xs, ys, zs, r.gx.data(), r.gy.data(), r.gz.data());
  return r;
}

// Gradient-norm bound of G: 1 from the ramp plus sum_j 4^{-(j-1)} < 4/3.
inline constexpr double kHelperGGradNormSqBound = 1.0 + 4.0 / 3.0;

// ---------------------------------------------------------------------------
// Smooth constructions

// f(x) = 4 eps F(x[y_index] + 1); every other coordinate is a dummy.
class RampCost final : public Cost {
 public:
  using Cost::subgradient;
  RampCost(std::string id, std::size_t dim, std::size_t y_index, double eps)
      : Cost(dim, std::move(id)), y_(y_index), eps_(eps) {
    meta_.smoothness_L = 8.0 * eps;
    meta_.lipschitz_G = 8.0 * eps;
    Vector p(dim, 0.0);
    p[y_] = -1.0;
    optimum_ = Optimum{p, 0.0};
  }
  double value(const Vector& x) const override {
    check_dim(x);
    return 4.0 * eps_ * eval_helper_F(x[y_] + 1.0).value;
  }
  void subgradient(const Vector& x, Vector& g) const override {
    check_dim(x);
    g.assign(dim_, 0.0);
    g[y_] = 4.0 * eps_ * eval_helper_F(x[y_] + 1.0).derivative;
  }
  std::size_t y_index() const { return y_; }
  double eps() const { return eps_; }
  void set_domain_radius(double D) { meta_.domain_radius_D = D; }

 private:
  std::size_t y_;
  double eps_;
};

// f(x) = sum_i (a_i/2) x_i^2 + b_i x_i + c.
class DiagonalQuadraticCost final : public Cost {
 public:
  using Cost::subgradient;
  DiagonalQuadraticCost(std::string id, Vector a, Vector b, double c)
      : Cost(a.size(), std::move(id)), a_(std::move(a)), b_(std::move(b)), c_(c) {
    double lo = a_.empty() ? 0.0 : a_[0], hi = lo;
    Vector p(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i) {
      lo = std::min(lo, a_[i]);
      hi = std::max(hi, a_[i]);
      if (a_[i] > 0.0)
        p[i] = -b_[i] / a_[i];
      else if (b_[i] != 0.0)
        throw InvalidParameter("diagonal quadratic is unbounded below");
    }
    meta_.smoothness_L = hi;
    meta_.strong_convexity_mu = std::max(lo, 0.0);
    optimum_ = Optimum{p, value(p)};
  }
  double value(const Vector& x) const override {
    check_dim(x);
    double s = c_;
    for (std::size_t i = 0; i < dim_; ++i) s += 0.5 * a_[i] * x[i] * x[i] + b_[i] * x[i];
    return s;
  }
  void subgradient(const Vector& x, Vector& g) const override {
    check_dim(x);
    g.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i) g[i] = a_[i] * x[i] + b_[i];
  }
  void set_domain_radius(double D) { meta_.domain_radius_D = D; }

 private:
  Vector a_, b_;
  double c_;
};

// Two copies of the truncated tridiagonal chain, one per block of length n:
// h(v) = c (<Av, v> - 2 v_1) + (mu/2)|v|^2 with c = mu (kappa-1)/8 and
// A = tridiag(-1, 2, -1).
class NesterovChainCost final : public Cost {
 public:
  using Cost::subgradient;
  NesterovChainCost(std::size_t n, double kappa, double mu)
      : Cost(2 * n, "nesterov_chain"), n_(n), kappa_(kappa), mu_(mu), c_(mu * (kappa - 1.0) / 8.0) {
    if (!(kappa >= 1.0) || !(mu > 0.0)) throw InvalidParameter("nesterov_chain needs kappa >= 1, mu > 0");
    meta_.smoothness_L = mu * kappa;  // 2c * lambda_max(A) + mu <= 8c + mu
    meta_.strong_convexity_mu = mu;
    block_opt_ = solve_block_optimum();
    Vector p(dim_);
    for (std::size_t i = 0; i < n_; ++i) p[i] = p[n_ + i] = block_opt_[i];
    optimum_ = Optimum{p, value(p)};
  }

  double q() const { return (std::sqrt(kappa_) - 1.0) / (std::sqrt(kappa_) + 1.0); }
  std::size_t block_size() const { return n_; }
  const Vector& block_optimum() const { return block_opt_; }

  double value(const Vector& x) const override {
    check_dim(x);
    return block_value(x.data()) + block_value(x.data() + n_);
  }
  void subgradient(const Vector& x, Vector& g) const override {
    check_dim(x);
    g.resize(dim_);
    block_grad(x.data(), g.data());
    block_grad(x.data() + n_, g.data() + n_);
  }

 private:
  double block_value(const double* v) const {
    double quad = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double av = 2.0 * v[i];
      if (i > 0) av -= v[i - 1];
      if (i + 1 < n_) av -= v[i + 1];
      quad += av * v[i];
      sq += v[i] * v[i];
    }
    return c_ * (quad - 2.0 * v[0]) + 0.5 * mu_ * sq;
  }
  void block_grad(const double* v, double* g) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double av = 2.0 * v[i];
      if (i > 0) av -= v[i - 1];
      if (i + 1 < n_) av -= v[i + 1];
      g[i] = 2.0 * c_ * av + mu_ * v[i];
    }
    g[0] -= 2.0 * c_;
  }
  // (2cA + mu I) v = 2c e_1, tridiagonal; Thomas elimination.
  Vector solve_block_optimum() const {
    const double diag = 4.0 * c_ + mu_, off = -2.0 * c_;
    Vector cp(n_), dp(n_), v(n_);
    cp[0] = off / diag;
    dp[0] = 2.0 * c_ / diag;
    for (std::size_t i = 1; i < n_; ++i) {
      const double den = diag - off * cp[i - 1];
      cp[i] = off / den;
      dp[i] = (0.0 - off * dp[i - 1]) / den;
    }
    v[n_ - 1] = dp[n_ - 1];
    for (std::size_t i = n_ - 1; i-- > 0;) v[i] = dp[i] - cp[i] * v[i + 1];
    return v;
  }

  std::size_t n_;
  double kappa_, mu_, c_;
  Vector block_opt_;
};

// f(x) = 1/2 (x-c)^T A (x-c) with spectrum in [mu, L].
class QuadraticCost final : public Cost {
 public:
  using Cost::subgradient;
  QuadraticCost(std::string id, Eigen::MatrixXd A, Eigen::VectorXd c, double mu, double L)
      : Cost(std::size_t(A.rows()), std::move(id)), A_(std::move(A)), c_(std::move(c)) {
    meta_.smoothness_L = L;
    meta_.strong_convexity_mu = mu;
    optimum_ = Optimum{Vector(c_.data(), c_.data() + c_.size()), 0.0};
  }

  // Random orthogonal eigenbasis; eigenvalues span [mu, L] with both ends present.
  static std::shared_ptr<QuadraticCost> random(std::size_t dim, double mu, double L, RngStream& rng,
                                               double center_scale = 1.0) {
    Eigen::MatrixXd M(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) M(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    const Eigen::MatrixXd Q = qr.householderQ();
    Eigen::VectorXd lam(dim);
    for (std::size_t i = 0; i < dim; ++i)
      lam[i] = i == 0 ? mu : (i == 1 ? L : mu + (L - mu) * rng.uniform());
    Eigen::MatrixXd A = Q * lam.asDiagonal() * Q.transpose();
    A = 0.5 * (A + A.transpose());
    Eigen::VectorXd c(dim);
    for (std::size_t i = 0; i < dim; ++i) c[i] = center_scale * (2.0 * rng.uniform() - 1.0);
    return std::make_shared<QuadraticCost>("random_quadratic", std::move(A), std::move(c), mu, L);
  }

  double value(const Vector& x) const override {
    check_dim(x);
    const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(x.data(), Eigen::Index(dim_)) - c_;
    return 0.5 * d.dot(A_ * d);
  }
  void subgradient(const Vector& x, Vector& g) const override {
    check_dim(x);
    g.resize(dim_);
    const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(x.data(), Eigen::Index(dim_)) - c_;
    Eigen::Map<Eigen::VectorXd>(g.data(), Eigen::Index(dim_)) = A_ * d;
  }
  const Eigen::MatrixXd& matrix() const { return A_; }

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd c_;
};

// ---------------------------------------------------------------------------
// Nonsmooth constructions built on G.
//
// Layout (0-based): x_err [0,T), y [T,2T), z [2T,3T), w = 3T, optional dummy
// u = 3T+1. The strongly convex flavour shifts x_err by shift*e_1 inside G and
// adds (mu/2)|(x_err,y,z)|^2 + w + (mu/2)w^2 (+ (mu/2)u^2).

class NestedMaxCost final : public Cost {
  // Accessors for the G blocks; x_err carries the shift on its first entry.
  auto xf(const Vector& x) const {
    return [&x, s = shift_](std::size_t j) { return j == 0 ? x[0] + s : x[j]; };
  }
  auto yf(const Vector& x) const {
    return [&x, T = T_](std::size_t j) { return x[T + j]; };
  }
  auto zf(const Vector& x) const {
    return [&x, T = T_](std::size_t j) { return x[2 * T + j]; };
  }

 public:
  using Cost::subgradient;
  // mu == 0: G(x_err,y,z) + 2 eps max(w+1, 0).
  NestedMaxCost(std::string id, std::size_t T, double eps, double mu, double shift, bool with_dummy)
      : Cost(3 * T + 1 + (with_dummy ? 1 : 0), std::move(id)), T_(T), eps_(eps), mu_(mu), shift_(shift),
        dummy_(with_dummy) {
    Vector p(dim_, 0.0);
    if (mu_ == 0.0) {
      meta_.lipschitz_G = std::sqrt(kHelperGGradNormSqBound) + 2.0 * eps;
      p[w_index()] = -1.0;
      optimum_ = Optimum{p, 0.0};
    } else {
      meta_.strong_convexity_mu = mu_;
      // |x1 + shift| + (mu/2) x1^2 is minimised at x1 = -min(shift, 1/mu).
      p[0] = -std::min(shift_, 1.0 / mu_);
      p[w_index()] = -1.0 / mu_;
      optimum_ = Optimum{p, value(p)};
    }
  }

  std::size_t T() const { return T_; }
  std::size_t w_index() const { return 3 * T_; }
  std::size_t dummy_index() const { return 3 * T_ + 1; }
  bool has_dummy() const { return dummy_; }

  GBranch active_branch(const Vector& x) const {
    return helper_G_argmax(T_, xf(x), yf(x), zf(x));
  }

  double value(const Vector& x) const override {
    check_dim(x);
    const double g = ramp(active_branch(x).value);
    const double w = x[w_index()];
    if (mu_ == 0.0) return g + 2.0 * eps_ * ramp(w + 1.0);
    double sq = 0.0;
    for (std::size_t i = 0; i < 3 * T_; ++i) sq += x[i] * x[i];
    double v = g + 0.5 * mu_ * sq + w + 0.5 * mu_ * w * w;
    if (dummy_) v += 0.5 * mu_ * x[dummy_index()] * x[dummy_index()];
    return v;
  }

  void subgradient(const Vector& x, Vector& g) const override {
    check_dim(x);
    g.assign(dim_, 0.0);
    const GBranch b = active_branch(x);
    helper_G_accumulate(b, xf(x), yf(x), zf(x), g.data(), g.data() + T_, g.data() + 2 * T_);
    const double w = x[w_index()];
    if (mu_ == 0.0) {
      g[w_index()] = w + 1.0 >= 0.0 ? 2.0 * eps_ : 0.0;
      return;
    }
    for (std::size_t i = 0; i < 3 * T_; ++i) g[i] += mu_ * x[i];
    g[w_index()] = 1.0 + mu_ * w;
    if (dummy_) g[dummy_index()] = mu_ * x[dummy_index()];
  }

 private:
  std::size_t T_;
  double eps_, mu_, shift_;
  bool dummy_;
};

// max{0, x_err[i] + y[i]} plus a w-term. Layout: x_err [0,T), y [T,2T), w = 2T,
// then for the plain flavour a dummy u = 2T+1.
//   plain:           + 2 eps max(w+1, 0)
//   strongly convex: + w + (mu/2)|(x_err, y, w)|^2
class PairMaxCost final : public Cost {
 public:
  using Cost::subgradient;
  PairMaxCost(std::string id, std::size_t T, double eps, double mu)
      : Cost(mu == 0.0 ? 2 * T + 2 : 2 * T + 1, std::move(id)), T_(T), eps_(eps), mu_(mu) {
    Vector p(dim_, 0.0);
    if (mu_ == 0.0) {
      meta_.lipschitz_G = std::sqrt(2.0) + 2.0 * eps;
      p[2 * T_] = -1.0;
      optimum_ = Optimum{p, 0.0};
    } else {
      meta_.strong_convexity_mu = mu_;
      p[2 * T_] = -1.0 / mu_;
      optimum_ = Optimum{p, value(p)};
    }
  }

  std::size_t T() const { return T_; }

  // 0: the constant; otherwise the 1-based pair index.
  std::size_t active_pair(const Vector& x) const {
    double best = 0.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < T_; ++i) {
      const double v = x[i] + x[T_ + i];
      if (v > best) {
        best = v;
        arg = i + 1;
      }
    }
    return arg;
  }

  double value(const Vector& x) const override {
    check_dim(x);
    const std::size_t a = active_pair(x);
    const double m = a ? x[a - 1] + x[T_ + a - 1] : 0.0;
    const double w = x[2 * T_];
    if (mu_ == 0.0) return m + 2.0 * eps_ * ramp(w + 1.0);
    double sq = 0.0;
    for (std::size_t i = 0; i <= 2 * T_; ++i) sq += x[i] * x[i];
    return m + w + 0.5 * mu_ * sq;
  }

  void subgradient(const Vector& x, Vector& g) const override {
    check_dim(x);
    g.assign(dim_, 0.0);
    if (const std::size_t a = active_pair(x)) {
      g[a - 1] = 1.0;
      g[T_ + a - 1] = 1.0;
    }
    const double w = x[2 * T_];
    if (mu_ == 0.0) {
      g[2 * T_] = w + 1.0 >= 0.0 ? 2.0 * eps_ : 0.0;
      return;
    }
    for (std::size_t i = 0; i <= 2 * T_; ++i) g[i] += mu_ * x[i];
    g[2 * T_] += 1.0;
  }

 private:
  std::size_t T_;
  double eps_, mu_;
};

// ---------------------------------------------------------------------------
// Parametric one-dimensional families

enum class ThetaVariant { interval_quadratic, sco };

// interval_quadratic: 100 eps (x-theta)^2 on [-1,1], theta in [-1,1].
// sco:                200 eps (x^2/2 - theta x) on [1,2], theta in [1,2].
// Both continue linearly (C^1) outside their interval.
class ThetaFamilyCost final : public Cost {
 public:
  using Cost::subgradient;
  ThetaFamilyCost(ThetaVariant variant, double theta, double eps)
      : Cost(1, variant == ThetaVariant::sco ? "theta_sco" : "theta_quadratic"), variant_(variant), theta_(theta),
        eps_(eps) {
    const auto [lo, hi] = interval();
    if (!(theta >= lo && theta <= hi)) throw InvalidParameter("theta outside the family's range");
    if (!(eps > 0.0)) throw InvalidParameter("epsilon must be positive");
    meta_.smoothness_L = 200.0 * eps;
    meta_.lipschitz_G = 200.0 * eps * (hi - lo);
    optimum_ = Optimum{{theta}, inner_value(theta)};
  }

  ThetaVariant variant() const { return variant_; }
  double theta() const { return theta_; }
  double eps() const { return eps_; }
  std::pair<double, double> interval() const {
    return variant_ == ThetaVariant::sco ? std::pair{1.0, 2.0} : std::pair{-1.0, 1.0};
  }

  double derivative(double x) const {
    const auto [lo, hi] = interval();
    return inner_deriv(std::clamp(x, lo, hi));
  }
  double value(const Vector& v) const override {
    check_dim(v);
    const double x = v[0];
    const auto [lo, hi] = interval();
    if (x > hi) return inner_value(hi) + inner_deriv(hi) * (x - hi);
    if (x < lo) return inner_value(lo) + inner_deriv(lo) * (x - lo);
    return inner_value(x);
  }
  void subgradient(const Vector& v, Vector& g) const override {
    check_dim(v);
    g.assign(1, derivative(v[0]));
  }

 private:
  double inner_value(double x) const {
    if (variant_ == ThetaVariant::sco) return 200.0 * eps_ * (0.5 * x * x - theta_ * x);
    return 100.0 * eps_ * (x - theta_) * (x - theta_);
  }
  double inner_deriv(double x) const { return 200.0 * eps_ * (x - theta_); }

  ThetaVariant variant_;
  double theta_, eps_;
};

// ---------------------------------------------------------------------------
// Finite sums

class FiniteSum final : public Cost {
 public:
  using Cost::subgradient;
  FiniteSum(std::string id, std::vector<CostPtr> components, std::optional<Optimum> opt = std::nullopt)
      : Cost(components.empty() ? 0 : components.front()->dim(), std::move(id)), comps_(std::move(components)) {
    if (comps_.empty()) throw InvalidParameter("finite sum needs at least one component");
    std::optional<double> G = 0.0;
    for (const auto& c : comps_) {
      if (c->dim() != dim_) throw InvalidInput("finite sum components differ in dimension");
      if (!c->meta().lipschitz_G) G.reset();
      if (G) G = std::max(*G, *c->meta().lipschitz_G);
    }
    meta_.lipschitz_G = G;
    optimum_ = std::move(opt);
  }

  std::size_t m() const { return comps_.size(); }
  const Cost& component(std::size_t i) const {
    if (i >= comps_.size()) throw InvalidInput("component index out of range");
    return *comps_[i];
  }
  void set_domain_radius(double D) { meta_.domain_radius_D = D; }

  double value(const Vector& x) const override {
    check_dim(x);
    double s = 0.0;
    for (const auto& c : comps_) s += c->value(x);
    return s / double(comps_.size());
  }
  void subgradient(const Vector& x, Vector& g) const override {
    check_dim(x);
    g.assign(dim_, 0.0);
    Vector gi;
    for (const auto& c : comps_) {
      c->subgradient(x, gi);
      for (std::size_t k = 0; k < dim_; ++k) g[k] += gi[k];
    }
    for (double& v : g) v /= double(comps_.size());
  }

 private:
  std::vector<CostPtr> comps_;
};

inline double finite_sum_eval(const FiniteSum& fs, const Vector& x) { return fs.value(x); }

// f(x) = (1/sqrt(d)) sum_j |x_j - c_j|; 1-Lipschitz.
class ScaledL1Cost final : public Cost {
 public:
  using Cost::subgradient;
  explicit ScaledL1Cost(Vector center) : Cost(center.size(), "scaled_l1"), c_(std::move(center)) {
    meta_.lipschitz_G = 1.0;
    optimum_ = Optimum{c_, 0.0};
  }
  double value(const Vector& x) const override {
    check_dim(x);
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) s += std::fabs(x[j] - c_[j]);
    return s / std::sqrt(double(dim_));
  }
  void subgradient(const Vector& x, Vector& g) const override {
    check_dim(x);
    g.resize(dim_);
    const double s = 1.0 / std::sqrt(double(dim_));
    for (std::size_t j = 0; j < dim_; ++j) g[j] = sign_pos(x[j] - c_[j]) * s;
  }
  const Vector& center() const { return c_; }

 private:
  Vector c_;
};

// 1/2 (x - c)^2 summed over coordinates; used for small finite-sum checks.
class CenteredSquareCost final : public Cost {
 public:
  using Cost::subgradient;
  explicit CenteredSquareCost(Vector center) : Cost(center.size(), "centered_square"), c_(std::move(center)) {
    meta_.smoothness_L = 1.0;
    meta_.strong_convexity_mu = 1.0;
    optimum_ = Optimum{c_, 0.0};
  }
  double value(const Vector& x) const override {
    check_dim(x);
    return 0.5 * dist_sq(x, c_);
  }
  void subgradient(const Vector& x, Vector& g) const override {
    check_dim(x);
    g.resize(dim_);
    for (std::size_t j = 0; j < dim_; ++j) g[j] = x[j] - c_[j];
  }

 private:
  Vector c_;
};

// Average of m scaled-L1 components; the minimiser is the coordinate-wise median (m odd).
inline std::shared_ptr<FiniteSum> make_median_finite_sum(std::size_t m, std::size_t dim, RngStream& rng,
                                                         double spread = 0.5) {
  if (m % 2 == 0) throw InvalidParameter("median finite sum needs an odd number of components");
  std::vector<Vector> centers(m, Vector(dim));
  for (auto& c : centers)
    for (double& v : c) v = spread * (2.0 * rng.uniform() - 1.0);
  std::vector<CostPtr> comps;
  for (auto& c : centers) comps.push_back(std::make_shared<ScaledL1Cost>(c));
  Vector med(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    Vector col(m);
    for (std::size_t i = 0; i < m; ++i) col[i] = centers[i][j];
    std::nth_element(col.begin(), col.begin() + long(m / 2), col.end());
    med[j] = col[m / 2];
  }
  double fmed = 0.0;
  for (const auto& c : comps) fmed += c->value(med);
  fmed /= double(m);
  return std::make_shared<FiniteSum>("finite_sum_median", std::move(comps), Optimum{med, fmed});
}

}  // namespace reprolab
