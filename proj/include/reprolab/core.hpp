#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace reprolab {

using Vector = std::vector<double>;

// Error taxonomy. Each maps to one CLI exit code further up.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidInput : Error {
  using Error::Error;
};
struct InvalidParameter : Error {
  using Error::Error;
};
struct ResourceError : Error {
  using Error::Error;
};
struct ScheduleExhausted : Error {
  using Error::Error;
};
struct ContractViolation : Error {
  using Error::Error;
};
struct Unsupported : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

inline double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_sq(const Vector& a) { return dot(a, a); }
inline double norm(const Vector& a) { return std::sqrt(norm_sq(a)); }

inline double dist_sq(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline bool all_finite(const Vector& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline void require_same_dim(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size())
    throw InvalidInput(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                       " vs " + std::to_string(b.size()) + ")");
}

// In-place rescale onto the closed ball of radius D around the origin.
inline void project_ball_inplace(Vector& x, double D) {
  const double n = norm(x);
  if (n <= D) return;
  const double s = D / n;
  for (double& v : x) v *= s;
}

inline Vector project_ball(const Vector& x, double D) {
  if (!(D > 0.0) || !std::isfinite(D)) throw InvalidInput("project_ball: radius must be positive");
  if (!all_finite(x)) throw InvalidInput("project_ball: non-finite input");
  Vector out = x;
  project_ball_inplace(out, D);
  return out;
}

inline Vector unit_vector(std::size_t dim, std::size_t k) {
  Vector e(dim, 0.0);
  e.at(k) = 1.0;
  return e;
}

}  // namespace reprolab
