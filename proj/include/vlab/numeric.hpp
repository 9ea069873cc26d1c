#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <string>

namespace vlab {

/// Comparison tolerance for endpoints and piece values.
inline constexpr double kTol = 1e-12;

/// Upper cap M on exponent values.
inline constexpr double kExponentCap = 64.0;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool near(double a, double b, double tol = kTol) { return std::fabs(a - b) <= tol; }

/// Neumaier-compensated accumulator. Order-dependent only at the level of the
/// final rounding, which is what the summation regression tests rely on.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::fabs(sum) >= std::fabs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  KahanSum& operator+=(double v) {
    add(v);
    return *this;
  }
  double value() const { return sum + comp; }
};

/// Evaluation budget for quadrature and series work; VLAB_EVAL_BUDGET overrides.
inline std::int64_t eval_budget(std::int64_t fallback = 100000) {
  if (const char* env = std::getenv("VLAB_EVAL_BUDGET")) {
    char* end = nullptr;
    long long v = std::strtoll(env, &end, 10);
    if (end != env && v > 0) return v;
  }
  return fallback;
}

/// Bisection on a monotone predicate: returns the boundary between lo (pred
/// false) and hi (pred true), stopping when the bracket width drops below
/// rel_tol * max(1, |hi|) or no representable midpoint remains.
template <typename Pred>
double bisect_boundary(Pred pred, double lo, double hi, double rel_tol = 1e-15, int max_iter = 400) {
  for (int i = 0; i < max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (hi - lo <= rel_tol * std::fmax(1.0, std::fabs(hi))) break;
    if (pred(mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// 64-bit FNV-1a digest, used for input fingerprints in reports.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace vlab
