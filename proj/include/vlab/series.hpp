#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vlab/expr.hpp"
#include "vlab/numeric.hpp"

namespace vlab {

/// ln of a sequence term, kept finite where the term itself underflows.
/// Products, quotients and powers are expanded; -inf stands for a zero term.
inline double log_at(const Expr& e, long n) {
  switch (e.op()) {
    case Expr::Op::Mul:
      return log_at(e.lhs(), n) + log_at(e.rhs(), n);
    case Expr::Op::Div:
      return log_at(e.lhs(), n) - log_at(e.rhs(), n);
    case Expr::Op::Pow: {
      const double b = e.rhs().at(n);
      if (b == 0.0) return 0.0;
      const double la = log_at(e.lhs(), n);
      return b * la;
    }
    default: {
      const double v = e.at(n);
      return v > 0.0 ? std::log(v) : (v == 0.0 ? -kInf : std::numeric_limits<double>::quiet_NaN());
    }
  }
}

/// Positive series term given by its value and its logarithm.
struct SeriesTerm {
  std::function<double(long)> value;
  std::function<double(long)> log;

  static SeriesTerm from_expr(const Expr& e) {
    return {[e](long n) { return e.at(n); }, [e](long n) { return log_at(e, n); }};
  }
  static SeriesTerm from_log(std::function<double(long)> lg) {
    return {[lg](long n) { return std::exp(lg(n)); }, lg};
  }
};

struct ConvergenceCertificate {
  enum class Kind { Comparison, Geometric, Divergence };
  Kind kind = Kind::Comparison;
  double s = 0.0;      // Comparison: term <= C n^-s
  double C = 0.0;
  double ratio = 0.0;  // Geometric: term(n+1) <= ratio term(n)
  double c = 0.0;      // Divergence: term >= c / n
  long N = 1;
  long checked_window = 0;
};

inline std::string to_string(ConvergenceCertificate::Kind k) {
  switch (k) {
    case ConvergenceCertificate::Kind::Comparison: return "COMPARISON";
    case ConvergenceCertificate::Kind::Geometric: return "GEOMETRIC";
    case ConvergenceCertificate::Kind::Divergence: return "DIVERGENCE";
  }
  return "?";
}

enum class SeriesStatus { Converges, Diverges, Unknown };

inline std::string to_string(SeriesStatus s) {
  switch (s) {
    case SeriesStatus::Converges: return "CONVERGES";
    case SeriesStatus::Diverges: return "DIVERGES";
    case SeriesStatus::Unknown: return "UNKNOWN";
  }
  return "?";
}

struct SeriesVerdict {
  SeriesStatus status = SeriesStatus::Unknown;
  std::optional<ConvergenceCertificate> certificate;
  double partial_sum = 0.0;  // sum of term(n) for n0 <= n <= partial_to
  long partial_to = 0;
  double tail_bound = 0.0;  // bound on the sum beyond partial_to
  std::string reason;

  /// Upper bound on the full sum when convergent.
  double total_bound() const { return partial_sum + tail_bound; }
};

/// Search grid. Order is the search order; the first certificate found wins.
struct SeriesGrid {
  std::vector<double> s = {2.0, 3.0, 1.5};
  std::vector<double> C = {1.0, 10.0};
  std::vector<double> ratio = {0.5, 0.9, 0.99};
  std::vector<double> c = {1.0, 0.1, 0.01};
  long max_start = 1000;
  long window = 1000;
};

/// Compensated sum of term(n), from <= n <= to.
inline double partial_sum(const SeriesTerm& t, long from, long to) {
  if (to < from) throw Error(ErrorCode::PreconditionViolation, "partial_sum: to < from");
  KahanSum s;
  for (long n = from; n <= to; ++n) {
    const double v = t.value(n);
    if (!std::isfinite(v)) throw Error(ErrorCode::EvalFailure, "term undefined at n = " + std::to_string(n));
    s += v;
  }
  return s.value();
}
inline double partial_sum(const Expr& t, long from, long to) { return partial_sum(SeriesTerm::from_expr(t), from, to); }

namespace detail {

// margin(n) must satisfy sign * margin <= 0 and be monotone in the same sense
// (nonincreasing for sign = +1, nondecreasing for sign = -1).
inline bool margin_ok(double m, double sign) { return !std::isnan(m) && sign * m <= 1e-12 * (1.0 + std::fabs(m)); }
inline bool margin_step_ok(double m0, double m1, double sign) {
  if (std::isnan(m0) || std::isnan(m1)) return false;
  if (std::isinf(m0) && std::isinf(m1) && m0 == m1) return true;
  return sign * (m1 - m0) <= 1e-12 * (1.0 + std::fabs(m0));
}

// Smallest N in [lo, hi] such that margin passes on [N, N + window].
inline std::optional<long> first_window(const std::vector<double>& m, long base, long lo, long hi, long window,
                                        double sign) {
  const long len = static_cast<long>(m.size());
  // bad[i] = 1 when index base+i fails the pointwise or the step condition to i+1.
  std::vector<int> prefix(m.size() + 1, 0);
  for (long i = 0; i < len; ++i) {
    const bool ok = margin_ok(m[static_cast<std::size_t>(i)], sign) &&
                    (i + 1 >= len || margin_step_ok(m[static_cast<std::size_t>(i)], m[static_cast<std::size_t>(i + 1)], sign));
    prefix[static_cast<std::size_t>(i + 1)] = prefix[static_cast<std::size_t>(i)] + (ok ? 0 : 1);
  }
  for (long N = lo; N <= hi; ++N) {
    const long a = N - base, b = N + window - base;  // indices a..b, steps a..b-1
    if (a < 0 || b >= len) break;
    // Step condition at b is outside the window; check pointwise at b separately.
    const int bad = prefix[static_cast<std::size_t>(b)] - prefix[static_cast<std::size_t>(a)];
    if (bad == 0 && margin_ok(m[static_cast<std::size_t>(b)], sign)) return N;
  }
  return std::nullopt;
}

}  // namespace detail

/// Log-margin of a certificate at n: nonpositive and nonincreasing for
/// upper (convergence) certificates, nonnegative and nondecreasing for divergence.
inline double certificate_margin(const ConvergenceCertificate& c, const SeriesTerm& t, long n) {
  const double ln = std::log(static_cast<double>(n));
  switch (c.kind) {
    case ConvergenceCertificate::Kind::Comparison: return t.log(n) - (std::log(c.C) - c.s * ln);
    case ConvergenceCertificate::Kind::Geometric: {
      const double a = t.log(n), b = t.log(n + 1);
      if (std::isinf(a) && a < 0) return b == a ? -kInf : kInf;
      return b - a - std::log(c.ratio);
    }
    case ConvergenceCertificate::Kind::Divergence: return t.log(n) - (std::log(c.c) - ln);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace detail {

inline void fill_sums(SeriesVerdict& v, const SeriesTerm& t, long n0) {
  const auto& c = *v.certificate;
  v.partial_to = c.N + c.checked_window;
  v.partial_sum = partial_sum(t, n0, v.partial_to);
  const double Np = static_cast<double>(v.partial_to);
  if (c.kind == ConvergenceCertificate::Kind::Comparison) {
    v.tail_bound = c.C * std::pow(Np, 1.0 - c.s) / (c.s - 1.0);
  } else if (c.kind == ConvergenceCertificate::Kind::Geometric) {
    v.tail_bound = t.value(v.partial_to) * c.ratio / (1.0 - c.ratio);
  } else {
    v.tail_bound = kInf;
  }
}

}  // namespace detail

/// Certifies convergence or divergence of sum_{n >= n0} term(n) by windowed
/// domination with a monotone log-margin; UNKNOWN when the grid yields nothing.
inline SeriesVerdict certify(const SeriesTerm& t, long n0, const SeriesGrid& grid = {}) {
  SeriesVerdict out;
  n0 = std::max(n0, 1L);
  try {
    const long lo = n0, hi = n0 + grid.max_start;
    const long last = hi + grid.window + 1;
    std::vector<double> logs(static_cast<std::size_t>(last - n0 + 2));
    for (long n = n0; n <= last + 1; ++n) logs[static_cast<std::size_t>(n - n0)] = t.log(n);

    auto margins = [&](const ConvergenceCertificate& c) {
      std::vector<double> m(static_cast<std::size_t>(last - n0 + 1));
      for (long n = n0; n <= last; ++n) {
        const double ln = std::log(static_cast<double>(n));
        const double lt = logs[static_cast<std::size_t>(n - n0)];
        double v = 0.0;
        switch (c.kind) {
          case ConvergenceCertificate::Kind::Comparison: v = lt - (std::log(c.C) - c.s * ln); break;
          case ConvergenceCertificate::Kind::Divergence: v = lt - (std::log(c.c) - ln); break;
          case ConvergenceCertificate::Kind::Geometric: {
            const double nx = logs[static_cast<std::size_t>(n + 1 - n0)];
            v = (std::isinf(lt) && lt < 0) ? (nx == lt ? -kInf : kInf) : nx - lt - std::log(c.ratio);
            break;
          }
        }
        m[static_cast<std::size_t>(n - n0)] = v;
      }
      return m;
    };

    auto attempt = [&](ConvergenceCertificate c, double sign) -> bool {
      c.checked_window = grid.window;
      if (auto N = detail::first_window(margins(c), n0, lo, hi, grid.window, sign)) {
        c.N = *N;
        out.certificate = c;
        return true;
      }
      return false;
    };

    for (double s : grid.s)
      for (double C : grid.C) {
        ConvergenceCertificate c;
        c.kind = ConvergenceCertificate::Kind::Comparison;
        c.s = s;
        c.C = C;
        if (attempt(c, 1.0)) {
          out.status = SeriesStatus::Converges;
          detail::fill_sums(out, t, n0);
          return out;
        }
      }
    for (double r : grid.ratio) {
      ConvergenceCertificate c;
      c.kind = ConvergenceCertificate::Kind::Geometric;
      c.ratio = r;
      if (attempt(c, 1.0)) {
        out.status = SeriesStatus::Converges;
        detail::fill_sums(out, t, n0);
        return out;
      }
    }
    for (double cc : grid.c) {
      ConvergenceCertificate c;
      c.kind = ConvergenceCertificate::Kind::Divergence;
      c.c = cc;
      if (attempt(c, -1.0)) {
        out.status = SeriesStatus::Diverges;
        out.partial_to = out.certificate->N + grid.window;
        out.partial_sum = partial_sum(t, n0, out.partial_to);
        out.tail_bound = kInf;
        return out;
      }
    }
    out.reason = "no certificate on the search grid";
  } catch (const Error& e) {
    out = SeriesVerdict{};
    out.reason = e.what();
  }
  return out;
}
inline SeriesVerdict certify(const Expr& t, long n0, const SeriesGrid& grid = {}) {
  return certify(SeriesTerm::from_expr(t), n0, grid);
}

struct RecheckResult {
  bool ok = true;
  long checked = 0;
  std::optional<long> first_failure;
};

/// Re-validates a certificate at `fresh` indices beyond its window, and over
/// the window itself: the pointwise inequality and the margin monotonicity.
inline RecheckResult recheck(const ConvergenceCertificate& c, const SeriesTerm& t, long fresh = 10000) {
  RecheckResult r;
  const double sign = c.kind == ConvergenceCertificate::Kind::Divergence ? -1.0 : 1.0;
  const long end = c.N + c.checked_window + fresh;
  double prev = certificate_margin(c, t, c.N);
  for (long n = c.N; n <= end; ++n) {
    const double m = n == c.N ? prev : certificate_margin(c, t, n);
    const bool step = n == c.N || n > c.N + c.checked_window || detail::margin_step_ok(prev, m, sign);
    ++r.checked;
    if (!detail::margin_ok(m, sign) || !step) {
      r.ok = false;
      r.first_failure = n;
      return r;
    }
    prev = m;
  }
  return r;
}

}  // namespace vlab
