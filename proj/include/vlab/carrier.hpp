#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "vlab/expr.hpp"
#include "vlab/interval.hpp"
#include "vlab/step_function.hpp"

namespace vlab {

/// Largest tail index searched when locating points near 1.
inline constexpr long kTailIndexCap = 1000000;
/// Number of tail terms inspected when certifying monotone or increasing behaviour.
inline constexpr long kTailWindow = 1000;

// ---------------------------------------------------------------------------
// Monotone segmentation of expressions
// ---------------------------------------------------------------------------

/// Subinterval of an expression piece on which the derivative has a certified
/// sign: -1 nonincreasing, +1 nondecreasing, 0 constant. dir == 2 marks a tiny
/// cell where the sign could not be resolved (typically a critical point).
struct MonoSeg {
  double lo;
  double hi;
  int dir;
};

namespace detail {

inline int derivative_sign(const Expr& d, double a, double b) {
  const auto r = d.enclose(a, b);
  if (!r.ok) return 2;
  if (r.lo >= 0.0 && r.hi <= 0.0) return 0;
  if (r.lo >= 0.0) return 1;
  if (r.hi <= 0.0) return -1;
  return 2;
}

inline void segment_rec(const Expr& d, double a, double b, double min_width, std::vector<MonoSeg>& out,
                        int& budget) {
  int s = derivative_sign(d, a, b);
  if (s != 2 || b - a <= min_width || budget <= 0) {
    out.push_back({a, b, s});
    return;
  }
  --budget;
  const double m = 0.5 * (a + b);
  segment_rec(d, a, m, min_width, out, budget);
  segment_rec(d, m, b, min_width, out, budget);
}

}  // namespace detail

/// Splits [lo, hi] into maximal runs where e is certified monotone. Returns
/// nullopt when too many unresolved cells remain (non-segmentable input).
inline std::optional<std::vector<MonoSeg>> monotone_segments(const Expr& e, double lo, double hi,
                                                             int max_unresolved = 64) {
  if (!e.depends_on_var()) return std::vector<MonoSeg>{{lo, hi, 0}};
  const Expr d = e.derivative();
  std::vector<MonoSeg> raw;
  int budget = 200000;
  detail::segment_rec(d, lo, hi, std::fmax(1e-10, (hi - lo) * 1e-10), raw, budget);
  std::vector<MonoSeg> out;
  int unresolved = 0;
  for (const auto& s : raw) {
    if (s.dir == 2) ++unresolved;
    if (!out.empty()) {
      auto& back = out.back();
      const bool compatible = back.dir != 2 && s.dir != 2 &&
                              (back.dir == s.dir || back.dir == 0 || s.dir == 0);
      if (compatible) {
        back.hi = s.hi;
        if (back.dir == 0) back.dir = s.dir;
        continue;
      }
      if (back.dir == 2 && s.dir == 2) {
        back.hi = s.hi;
        continue;
      }
    }
    out.push_back(s);
  }
  if (unresolved > max_unresolved) return std::nullopt;
  return out;
}

// ---------------------------------------------------------------------------
// Expression-defined piecewise functions
// ---------------------------------------------------------------------------

class ExprPiecewise {
 public:
  struct Piece {
    Interval iv;
    Expr expr;
  };

  ExprPiecewise() = default;
  explicit ExprPiecewise(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
    std::sort(pieces_.begin(), pieces_.end(), [](const Piece& a, const Piece& b) { return a.iv.lo < b.iv.lo; });
    for (std::size_t i = 1; i < pieces_.size(); ++i)
      if (pieces_[i].iv.lo < pieces_[i - 1].iv.hi - kTol)
        throw Error(ErrorCode::PreconditionViolation, "expression pieces overlap");
    for (const auto& p : pieces_) validate(p);
  }
  /// Single expression over [0, 1).
  explicit ExprPiecewise(const Expr& e) : ExprPiecewise(std::vector<Piece>{{Interval(0.0, 1.0), e}}) {}

  std::span<const Piece> pieces() const { return pieces_; }

  double operator()(const Point& p) const {
    for (const auto& pc : pieces_)
      if (pc.iv.contains(p)) return pc.expr.eval(p.x, p.u);
    return 0.0;
  }
  double operator()(double t) const { return (*this)(Point::at(t)); }

 private:
  static void validate(const Piece& p) {
    constexpr int kSamples = 1000;
    for (int i = 0; i <= kSamples; ++i) {
      const double frac = static_cast<double>(i) / kSamples;
      double x = p.iv.lo + frac * p.iv.measure();
      if (i == kSamples) x = p.iv.hi - 1e-9 * p.iv.measure();
      const double u = (p.iv.hi >= 1.0 && i == kSamples) ? 1e-9 * p.iv.measure() : 1.0 - x;
      const double v = p.expr.eval(x, u);
      if (!std::isfinite(v))
        throw Error(ErrorCode::EvalFailure, "expression " + p.expr.to_string() + " undefined at x=" + std::to_string(x));
    }
  }

  std::vector<Piece> pieces_;
};

// ---------------------------------------------------------------------------
// Tail families: prefix on [0, x_{n0}) plus values v_n on [x_n, x_{n+1})
// ---------------------------------------------------------------------------

using PrefixCarrier = std::variant<StepFunction, ExprPiecewise>;

class TailFamily {
 public:
  /// Eventual monotonicity of v_n over the verification window.
  struct ValueTrend {
    int direction = 0;  // -1 nonincreasing, +1 nondecreasing, 0 constant, 2 none
    long monotone_from = 0;
    std::optional<double> limit;
    double window_min = 0.0;
    double window_max = 0.0;
  };

  TailFamily(PrefixCarrier prefix, Expr x_n, Expr v_n, long n0)
      : prefix_(std::move(prefix)), x_n_(std::move(x_n)), v_n_(std::move(v_n)), gap_(x_n_.complement()), n0_(n0) {
    validate();
  }

  const PrefixCarrier& prefix() const { return prefix_; }
  const Expr& x_expr() const { return x_n_; }
  const Expr& v_expr() const { return v_n_; }
  long n0() const { return n0_; }
  const ValueTrend& trend() const { return trend_; }

  double endpoint(long n) const { return x_n_.at(n); }
  /// 1 - x_n evaluated without cancellation where the expression allows it.
  double gap(long n) const { return gap_.at(n); }
  double value(long n) const { return v_n_.at(n); }
  double cell_measure(long n) const { return gap(n) - gap(n + 1); }
  double start() const { return endpoint(n0_); }

  /// Index n with x_n <= p < x_{n+1}, or n0 - 1 if p lies in the prefix.
  long locate(const Point& p) const {
    if (p.u > gap(n0_)) return n0_ - 1;
    if (!(p.u > 0.0)) throw Error(ErrorCode::Unsupported, "tail family evaluated at 1");
    long lo = n0_, hi = n0_ + 1;
    while (gap(hi) >= p.u) {
      lo = hi;
      hi = n0_ + 2 * (hi - n0_);
      if (hi > kTailIndexCap) {
        hi = kTailIndexCap;
        if (gap(hi) >= p.u) throw Error(ErrorCode::Unsupported, "tail index cap exceeded");
        break;
      }
    }
    while (hi - lo > 1) {
      const long mid = lo + (hi - lo) / 2;
      if (gap(mid) >= p.u)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

  double operator()(const Point& p) const {
    const long n = locate(p);
    if (n < n0_) return std::visit([&](const auto& c) { return c(p); }, prefix_);
    return value(n);
  }
  double operator()(double t) const { return (*this)(Point::at(t)); }

  /// Bounds of v_n over n >= from, using the window plus the certified trend.
  std::pair<double, double> value_bounds_from(long from) const {
    double lo = kInf, hi = -kInf;
    const long last = std::max(from, trend_.monotone_from) + kTailWindow;
    for (long n = from; n <= last; ++n) {
      const double v = value(n);
      lo = std::fmin(lo, v);
      hi = std::fmax(hi, v);
    }
    if (trend_.limit) {
      lo = std::fmin(lo, *trend_.limit);
      hi = std::fmax(hi, *trend_.limit);
    } else {
      const double far = value(kTailIndexCap);
      lo = std::fmin(lo, far);
      hi = std::fmax(hi, far);
    }
    return {lo, hi};
  }

 private:
  void validate() {
    if (n0_ < 1) throw Error(ErrorCode::PreconditionViolation, "tail start index must be >= 1");
    double prev_gap = gap(n0_);
    if (!(prev_gap > 0.0) || !(prev_gap <= 1.0))
      throw Error(ErrorCode::PreconditionViolation, "tail endpoints must lie in [0,1)");
    for (long n = n0_ + 1; n <= n0_ + kTailWindow; ++n) {
      const double g = gap(n);
      if (!std::isfinite(g) || g < 0.0) throw Error(ErrorCode::EvalFailure, "tail endpoint undefined");
      if (g > 0.0 && !(g < prev_gap))
        throw Error(ErrorCode::PreconditionViolation, "tail endpoints x_n must be strictly increasing");
      if (g == 0.0 && prev_gap == 0.0) break;
      prev_gap = g;
      const double v = value(n);
      if (!std::isfinite(v)) throw Error(ErrorCode::EvalFailure, "tail value undefined at n=" + std::to_string(n));
    }
    if (auto lim = gap_.limit_at_infinity(); lim && *lim != 0.0)
      throw Error(ErrorCode::PreconditionViolation, "tail endpoints must increase to 1");
    const double prefix_end = std::visit(
        [](const auto& c) {
          if constexpr (std::is_same_v<std::decay_t<decltype(c)>, StepFunction>)
            return c.is_zero() ? 0.0 : c.cells().back().iv.hi;
          else
            return c.pieces().empty() ? 0.0 : c.pieces().back().iv.hi;
        },
        prefix_);
    if (prefix_end > start() + kTol)
      throw Error(ErrorCode::PreconditionViolation, "tail prefix extends past x_{n0}");
    compute_trend();
  }

  void compute_trend() {
    const long last = n0_ + kTailWindow;
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(kTailWindow + 1));
    for (long n = n0_; n <= last; ++n) v.push_back(value(n));
    trend_.window_min = *std::min_element(v.begin(), v.end());
    trend_.window_max = *std::max_element(v.begin(), v.end());
    trend_.limit = v_n_.limit_at_infinity();
    // Longest monotone suffix of the window decides the eventual direction.
    long from_dec = last, from_inc = last;
    for (long i = static_cast<long>(v.size()) - 1; i > 0; --i) {
      if (v[static_cast<std::size_t>(i)] <= v[static_cast<std::size_t>(i - 1)] + 1e-15) from_dec = n0_ + i - 1;
      else break;
    }
    for (long i = static_cast<long>(v.size()) - 1; i > 0; --i) {
      if (v[static_cast<std::size_t>(i)] >= v[static_cast<std::size_t>(i - 1)] - 1e-15) from_inc = n0_ + i - 1;
      else break;
    }
    const bool constant = trend_.window_max - trend_.window_min <= 1e-15;
    if (constant) {
      trend_.direction = 0;
      trend_.monotone_from = n0_;
    } else if (from_dec <= from_inc) {
      trend_.direction = -1;
      trend_.monotone_from = from_dec;
    } else {
      trend_.direction = 1;
      trend_.monotone_from = from_inc;
    }
    // The window only certifies eventual monotonicity if it covers most of it.
    if (trend_.monotone_from > n0_ + kTailWindow / 2) trend_.direction = 2;
    if (trend_.limit) {
      const double tail_v = v.back();
      if (trend_.direction == -1 && *trend_.limit > tail_v + 1e-12) trend_.direction = 2;
      if (trend_.direction == 1 && *trend_.limit < tail_v - 1e-12) trend_.direction = 2;
    }
  }

  PrefixCarrier prefix_;
  Expr x_n_;
  Expr v_n_;
  Expr gap_;
  long n0_;
  ValueTrend trend_;
};

/// A measurable function on [0,1) in any of the supported carrier forms.
using Function = std::variant<StepFunction, ExprPiecewise, TailFamily>;

inline double eval(const Function& f, const Point& p) {
  return std::visit([&](const auto& c) { return c(p); }, f);
}
inline double eval(const Function& f, double t) { return eval(f, Point::at(t)); }

inline bool is_step(const Function& f) { return std::holds_alternative<StepFunction>(f); }

// ---------------------------------------------------------------------------
// Segment decomposition
// ---------------------------------------------------------------------------

/// Piece of a carrier on which it is either a constant or a single expression.
struct Segment {
  Interval iv;
  double measure;
  std::optional<double> constant;
  Expr expr;
  bool from_tail = false;
  long tail_index = 0;

  double value_at(const Point& p) const { return constant ? *constant : expr.eval(p.x, p.u); }
};

struct SegmentList {
  std::vector<Segment> segs;
  /// Measure near 1 that could not be enumerated (double spacing or index cap).
  double leftover = 0.0;
  double leftover_lo = 0.0;
  double leftover_hi = 0.0;
};

namespace detail {

inline void push_const(SegmentList& out, double lo, double hi, double v) {
  if (hi > lo) out.segs.push_back({Interval(lo, hi), hi - lo, v, Expr{}, false, 0});
}

inline void step_segments(const StepFunction& f, double lo, double hi, SegmentList& out) {
  double cur = lo;
  for (const auto& c : f.cells()) {
    if (c.iv.hi <= lo) continue;
    if (c.iv.lo >= hi) break;
    const double a = std::fmax(c.iv.lo, lo), b = std::fmin(c.iv.hi, hi);
    push_const(out, cur, a, 0.0);
    push_const(out, a, b, c.value);
    cur = b;
  }
  push_const(out, cur, hi, 0.0);
}

inline void expr_segments(const ExprPiecewise& f, double lo, double hi, SegmentList& out) {
  double cur = lo;
  for (const auto& p : f.pieces()) {
    if (p.iv.hi <= lo) continue;
    if (p.iv.lo >= hi) break;
    const double a = std::fmax(p.iv.lo, lo), b = std::fmin(p.iv.hi, hi);
    push_const(out, cur, a, 0.0);
    if (b > a) {
      if (p.expr.is_const())
        push_const(out, a, b, p.expr.const_value());
      else
        out.segs.push_back({Interval(a, b), b - a, std::nullopt, p.expr, false, 0});
    }
    cur = b;
  }
  push_const(out, cur, hi, 0.0);
}

}  // namespace detail

/// Decomposes f over [lo, hi) into constant or single-expression segments.
inline SegmentList segments(const Function& f, double lo = 0.0, double hi = 1.0) {
  SegmentList out;
  if (!(hi > lo)) return out;
  if (const auto* s = std::get_if<StepFunction>(&f)) {
    detail::step_segments(*s, lo, hi, out);
  } else if (const auto* e = std::get_if<ExprPiecewise>(&f)) {
    detail::expr_segments(*e, lo, hi, out);
  } else {
    const auto& t = std::get<TailFamily>(f);
    const double start = t.start();
    if (lo < start) {
      const double phi = std::fmin(hi, start);
      std::visit(
          [&](const auto& c) {
            if constexpr (std::is_same_v<std::decay_t<decltype(c)>, StepFunction>)
              detail::step_segments(c, lo, phi, out);
            else
              detail::expr_segments(c, lo, phi, out);
          },
          t.prefix());
    }
    if (hi > start) {
      long n = lo <= start ? t.n0() : t.locate(Point::at(lo));
      for (; n < kTailIndexCap; ++n) {
        const double a = std::fmax(t.endpoint(n), lo);
        if (a >= hi) break;
        const double xn1 = t.endpoint(n + 1);
        if (!(xn1 < 1.0) || !(xn1 > a)) {
          if (hi < 1.0) {
            out.segs.push_back({Interval(a, hi), hi - a, t.value(n), Expr{}, true, n});
            return out;
          }
          // Remaining cells are below double resolution.
          const auto [vlo, vhi] = t.value_bounds_from(n);
          out.leftover = a == t.endpoint(n) ? t.gap(n) : 1.0 - a;
          out.leftover_lo = vlo;
          out.leftover_hi = vhi;
          return out;
        }
        const double b = std::fmin(xn1, hi);
        const bool full = a == t.endpoint(n) && b == xn1;
        out.segs.push_back({Interval(a, b), full ? t.cell_measure(n) : b - a, t.value(n), Expr{}, true, n});
      }
      if (n >= kTailIndexCap) {
        const auto [vlo, vhi] = t.value_bounds_from(n);
        out.leftover = t.gap(n);
        out.leftover_lo = vlo;
        out.leftover_hi = vhi;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Value bounds, level sets, monotonicity
// ---------------------------------------------------------------------------

/// Closed range of values of an expression over [a, b], from its monotone segments.
inline std::optional<std::pair<double, double>> expr_range(const Expr& e, double a, double b) {
  auto segs = monotone_segments(e, a, b);
  if (!segs) return std::nullopt;
  double lo = kInf, hi = -kInf;
  auto upd = [&](double v) {
    if (!std::isfinite(v)) return;
    lo = std::fmin(lo, v);
    hi = std::fmax(hi, v);
  };
  for (const auto& s : *segs) {
    upd(e.eval(s.lo, 1.0 - s.lo));
    upd(e.eval(s.hi, 1.0 - s.hi));
    if (s.dir == 2) {
      const auto r = e.enclose(s.lo, s.hi);
      if (r.ok && std::isfinite(r.lo) && std::isfinite(r.hi)) {
        upd(r.lo);
        upd(r.hi);
      }
    }
  }
  if (lo > hi) return std::nullopt;
  return std::make_pair(lo, hi);
}

/// Essential infimum and supremum of f over the positive-measure part of B.
inline std::pair<double, double> value_bounds(const Function& f, const IntervalSet& B) {
  if (B.measure() <= kTol) throw Error(ErrorCode::NullSet, "ess bounds over a null set");
  double lo = kInf, hi = -kInf;
  for (const auto& iv : B.intervals()) {
    const auto sl = segments(f, iv.lo, iv.hi);
    for (const auto& s : sl.segs) {
      if (s.measure <= 0.0) continue;
      if (s.constant) {
        lo = std::fmin(lo, *s.constant);
        hi = std::fmax(hi, *s.constant);
      } else {
        const auto r = expr_range(s.expr, s.iv.lo, s.iv.hi);
        if (!r) throw Error(ErrorCode::Unsupported, "expression cannot be monotone-segmented: " + s.expr.to_string());
        lo = std::fmin(lo, r->first);
        hi = std::fmax(hi, r->second);
      }
    }
    if (sl.leftover > 0.0) {
      lo = std::fmin(lo, sl.leftover_lo);
      hi = std::fmax(hi, sl.leftover_hi);
    }
  }
  return {lo, hi};
}

/// Value set described as a closed-interval condition lo <(=) v <(=) hi.
struct ValueBand {
  double lo;
  double hi;
  bool lo_closed;
  bool hi_closed;

  bool contains(double v) const {
    const bool a = lo_closed ? v >= lo : v > lo;
    const bool b = hi_closed ? v <= hi : v < hi;
    return a && b;
  }
};

namespace detail {

/// Preimage of a band under a monotone expression segment, found by bisection
/// on the segment's endpoints.
inline std::optional<Interval> monotone_preimage(const Expr& e, const MonoSeg& s, const ValueBand& band) {
  const double a = s.lo, b = s.hi;
  if (s.dir == 0 || s.dir == 2) {
    const double mid = 0.5 * (a + b);
    if (band.contains(e.eval(mid, 1.0 - mid))) return Interval(a, b);
    return std::nullopt;
  }
  auto above_lo = [&](double x) {
    const double v = e.eval(x, 1.0 - x);
    return band.lo_closed ? v >= band.lo : v > band.lo;
  };
  auto below_hi = [&](double x) {
    const double v = e.eval(x, 1.0 - x);
    return band.hi_closed ? v <= band.hi : v < band.hi;
  };
  // On a monotone piece each band condition flips at most once.
  double l = a, r = b;
  if (s.dir > 0) {
    if (!above_lo(b) || !below_hi(a)) return std::nullopt;
    l = above_lo(a) ? a : bisect_boundary(above_lo, a, b);
    r = below_hi(b) ? b : bisect_boundary([&](double x) { return !below_hi(x); }, a, b);
  } else {
    if (!below_hi(b) || !above_lo(a)) return std::nullopt;
    l = below_hi(a) ? a : bisect_boundary(below_hi, a, b);
    r = above_lo(b) ? b : bisect_boundary([&](double x) { return !above_lo(x); }, a, b);
  }
  if (!(r > l)) return std::nullopt;
  const double m = 0.5 * (l + r);
  if (!band.contains(e.eval(m, 1.0 - m))) return std::nullopt;
  return Interval(l, r);
}

}  // namespace detail

/// Level set {t : f(t) in band} as an interval set, plus its measure computed
/// from cell measures (which stays accurate for tail cells below double spacing).
struct LevelSet {
  IntervalSet set;
  double measure = 0.0;
  /// ess inf / sup of f over the level set (NaN when it is null).
  double inf = std::nan("");
  double sup = std::nan("");
};

inline LevelSet level_set(const Function& f, const ValueBand& band) {
  std::vector<Interval> ivs;
  KahanSum m;
  double inf = kInf, sup = -kInf;
  auto note = [&](double v) {
    inf = std::fmin(inf, v);
    sup = std::fmax(sup, v);
  };
  const TailFamily* tail = std::get_if<TailFamily>(&f);
  auto handle = [&](const Segment& s) {
    if (s.constant) {
      if (band.contains(*s.constant)) {
        ivs.push_back(s.iv);
        m += s.measure;
        note(*s.constant);
      }
      return;
    }
    auto segs = monotone_segments(s.expr, s.iv.lo, s.iv.hi);
    if (!segs) throw Error(ErrorCode::Unsupported, "expression cannot be inverted: " + s.expr.to_string());
    for (const auto& ms : *segs) {
      if (auto iv = detail::monotone_preimage(s.expr, ms, band)) {
        ivs.push_back(*iv);
        m += iv->measure();
        const double va = s.expr.eval(iv->lo, 1.0 - iv->lo), vb = s.expr.eval(iv->hi, 1.0 - iv->hi);
        note(std::clamp(va, band.lo, band.hi));
        note(std::clamp(vb, band.lo, band.hi));
      }
    }
  };
  if (!tail) {
    for (const auto& s : segments(f).segs) handle(s);
  } else {
    for (const auto& s : segments(f, 0.0, tail->start()).segs) handle(s);
    // Tail cells: iterate, stopping early once the eventual trend moves away from the band.
    const auto& tr = tail->trend();
    for (long n = tail->n0(); n < kTailIndexCap; ++n) {
      const double v = tail->value(n);
      const double cm = tail->cell_measure(n);
      if (band.contains(v) && cm > 0.0) {
        m += cm;
        note(v);
        const double a = tail->endpoint(n), b = tail->endpoint(n + 1);
        if (b > a && b <= 1.0) ivs.push_back(Interval(a, std::fmin(b, 1.0)));
      }
      if (tail->gap(n + 1) == 0.0) break;
      if (n >= tr.monotone_from && tr.direction != 2) {
        if (tr.direction == -1 && (v < band.lo || (!band.lo_closed && v == band.lo))) break;
        if (tr.direction == 1 && (v > band.hi || (!band.hi_closed && v == band.hi))) break;
        if (tr.direction == 0 && !band.contains(v)) break;
      }
    }
  }
  LevelSet out;
  out.set = IntervalSet(std::move(ivs));
  out.measure = m.value();
  if (out.measure > 0.0) {
    out.inf = inf;
    out.sup = sup;
  }
  return out;
}

inline double level_measure(const Function& f, const ValueBand& band) { return level_set(f, band).measure; }

namespace detail {

inline Monotonicity join(Monotonicity a, int dir) {
  if (dir == 0) return a;
  if (dir == -1) {
    if (a == Monotonicity::Nondecreasing) return Monotonicity::Neither;
    return a == Monotonicity::Unknown ? Monotonicity::Unknown : Monotonicity::Nonincreasing;
  }
  if (a == Monotonicity::Nonincreasing) return Monotonicity::Neither;
  return a == Monotonicity::Unknown ? Monotonicity::Unknown : Monotonicity::Nondecreasing;
}

}  // namespace detail

/// Monotonicity over [0,1). Step data is exact; expression pieces use the sign
/// of the symbolic derivative; tail values use the verification window.
inline Monotonicity monotonicity_check(const Function& f) {
  if (const auto* s = std::get_if<StepFunction>(&f)) return monotonicity_check(*s);
  const TailFamily* tail = std::get_if<TailFamily>(&f);
  const double end = tail ? tail->start() : 1.0;
  // state: Nonincreasing/Nondecreasing once a strict move is seen; constant until then.
  int dir = 0;
  bool unresolved = false;
  double last = std::nan("");
  auto step = [&](int d) -> bool {
    if (d == 0) return true;
    if (dir == 0) dir = d;
    return dir == d;
  };
  auto compare = [&](double prev, double next) -> bool {
    if (std::isnan(prev)) return true;
    if (next < prev - kTol) return step(-1);
    if (next > prev + kTol) return step(1);
    return true;
  };
  for (const auto& s : segments(f, 0.0, end).segs) {
    if (s.constant) {
      if (!compare(last, *s.constant)) return Monotonicity::Neither;
      last = *s.constant;
      continue;
    }
    const double a = s.iv.lo, b = s.iv.hi;
    if (!compare(last, s.expr.eval(a, 1.0 - a))) return Monotonicity::Neither;
    auto segs = monotone_segments(s.expr, a, b);
    if (!segs) {
      unresolved = true;
    } else {
      for (const auto& ms : *segs) {
        if (ms.dir == 2) {
          unresolved = true;
          continue;
        }
        if (!step(ms.dir)) return Monotonicity::Neither;
      }
    }
    last = s.expr.eval(b, 1.0 - b);
  }
  if (tail) {
    const auto& tr = tail->trend();
    if (tr.direction == 2 || tr.monotone_from > tail->n0()) {
      // Early non-monotone values are exact evidence; otherwise the window is inconclusive.
      if (tr.monotone_from > tail->n0()) return Monotonicity::Neither;
      unresolved = true;
    } else {
      if (!compare(last, tail->value(tail->n0()))) return Monotonicity::Neither;
      if (!step(tr.direction)) return Monotonicity::Neither;
    }
  }
  if (unresolved) {
    // Sampling cannot certify, but it can refute.
    double prev = eval(f, 0.0);
    bool up = false, down = false;
    for (int i = 1; i < 4096; ++i) {
      const double v = eval(f, i / 4096.0);
      if (v > prev + kTol) up = true;
      if (v < prev - kTol) down = true;
      prev = v;
    }
    if (up && down) return Monotonicity::Neither;
    return Monotonicity::Unknown;
  }
  return dir == 1 ? Monotonicity::Nondecreasing : Monotonicity::Nonincreasing;
}

// ---------------------------------------------------------------------------
// Arithmetic between carriers
// ---------------------------------------------------------------------------

namespace detail {

inline Expr segment_expr(const Segment& s) { return s.constant ? Expr::constant(*s.constant) : s.expr; }

/// a (op) b on [lo, hi) for non-tail carriers, as step data when both are steps.
inline PrefixCarrier combine_finite(const Function& a, const Function& b, double sign, double lo, double hi) {
  const auto sa = segments(a, lo, hi), sb = segments(b, lo, hi);
  std::vector<double> pts;
  for (const auto& s : sa.segs) {
    pts.push_back(s.iv.lo);
    pts.push_back(s.iv.hi);
  }
  for (const auto& s : sb.segs) {
    pts.push_back(s.iv.lo);
    pts.push_back(s.iv.hi);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto find = [](const SegmentList& sl, double m) -> const Segment* {
    for (const auto& s : sl.segs)
      if (s.iv.contains(m)) return &s;
    return nullptr;
  };
  std::vector<Cell> cells;
  std::vector<ExprPiecewise::Piece> pieces;
  bool all_const = true;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double m = 0.5 * (pts[i] + pts[i + 1]);
    const Segment* x = find(sa, m);
    const Segment* y = find(sb, m);
    if (!x || !y) throw Error(ErrorCode::Unsupported, "carrier segments do not cover the domain");
    const Interval iv(pts[i], pts[i + 1]);
    if (x->constant && y->constant) {
      const double v = *x->constant + sign * *y->constant;
      cells.push_back({iv, v});
      pieces.push_back({iv, Expr::constant(v)});
    } else {
      all_const = false;
      const Expr e = sign > 0 ? segment_expr(*x) + segment_expr(*y) : Expr::minus(segment_expr(*x), segment_expr(*y));
      pieces.push_back({iv, e});
    }
  }
  if (all_const) return StepFunction::from_cells(cells);
  return ExprPiecewise(std::move(pieces));
}

inline std::optional<double> constant_on(const Function& f, double lo, double hi) {
  const auto sl = segments(f, lo, hi);
  std::optional<double> v;
  for (const auto& s : sl.segs) {
    if (!s.constant) return std::nullopt;
    if (v && !near(*v, *s.constant)) return std::nullopt;
    v = *s.constant;
  }
  if (sl.leftover > 0.0 && !(near(sl.leftover_lo, sl.leftover_hi) && (!v || near(*v, sl.leftover_lo))))
    return std::nullopt;
  return v;
}

inline Function as_function(PrefixCarrier c) {
  return std::visit([](auto&& x) -> Function { return Function(std::move(x)); }, std::move(c));
}

}  // namespace detail

/// a + sign * b. Tail families combine with carriers that are constant on the
/// tail region, or with tails sharing the same endpoint sequence.
inline Function combine(const Function& a, const Function& b, double sign) {
  const auto* ta = std::get_if<TailFamily>(&a);
  const auto* tb = std::get_if<TailFamily>(&b);
  if (!ta && !tb) return detail::as_function(detail::combine_finite(a, b, sign, 0.0, 1.0));
  if (ta && tb) {
    if (!(ta->x_expr() == tb->x_expr()) || ta->n0() != tb->n0())
      throw Error(ErrorCode::Unsupported, "tail families with different endpoint sequences");
    const Function pa = detail::as_function(ta->prefix()), pb = detail::as_function(tb->prefix());
    const Expr v = sign > 0 ? ta->v_expr() + tb->v_expr() : Expr::minus(ta->v_expr(), tb->v_expr());
    return TailFamily(detail::combine_finite(pa, pb, sign, 0.0, ta->start()), ta->x_expr(), v, ta->n0());
  }
  const TailFamily& t = ta ? *ta : *tb;
  const Function& other = ta ? b : a;
  const auto c = detail::constant_on(other, t.start(), 1.0);
  if (!c) throw Error(ErrorCode::Unsupported, "carrier is not constant on the tail region");
  const Function tp = detail::as_function(t.prefix());
  Expr v;
  PrefixCarrier prefix;
  if (ta) {
    v = sign > 0 ? t.v_expr() + Expr::constant(*c) : Expr::minus(t.v_expr(), Expr::constant(*c));
    prefix = detail::combine_finite(tp, other, sign, 0.0, t.start());
  } else {
    v = sign > 0 ? Expr::constant(*c) + t.v_expr() : Expr::minus(Expr::constant(*c), t.v_expr());
    prefix = detail::combine_finite(other, tp, sign, 0.0, t.start());
  }
  return TailFamily(std::move(prefix), t.x_expr(), v, t.n0());
}

inline Function operator+(const Function& a, const Function& b) { return combine(a, b, 1.0); }
inline Function operator-(const Function& a, const Function& b) { return combine(a, b, -1.0); }

// ---------------------------------------------------------------------------
// Decreasing rearrangement
// ---------------------------------------------------------------------------

/// Decreasing rearrangement of a tail family with a step prefix. Supported
/// when the tail values are eventually nonincreasing (or constant) and lie
/// below every prefix value from some index on.
inline TailFamily decreasing_rearrangement(const TailFamily& f) {
  const auto* prefix = std::get_if<StepFunction>(&f.prefix());
  if (!prefix) throw Error(ErrorCode::Unsupported, "rearrangement needs a step prefix");
  const auto& tr = f.trend();
  if (tr.direction != -1 && tr.direction != 0)
    throw Error(ErrorCode::Unsupported, "tail values are not certified eventually nonincreasing");
  const double start = f.start();
  // Prefix values on [0, x_{n0}) including explicit zeros for gaps.
  std::vector<Cell> cells;
  double cur = 0.0;
  for (const auto& c : prefix->cells()) {
    if (c.iv.lo > cur) cells.push_back({Interval(cur, c.iv.lo), 0.0});
    cells.push_back(c);
    cur = c.iv.hi;
  }
  if (start > cur + kTol) cells.push_back({Interval(cur, start), 0.0});
  double min_prefix = kInf;
  for (const auto& c : cells) {
    if (c.value < 0.0) throw Error(ErrorCode::PreconditionViolation, "rearrangement needs a nonnegative function");
    min_prefix = std::fmin(min_prefix, c.value);
  }
  long m = std::max(f.n0(), tr.monotone_from);
  while (m < f.n0() + kTailWindow && f.value(m) > min_prefix) ++m;
  if (f.value(m) > min_prefix)
    throw Error(ErrorCode::Unsupported, "tail values interleave with prefix values beyond the window");
  for (long n = f.n0(); n < m; ++n) {
    if (f.value(n) < 0.0) throw Error(ErrorCode::PreconditionViolation, "rearrangement needs a nonnegative function");
    cells.push_back({Interval(f.endpoint(n), f.endpoint(n + 1)), f.value(n)});
  }
  std::vector<Cell> nonzero;
  for (const auto& c : cells)
    if (c.value != 0.0) nonzero.push_back(c);
  // Zero cells in the prefix region must come last, which only works if the
  // tail itself is identically zero from m on.
  double zero_measure = 0.0;
  for (const auto& c : cells)
    if (c.value == 0.0) zero_measure += c.iv.measure();
  if (zero_measure > kTol && !(tr.limit && *tr.limit == 0.0 && tr.window_max == 0.0))
    throw Error(ErrorCode::Unsupported, "zero set inside the prefix cannot precede a positive tail");
  const auto head = decreasing_rearrangement(StepFunction::from_cells(nonzero));
  return TailFamily(head, f.x_expr(), f.v_expr(), m);
}

inline Function decreasing_rearrangement(const Function& f) {
  if (const auto* s = std::get_if<StepFunction>(&f)) return decreasing_rearrangement(*s);
  if (const auto* t = std::get_if<TailFamily>(&f)) return decreasing_rearrangement(*t);
  throw Error(ErrorCode::Unsupported, "rearrangement of expression carriers is evaluated pointwise only");
}

/// Pointwise evaluation of f* through the distribution function; works for any
/// carrier whose level sets are computable.
inline double rearranged_value(const Function& f, const Point& p, double lo, double hi) {
  // f*(x) = inf{ lambda : mu{f > lambda} <= x }. With x = 1 - u this is
  // mu{f <= lambda} >= u.
  auto ok = [&](double lambda) { return level_measure(f, {-kInf, lambda, false, true}) >= p.u; };
  if (ok(lo)) return lo;
  return bisect_boundary(ok, lo, hi, 1e-13, 200);
}

}  // namespace vlab
