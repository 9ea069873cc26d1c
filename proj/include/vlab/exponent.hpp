#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vlab/carrier.hpp"

namespace vlab {

/// Bounded exponent p(.) on [0,1] with cached essential bounds,
/// 1 <= p- <= p+ <= cap.
class ExponentFunction {
 public:
  explicit ExponentFunction(Function carrier, double cap = kExponentCap) : carrier_(std::move(carrier)), cap_(cap) {
    const auto [lo, hi] = value_bounds(carrier_, IntervalSet{Interval(0.0, 1.0)});
    if (lo < 1.0 - kTol)
      throw Error(ErrorCode::PreconditionViolation, "exponent below 1 (ess inf " + std::to_string(lo) + ")");
    if (hi > cap_ + kTol)
      throw Error(ErrorCode::PreconditionViolation, "exponent above cap (ess sup " + std::to_string(hi) + ")");
    p_minus_ = std::fmax(1.0, lo);
    p_plus_ = hi;
  }

  /// p = 1.
  ExponentFunction() : ExponentFunction(StepFunction::constant(1.0)) {}

  static ExponentFunction constant(double c) { return ExponentFunction(StepFunction::constant(c)); }

  const Function& carrier() const { return carrier_; }
  double p_minus() const { return p_minus_; }
  double p_plus() const { return p_plus_; }
  double cap() const { return cap_; }
  double operator()(double t) const { return eval(carrier_, t); }
  double operator()(const Point& p) const { return eval(carrier_, p); }

 private:
  Function carrier_;
  double cap_;
  double p_minus_ = 1.0;
  double p_plus_ = 1.0;
};

/// Real number or +infinity.
struct ExtendedReal {
  double value = 0.0;
  bool infinite = false;

  static ExtendedReal inf() { return {0.0, true}; }
  double as_double() const { return infinite ? kInf : value; }
};

/// Closed subset of [1, M] given as finitely many points and closed intervals.
/// exact is false when a tail's accumulating values were replaced by their hull.
class RangeSet {
 public:
  struct Closed {
    double lo;
    double hi;
  };

  RangeSet() = default;
  RangeSet(std::vector<double> points, std::vector<Closed> intervals, bool exact = true)
      : points_(std::move(points)), intervals_(std::move(intervals)), exact_(exact) {
    normalize();
  }

  std::span<const double> points() const { return points_; }
  std::span<const Closed> intervals() const { return intervals_; }
  bool exact() const { return exact_; }
  bool empty() const { return points_.empty() && intervals_.empty(); }

  bool contains(double v, double tol = kTol) const {
    for (double p : points_)
      if (near(p, v, tol)) return true;
    for (const auto& c : intervals_)
      if (v >= c.lo - tol && v <= c.hi + tol) return true;
    return false;
  }

  double min() const {
    double m = kInf;
    for (double p : points_) m = std::fmin(m, p);
    for (const auto& c : intervals_) m = std::fmin(m, c.lo);
    return m;
  }
  double max() const {
    double m = -kInf;
    for (double p : points_) m = std::fmax(m, p);
    for (const auto& c : intervals_) m = std::fmax(m, c.hi);
    return m;
  }

  /// Whether the two closed sets share a point (within tol).
  bool intersects(const RangeSet& o, double tol = kTol) const {
    for (double p : points_)
      if (o.contains(p, tol)) return true;
    for (double p : o.points_)
      if (contains(p, tol)) return true;
    for (const auto& a : intervals_)
      for (const auto& b : o.intervals_)
        if (a.lo <= b.hi + tol && b.lo <= a.hi + tol) return true;
    return false;
  }

 private:
  void normalize() {
    for (auto& c : intervals_)
      if (c.lo > c.hi) std::swap(c.lo, c.hi);
    // Degenerate intervals are points.
    std::vector<Closed> ivs;
    for (const auto& c : intervals_) {
      if (c.hi - c.lo <= kTol)
        points_.push_back(0.5 * (c.lo + c.hi));
      else
        ivs.push_back(c);
    }
    std::sort(ivs.begin(), ivs.end(), [](const Closed& a, const Closed& b) { return a.lo < b.lo; });
    intervals_.clear();
    for (const auto& c : ivs) {
      if (!intervals_.empty() && c.lo <= intervals_.back().hi + kTol)
        intervals_.back().hi = std::fmax(intervals_.back().hi, c.hi);
      else
        intervals_.push_back(c);
    }
    std::sort(points_.begin(), points_.end());
    std::vector<double> pts;
    for (double p : points_) {
      if (!pts.empty() && near(pts.back(), p)) continue;
      bool inside = false;
      for (const auto& c : intervals_)
        if (p >= c.lo - kTol && p <= c.hi + kTol) inside = true;
      if (!inside) pts.push_back(p);
    }
    points_ = std::move(pts);
  }

  std::vector<double> points_;
  std::vector<Closed> intervals_;
  bool exact_ = true;
};

/// (ess inf, ess sup) of p over B.
inline std::pair<double, double> ess_bounds(const ExponentFunction& p, const IntervalSet& B) {
  return value_bounds(p.carrier(), B);
}
inline std::pair<double, double> ess_bounds(const Function& f, const IntervalSet& B) { return value_bounds(f, B); }

/// Number of leading tail values kept as exact points in the essential range.
inline constexpr long kRangeTailPoints = 64;

/// Essential range of a carrier: values on positive-measure pieces, images of
/// monotone expression segments, and for tails the leading values plus the
/// hull of the remaining ones (which always contains the limit).
inline RangeSet essential_range(const Function& f) {
  std::vector<double> pts;
  std::vector<RangeSet::Closed> ivs;
  bool exact = true;
  const auto* tail = std::get_if<TailFamily>(&f);
  const double end = tail ? tail->start() : 1.0;
  for (const auto& s : segments(f, 0.0, end).segs) {
    if (s.measure <= 0.0) continue;
    if (s.constant) {
      pts.push_back(*s.constant);
      continue;
    }
    auto segs = monotone_segments(s.expr, s.iv.lo, s.iv.hi);
    if (!segs) throw Error(ErrorCode::Unsupported, "expression cannot be monotone-segmented: " + s.expr.to_string());
    for (const auto& ms : *segs) {
      const double a = s.expr.eval(ms.lo, 1.0 - ms.lo), b = s.expr.eval(ms.hi, 1.0 - ms.hi);
      if (ms.dir == 0)
        pts.push_back(a);
      else
        ivs.push_back({std::fmin(a, b), std::fmax(a, b)});
    }
  }
  if (tail) {
    const long last_exact = tail->n0() + kRangeTailPoints;
    for (long n = tail->n0(); n <= last_exact; ++n)
      if (tail->cell_measure(n) > 0.0) pts.push_back(tail->value(n));
    const auto [lo, hi] = tail->value_bounds_from(last_exact + 1);
    if (hi - lo <= kTol) {
      pts.push_back(lo);
    } else {
      ivs.push_back({lo, hi});
      exact = false;
    }
  }
  return RangeSet(std::move(pts), std::move(ivs), exact);
}
inline RangeSet essential_range(const ExponentFunction& p) { return essential_range(p.carrier()); }

inline ExtendedReal conjugate_value(double pt) {
  if (pt <= 1.0 + kTol) return ExtendedReal::inf();
  return {pt / (pt - 1.0), false};
}

/// Pointwise conjugate exponent p*(t), +infinity where p(t) = 1.
inline ExtendedReal conjugate(const ExponentFunction& p, double t) { return conjugate_value(p(t)); }

/// The conjugate exponent as a carrier; requires p- > 1 so that it is finite.
inline ExponentFunction conjugate_exponent(const ExponentFunction& p) {
  if (p.p_minus() <= 1.0 + kTol) throw Error(ErrorCode::Skipped, "p attains 1; conjugate exponent is unbounded");
  const double cap = p.p_minus() / (p.p_minus() - 1.0) + 1.0;
  const Expr x = Expr::var();
  auto conj_expr = [](const Expr& e) { return e / (e - Expr::constant(1.0)); };
  const Function& c = p.carrier();
  if (const auto* s = std::get_if<StepFunction>(&c))
    return ExponentFunction(s->map([](double v) { return v / (v - 1.0); }), cap);
  if (const auto* e = std::get_if<ExprPiecewise>(&c)) {
    std::vector<ExprPiecewise::Piece> ps;
    for (const auto& pc : e->pieces()) ps.push_back({pc.iv, conj_expr(pc.expr)});
    return ExponentFunction(ExprPiecewise(std::move(ps)), cap);
  }
  const auto& t = std::get<TailFamily>(c);
  PrefixCarrier prefix = std::visit(
      [&](const auto& pc) -> PrefixCarrier {
        if constexpr (std::is_same_v<std::decay_t<decltype(pc)>, StepFunction>) {
          return pc.map([](double v) { return v / (v - 1.0); });
        } else {
          std::vector<ExprPiecewise::Piece> ps;
          for (const auto& piece : pc.pieces()) ps.push_back({piece.iv, conj_expr(piece.expr)});
          return ExprPiecewise(std::move(ps));
        }
      },
      t.prefix());
  (void)x;
  return ExponentFunction(TailFamily(std::move(prefix), t.x_expr(), conj_expr(t.v_expr()), t.n0()), cap);
}

}  // namespace vlab
