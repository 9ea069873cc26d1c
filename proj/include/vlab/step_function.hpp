#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "vlab/interval.hpp"

namespace vlab {

enum class Monotonicity { Nonincreasing, Nondecreasing, Neither, Unknown };

inline const char* to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::Nonincreasing: return "NONINCREASING";
    case Monotonicity::Nondecreasing: return "NONDECREASING";
    case Monotonicity::Neither: return "NEITHER";
    case Monotonicity::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

/// Constant value on a half-open cell.
struct Cell {
  Interval iv;
  double value;
};

/// Simple function on [0,1): finitely many (set, value) pieces, zero elsewhere.
class StepFunction {
 public:
  struct Piece {
    IntervalSet set;
    double value;
  };

  StepFunction() = default;

  explicit StepFunction(std::vector<Piece> pieces) {
    for (auto& p : pieces) {
      if (!std::isfinite(p.value))
        throw Error(ErrorCode::PreconditionViolation, "step function value must be finite");
      if (p.value == 0.0 || p.set.empty()) continue;
      pieces_.push_back(std::move(p));
    }
    std::vector<IntervalSet> sets;
    for (const auto& p : pieces_) sets.push_back(p.set);
    if (!pairwise_disjoint(sets))
      throw Error(ErrorCode::PreconditionViolation, "step function pieces overlap");
    for (const auto& p : pieces_)
      for (const auto& iv : p.set.intervals()) cells_.push_back({iv, p.value});
    std::sort(cells_.begin(), cells_.end(), [](const Cell& a, const Cell& b) { return a.iv.lo < b.iv.lo; });
  }

  static StepFunction from_cells(std::span<const Cell> cells) {
    std::vector<Piece> ps;
    ps.reserve(cells.size());
    for (const auto& c : cells) ps.push_back({IntervalSet(c.iv), c.value});
    return StepFunction(std::move(ps));
  }

  static StepFunction constant(double c) { return from_cells(std::vector<Cell>{{Interval(0.0, 1.0), c}}); }

  static StepFunction indicator(const IntervalSet& set, double value = 1.0) {
    return StepFunction(std::vector<Piece>{{set, value}});
  }

  std::span<const Piece> pieces() const { return pieces_; }
  /// Sorted, pairwise disjoint cells of the support.
  std::span<const Cell> cells() const { return cells_; }
  bool is_zero() const { return cells_.empty(); }

  double operator()(double t) const {
    auto it = std::upper_bound(cells_.begin(), cells_.end(), t,
                               [](double v, const Cell& c) { return v < c.iv.lo; });
    if (it == cells_.begin()) return 0.0;
    --it;
    return it->iv.contains(t) ? it->value : 0.0;
  }
  double operator()(const Point& p) const {
    auto it = std::upper_bound(cells_.begin(), cells_.end(), p.x,
                               [](double v, const Cell& c) { return v < c.iv.lo; });
    if (it == cells_.begin()) return 0.0;
    --it;
    return it->iv.contains(p) ? it->value : 0.0;
  }

  IntervalSet support() const {
    std::vector<Interval> ivs;
    for (const auto& c : cells_) ivs.push_back(c.iv);
    return IntervalSet(std::move(ivs));
  }

  double sup_abs() const {
    double m = 0.0;
    for (const auto& c : cells_) m = std::fmax(m, std::fabs(c.value));
    return m;
  }
  double inf_abs_on_support() const {
    double m = kInf;
    for (const auto& c : cells_) m = std::fmin(m, std::fabs(c.value));
    return m;
  }

  /// Integral of |f|^c, as an exact finite sum.
  double integral_pow(double c) const {
    KahanSum s;
    for (const auto& cell : cells_) s += std::pow(std::fabs(cell.value), c) * cell.iv.measure();
    return s.value();
  }
  double integral() const {
    KahanSum s;
    for (const auto& cell : cells_) s += cell.value * cell.iv.measure();
    return s.value();
  }

  template <typename F>
  StepFunction map(F f) const {
    std::vector<Cell> out;
    out.reserve(cells_.size());
    for (const auto& c : cells_) out.push_back({c.iv, f(c.value)});
    return from_cells(out);
  }
  StepFunction scaled(double c) const {
    return map([c](double v) { return c * v; });
  }
  StepFunction abs() const {
    return map([](double v) { return std::fabs(v); });
  }

  /// f restricted to set (zero outside).
  StepFunction restricted(const IntervalSet& set) const {
    std::vector<Cell> out;
    for (const auto& c : cells_) {
      auto part = IntervalSet(c.iv).intersect(set);
      for (const auto& iv : part.intervals()) out.push_back({iv, c.value});
    }
    return from_cells(out);
  }

 private:
  std::vector<Piece> pieces_;
  std::vector<Cell> cells_;
};

/// Common partition of two step functions: the cells cover the union of both
/// supports and each function is constant on every cell.
struct Refinement {
  std::vector<Interval> cells;
  std::vector<double> f_values;
  std::vector<double> g_values;
};

inline Refinement common_refinement(const StepFunction& f, const StepFunction& g) {
  std::vector<double> pts;
  for (const auto& c : f.cells()) {
    pts.push_back(c.iv.lo);
    pts.push_back(c.iv.hi);
  }
  for (const auto& c : g.cells()) {
    pts.push_back(c.iv.lo);
    pts.push_back(c.iv.hi);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  Refinement r;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double lo = pts[i], hi = pts[i + 1];
    const double m = 0.5 * (lo + hi);
    const double fv = f(m), gv = g(m);
    if (fv == 0.0 && gv == 0.0) continue;
    r.cells.push_back(Interval(lo, hi));
    r.f_values.push_back(fv);
    r.g_values.push_back(gv);
  }
  return r;
}

/// Re-expresses f and g over their common partition.
inline std::pair<StepFunction, StepFunction> refine(const StepFunction& f, const StepFunction& g) {
  const auto r = common_refinement(f, g);
  std::vector<Cell> fc, gc;
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    fc.push_back({r.cells[i], r.f_values[i]});
    gc.push_back({r.cells[i], r.g_values[i]});
  }
  return {StepFunction::from_cells(fc), StepFunction::from_cells(gc)};
}

template <typename Op>
StepFunction combine(const StepFunction& f, const StepFunction& g, Op op) {
  const auto r = common_refinement(f, g);
  std::vector<Cell> out;
  for (std::size_t i = 0; i < r.cells.size(); ++i) out.push_back({r.cells[i], op(r.f_values[i], r.g_values[i])});
  return StepFunction::from_cells(out);
}

inline StepFunction operator+(const StepFunction& f, const StepFunction& g) {
  return combine(f, g, [](double a, double b) { return a + b; });
}
inline StepFunction operator-(const StepFunction& f, const StepFunction& g) {
  return combine(f, g, [](double a, double b) { return a - b; });
}

/// Cells of f over all of [0,1), including explicit zero cells for the gaps.
inline std::vector<Cell> full_cells(const StepFunction& f) {
  std::vector<Cell> out;
  double cur = 0.0;
  for (const auto& c : f.cells()) {
    if (c.iv.lo > cur + kTol) out.push_back({Interval(cur, c.iv.lo), 0.0});
    out.push_back(c);
    cur = c.iv.hi;
  }
  if (cur < 1.0 - kTol) out.push_back({Interval(cur, 1.0), 0.0});
  return out;
}

/// Nonincreasing rearrangement of a nonnegative step function on [0,1):
/// values sorted descending, each occupying its total measure.
inline StepFunction decreasing_rearrangement(const StepFunction& f) {
  std::map<double, KahanSum, std::greater<>> by_value;
  for (const auto& c : f.cells()) {
    if (c.value < 0.0)
      throw Error(ErrorCode::PreconditionViolation, "decreasing rearrangement needs a nonnegative function");
    by_value[c.value] += c.iv.measure();
  }
  std::vector<Cell> out;
  double acc = 0.0;
  for (const auto& [v, m] : by_value) {
    const double hi = std::fmin(1.0, acc + m.value());
    if (hi > acc) out.push_back({Interval(acc, hi), v});
    acc = hi;
  }
  return StepFunction::from_cells(out);
}

/// Exact monotonicity of a step function on [0,1) (implicit zeros included).
/// Constant functions report Nonincreasing.
inline Monotonicity monotonicity_check(const StepFunction& f) {
  const auto cells = full_cells(f);
  bool inc = true, dec = true;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    if (cells[i].value > cells[i - 1].value) dec = false;
    if (cells[i].value < cells[i - 1].value) inc = false;
  }
  if (dec) return Monotonicity::Nonincreasing;
  if (inc) return Monotonicity::Nondecreasing;
  return Monotonicity::Neither;
}

}  // namespace vlab
