#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "vlab/exponent.hpp"
#include "vlab/quadrature.hpp"

namespace vlab {

/// A computed quantity with an absolute error bound.
struct Measured {
  double value = 0.0;
  double abs_error_bound = 0.0;
};

/// Common segmentation of several carriers over [lo, hi). Integrals of
/// g(v_0(t), ..., v_{N-1}(t)) are exact sums on cells where every carrier is
/// constant and adaptive quadrature elsewhere. Measure near 1 that no carrier
/// can resolve is bounded through the carriers' value ranges there.
template <std::size_t N>
class Plan {
 public:
  using Values = std::array<double, N>;

  Plan(std::array<const Function*, N> carriers, double lo = 0.0, double hi = 1.0) {
    std::array<SegmentList, N> lists;
    double end = hi;
    for (std::size_t i = 0; i < N; ++i) {
      lists[i] = segments(*carriers[i], lo, hi);
      const double covered = lists[i].segs.empty() ? lo : lists[i].segs.back().iv.hi;
      end = std::fmin(end, covered);
    }
    std::array<std::size_t, N> idx{};
    double cur = lo;
    while (cur < end) {
      Term t;
      double next = end;
      for (std::size_t i = 0; i < N; ++i) {
        auto& segs = lists[i].segs;
        while (idx[i] < segs.size() && segs[idx[i]].iv.hi <= cur) ++idx[i];
        next = std::fmin(next, segs[idx[i]].iv.hi);
      }
      if (!(next > cur)) break;
      t.lo = cur;
      t.hi = next;
      t.measure = next - cur;
      t.all_const = true;
      for (std::size_t i = 0; i < N; ++i) {
        const Segment& s = lists[i].segs[idx[i]];
        t.segs[i] = s;
        if (!s.constant) t.all_const = false;
        // Tail cells carry their measure exactly, independent of endpoint rounding.
        if (s.from_tail && s.iv.lo == cur && s.iv.hi == next) t.measure = s.measure;
      }
      if (t.all_const)
        for (std::size_t i = 0; i < N; ++i) t.values[i] = *t.segs[i].constant;
      terms_.push_back(std::move(t));
      cur = next;
    }
    leftover_ = 0.0;
    for (std::size_t i = 0; i < N; ++i) leftover_ = std::fmax(leftover_, lists[i].leftover);
    if (end < hi) leftover_ = std::fmax(leftover_, hi - end);
    if (leftover_ > 0.0) {
      for (std::size_t i = 0; i < N; ++i) {
        if (lists[i].leftover > 0.0) {
          ranges_[i] = {lists[i].leftover_lo, lists[i].leftover_hi};
        } else {
          const Segment& s = lists[i].segs.back();
          const double a = s.value_at(Point::at(s.iv.lo));
          const double b = s.value_at(Point::from_one(std::fmin(leftover_, 1.0 - s.iv.lo)));
          ranges_[i] = {std::fmin(a, b), std::fmax(a, b)};
        }
      }
    }
  }

  /// Integral of g over the plan's window; g takes a Values array.
  template <typename G>
  Measured integrate(G g, double abs_tol = 1e-10) const {
    KahanSum sum;
    KahanSum err;
    const std::int64_t budget = eval_budget();
    for (const auto& t : terms_) {
      if (t.all_const) {
        sum += g(t.values) * t.measure;
        continue;
      }
      auto fn = [&](double x) {
        Values v;
        const Point p = Point::at(x);
        for (std::size_t i = 0; i < N; ++i) v[i] = t.segs[i].value_at(p);
        return g(v);
      };
      // Relative to the integrand's size where it is large (tiny sets, huge amplitudes).
      const double scale = std::fmax(1.0, std::fabs(fn(0.5 * (t.lo + t.hi))));
      const double tol = std::fmax(abs_tol * t.measure * (std::isfinite(scale) ? scale : 1.0), 1e-300);
      const auto r = vlab::integrate(fn, t.lo, t.hi, tol, budget);
      sum += r.value;
      err += r.abs_error;
    }
    if (leftover_ > 0.0) {
      // Bound g on the unresolved piece by its values at the range corners.
      double m = 0.0;
      for (std::size_t mask = 0; mask < (std::size_t{1} << N); ++mask) {
        Values v;
        for (std::size_t i = 0; i < N; ++i) v[i] = (mask >> i) & 1 ? ranges_[i].second : ranges_[i].first;
        m = std::fmax(m, std::fabs(g(v)));
      }
      err += m * leftover_;
    }
    return {sum.value(), err.value()};
  }

  bool all_constant() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.all_const; });
  }
  double leftover() const { return leftover_; }

 private:
  struct Term {
    double lo = 0.0;
    double hi = 0.0;
    double measure = 0.0;
    bool all_const = true;
    std::array<Segment, N> segs{};
    Values values{};
  };

  std::vector<Term> terms_;
  double leftover_ = 0.0;
  std::array<std::pair<double, double>, N> ranges_{};
};

/// rho_p(f) = integral of |f(t)|^{p(t)}.
inline Measured modular(const Function& f, const ExponentFunction& p) {
  Plan<2> plan({&f, &p.carrier()});
  return plan.integrate([](const auto& v) { return std::pow(std::fabs(v[0]), v[1]); });
}

namespace detail {

inline bool is_null(const Function& f) {
  if (const auto* s = std::get_if<StepFunction>(&f)) return s->is_zero();
  if (const auto* e = std::get_if<ExprPiecewise>(&f))
    return std::all_of(e->pieces().begin(), e->pieces().end(),
                       [](const auto& pc) { return pc.expr.is_const() && pc.expr.const_value() == 0.0; });
  return false;
}

}  // namespace detail

/// Luxemburg norm inf{r > 0 : rho_p(f / r) <= 1}, by bisection on r.
/// The bound covers the bracket width plus the effect of quadrature error.
inline Measured luxemburg_norm(const Function& f, const ExponentFunction& p) {
  if (detail::is_null(f)) return {0.0, 0.0};
  Plan<2> plan({&f, &p.carrier()});
  const bool exact = plan.all_constant() && plan.leftover() == 0.0;
  const double quad_tol = 1e-13;
  auto rho = [&](double r) {
    return plan.integrate([r](const auto& v) { return std::pow(std::fabs(v[0]) / r, v[1]); }, quad_tol);
  };
  const Measured at1 = rho(1.0);
  if (at1.value == 0.0 && at1.abs_error_bound == 0.0) return {0.0, 0.0};
  double lo = 1.0, hi = 1.0;
  if (at1.value > 1.0) {
    while (rho(hi).value > 1.0) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw Error(ErrorCode::EvalFailure, "norm bracket overflow");
    }
  } else {
    while (rho(lo).value <= 1.0) {
      hi = lo;
      lo *= 0.5;
      if (lo == 0.0) throw Error(ErrorCode::ZeroModular, "modular vanishes at every scale");
    }
  }
  const double rel = exact ? 1e-15 : 1e-13;
  for (int i = 0; i < 400 && hi - lo > rel * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (rho(mid).value > 1.0 ? lo : hi) = mid;
  }
  // rho(f/r) changes by at least p-/r * |d r| per unit of r near the root,
  // so a modular error e moves the root by at most e * r / p-.
  const Measured at = rho(hi);
  const double shift = at.abs_error_bound * hi / p.p_minus();
  return {hi, (hi - lo) + shift + 4 * std::numeric_limits<double>::epsilon() * hi};
}

struct HolderCheck {
  Measured pairing;
  Measured norm_f;
  Measured norm_g;
  double bound = 0.0;  // 2 * norm_f * norm_g
  bool holds = false;
};

/// Checks integral |f g| <= 2 ||f||_p ||g||_{p*}; needs p- > 1.
inline HolderCheck holder_pairing_check(const Function& f, const Function& g, const ExponentFunction& p) {
  const ExponentFunction q = conjugate_exponent(p);
  HolderCheck out;
  Plan<2> plan({&f, &g});
  out.pairing = plan.integrate([](const auto& v) { return std::fabs(v[0] * v[1]); });
  out.norm_f = luxemburg_norm(f, p);
  out.norm_g = luxemburg_norm(g, q);
  out.bound = 2.0 * out.norm_f.value * out.norm_g.value;
  const double slack = out.pairing.abs_error_bound + 2.0 * (out.norm_f.abs_error_bound * out.norm_g.value +
                                                             out.norm_g.abs_error_bound * out.norm_f.value);
  out.holds = out.pairing.value <= out.bound + slack + kTol;
  return out;
}

/// Block with coefficient c on set A, normalised as c * |A|^{-1/w(t)} chi_A.
struct Block {
  IntervalSet set;
  double coefficient = 0.0;
};

/// Modular under exponent e of sum_n c_n |A_n|^{-1/w(t)} chi_{A_n}, for
/// disjoint A_n: sum_n integral over A_n of |c_n|^{e(t)} |A_n|^{-e(t)/w(t)}.
inline Measured block_modular(std::span<const Block> blocks, const ExponentFunction& e, const ExponentFunction& w) {
  KahanSum sum, err;
  for (const auto& b : blocks) {
    if (b.coefficient == 0.0) continue;
    const double mu = b.set.measure();
    const double c = std::fabs(b.coefficient);
    for (const auto& iv : b.set.intervals()) {
      Plan<2> plan({&e.carrier(), &w.carrier()}, iv.lo, iv.hi);
      const auto r = plan.integrate([&](const auto& v) { return std::pow(c, v[0]) * std::pow(mu, -v[0] / v[1]); });
      sum += r.value;
      err += r.abs_error_bound;
    }
  }
  return {sum.value(), err.value()};
}

}  // namespace vlab
