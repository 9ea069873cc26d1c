#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "vlab/modular.hpp"
#include "vlab/series.hpp"

namespace vlab {

/// Inclusion L^{p(.)}[0,1] -> L^{q(.)}[0,1] with q <= p.
struct EmbeddingProblem {
  ExponentFunction p;
  ExponentFunction q;
  Function gap;  // p - q

  EmbeddingProblem(ExponentFunction p_, ExponentFunction q_)
      : p(std::move(p_)), q(std::move(q_)), gap(p.carrier() - q.carrier()) {}
};

inline constexpr int kInclusionGrid = 10000;

/// q <= p a.e.: exact bounds on step cells and monotone expression segments;
/// falls back to a 10^4 grid when an expression cannot be segmented.
inline bool check_inclusion(const EmbeddingProblem& prob) {
  try {
    return value_bounds(prob.gap, IntervalSet{Interval(0.0, 1.0)}).first >= -kTol;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Unsupported) throw;
  }
  for (int i = 0; i < kInclusionGrid; ++i) {
    const double t = (i + 0.5) / kInclusionGrid;
    if (eval(prob.gap, t) < -kTol) return false;
  }
  return true;
}

/// ess inf (p - q) over [0,1].
inline double ess_inf_gap(const EmbeddingProblem& prob) {
  const double v = value_bounds(prob.gap, IntervalSet{Interval(0.0, 1.0)}).first;
  return std::fabs(v) <= kTol ? 0.0 : v;
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

/// Index sequence given by a formula, used for x_n (increasing to 1) or r_k
/// (decreasing to 0).
struct SequenceGenerator {
  std::string name;
  Expr expr;
  long n0 = 1;
};

inline SequenceGenerator dyadic_generator() {
  const Expr n = Expr::var();
  return {"dyadic", Expr::constant(1.0) - Expr::pow(Expr::constant(0.5), n), 1};
}

/// x_n = 1 - (1/n)^{n-1}, n >= 2.
inline SequenceGenerator power_tower_generator() {
  const Expr n = Expr::var(), one = Expr::constant(1.0);
  return {"power-tower", one - Expr::pow(one / n, n - one), 2};
}

/// r_k = 2^{-k}.
inline SequenceGenerator dyadic_levels() {
  return {"dyadic-levels", Expr::pow(Expr::constant(0.5), Expr::var()), 1};
}

enum class DssKind { UniformGap, DisjointRanges, DyadicSum, LevelSetSum };

inline std::string to_string(DssKind k) {
  switch (k) {
    case DssKind::UniformGap: return "UNIFORM_GAP";
    case DssKind::DisjointRanges: return "DISJOINT_RANGES";
    case DssKind::DyadicSum: return "DYADIC_SUM";
    case DssKind::LevelSetSum: return "LEVEL_SET_SUM";
  }
  return "?";
}

struct DssCertificate {
  DssKind kind = DssKind::UniformGap;
  double delta = 0.0;     // UniformGap: 0 < delta < gap
  double gap = 0.0;       // UniformGap: ess inf (p - q)
  RangeSet range_p;       // DisjointRanges
  RangeSet range_q;
  SequenceGenerator sequence;  // DyadicSum: x_n; LevelSetSum: r_k
  double p_plus = 0.0;
  SeriesVerdict series;
};

/// UNIFORM_GAP with delta = gap / 2 when ess inf (p - q) > 1e-9.
inline std::optional<DssCertificate> criterion_uniform_gap(const EmbeddingProblem& prob) {
  const double g = ess_inf_gap(prob);
  if (!(g > 1e-9)) return std::nullopt;
  DssCertificate c;
  c.kind = DssKind::UniformGap;
  c.gap = g;
  c.delta = 0.5 * g;
  return c;
}

inline std::optional<DssCertificate> criterion_disjoint_ranges(const EmbeddingProblem& prob) {
  DssCertificate c;
  c.kind = DssKind::DisjointRanges;
  c.range_p = essential_range(prob.p);
  c.range_q = essential_range(prob.q);
  if (c.range_p.intersects(c.range_q)) return std::nullopt;
  return c;
}

// ---------------------------------------------------------------------------
// Decay of a disjoint normalized sequence under a uniform gap
// ---------------------------------------------------------------------------

namespace detail {

// [c, c + l) with integral over it of a^{p(t)} equal to target, l <= limit - c.
inline std::optional<Interval> place_block(const ExponentFunction& p, double c, double limit, double a,
                                           double target) {
  if (!(limit > c)) return std::nullopt;
  auto mass = [&](double l) {
    return modular(StepFunction::indicator(IntervalSet{Interval(c, c + l)}, a), p).value;
  };
  if (mass(limit - c) < target) return std::nullopt;
  double lo = 0.0, hi = limit - c;
  for (int i = 0; i < 200 && hi - lo > 1e-16 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi || c + mid <= c) break;
    (mass(mid) < target ? lo : hi) = mid;
  }
  if (!(c + hi > c)) return std::nullopt;
  return Interval(c, c + hi);
}

}  // namespace detail

struct DecayRow {
  long n = 0;
  double amplitude = 0.0;
  Interval support;
  double rho_p = 0.0;
  double rho_q = 0.0;
  double bound = 0.0;  // n^{-delta}
  bool ok = false;
};

struct DecayReport {
  double delta = 0.0;
  std::vector<DecayRow> rows;
  bool all_ok = true;
  bool nonincreasing = true;
};

/// f_n = a_n chi_{E_n}, disjoint, a_n = max(n, 2^{n/p-}) >= n and rho_p(f_n) = 1,
/// placed left to right; checks rho_q(f_n) <= n^{-delta} for n <= N.
inline DecayReport prop32_decay_check(const EmbeddingProblem& prob, const DssCertificate& cert, long N) {
  if (cert.kind != DssKind::UniformGap) throw Error(ErrorCode::PreconditionViolation, "needs a UNIFORM_GAP certificate");
  DecayReport out;
  out.delta = cert.delta;
  double cursor = 0.0;
  for (long n = 1; n <= N; ++n) {
    const double a = std::fmax(static_cast<double>(n), std::exp2(static_cast<double>(n) / prob.p.p_minus()));
    const auto E = detail::place_block(prob.p, cursor, 1.0, a, 1.0);
    if (!E)
      throw Error(ErrorCode::ConstructionFailure,
                  "supports exhaust [0,1]; max feasible N = " + std::to_string(n - 1));
    cursor = E->hi;
    const auto f = StepFunction::indicator(IntervalSet{*E}, a);
    DecayRow r;
    r.n = n;
    r.amplitude = a;
    r.support = *E;
    r.rho_p = modular(f, prob.p).value;
    r.rho_q = modular(f, prob.q).value;
    r.bound = std::pow(static_cast<double>(n), -cert.delta);
    r.ok = r.rho_q <= r.bound * (1.0 + 1e-12);
    out.all_ok = out.all_ok && r.ok;
    if (!out.rows.empty() && r.rho_q > out.rows.back().rho_q * (1.0 + 1e-12)) out.nonincreasing = false;
    out.rows.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dyadic-sum criterion
// ---------------------------------------------------------------------------

namespace detail {

// ln(c_n - c_{n+1}) for a decreasing positive sequence given by ln c.
inline double log_decrement(double lc0, double lc1) {
  if (std::isinf(lc0) && lc0 < 0) return -kInf;
  const double d = lc1 - lc0;
  if (!(d < 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return lc0 + std::log1p(-std::exp(d));
}

// g at the point with 1 - x = c (ln c = lc). Uses the tail value directly when
// the point is a tail endpoint of the same sequence; when the point is below
// double resolution, falls back to ess inf g, which can only enlarge the term.
inline double gap_at(const EmbeddingProblem& prob, const SequenceGenerator& gen, long n, double fallback) {
  if (const auto* t = std::get_if<TailFamily>(&prob.gap))
    if (t->x_expr() == gen.expr && n >= t->n0()) return t->value(n);
  const double c = gen.expr.complement().at(n);
  if (!(c > 0.0)) return fallback;
  try {
    return eval(prob.gap, Point{1.0 - c, c});
  } catch (const Error&) {
    return fallback;
  }
}

// Bounds of p on part of the generator cell n. When p is a tail on the same
// endpoints its cell value is used, avoiding rounding slivers of neighbours.
inline std::pair<double, double> cell_bounds(const ExponentFunction& p, const SequenceGenerator& gen, long n,
                                             const Interval& part) {
  if (const auto* t = std::get_if<TailFamily>(&p.carrier()))
    if (t->x_expr() == gen.expr && n >= t->n0()) return {t->value(n), t->value(n)};
  return value_bounds(p.carrier(), IntervalSet{part});
}

}  // namespace detail

/// Term (x_{n+1} - x_n)^{g(x_{n+1}) / p+} of the dyadic-sum series, in log form.
inline SeriesTerm prop33_term(const EmbeddingProblem& prob, const SequenceGenerator& gen) {
  const Expr comp = gen.expr.complement();
  const double pp = prob.p.p_plus();
  const double fallback = std::fmax(0.0, ess_inf_gap(prob));
  auto lg = [prob, gen, comp, pp, fallback](long n) {
    const double g = detail::gap_at(prob, gen, n + 1, fallback);
    if (g == 0.0) return 0.0;
    return g / pp * detail::log_decrement(log_at(comp, n), log_at(comp, n + 1));
  };
  return SeriesTerm::from_log(lg);
}

/// x_n strictly increasing on [n0, n0 + window] with limit 1.
inline bool validate_increasing_to_one(const SequenceGenerator& gen, long window = 2000) {
  const Expr comp = gen.expr.complement();
  const auto lim = comp.limit_at_infinity();
  if (!lim || *lim != 0.0) return false;
  double prev = log_at(comp, gen.n0);
  for (long n = gen.n0 + 1; n <= gen.n0 + window; ++n) {
    const double cur = log_at(comp, n);
    if (std::isnan(cur) || !(cur < prev)) return false;
    prev = cur;
  }
  return true;
}

/// DYADIC_SUM when p - q is certified nonincreasing and the series converges.
inline std::optional<DssCertificate> criterion_prop33(const EmbeddingProblem& prob, const SequenceGenerator& gen) {
  if (monotonicity_check(prob.gap) != Monotonicity::Nonincreasing)
    throw Error(ErrorCode::HypothesisFail, "p - q is not certified nonincreasing");
  if (!validate_increasing_to_one(gen))
    throw Error(ErrorCode::PreconditionViolation, "generator " + gen.name + " is not increasing to 1");
  DssCertificate c;
  c.kind = DssKind::DyadicSum;
  c.sequence = gen;
  c.p_plus = prob.p.p_plus();
  c.series = certify(prop33_term(prob, gen), gen.n0);
  if (c.series.status != SeriesStatus::Converges) return std::nullopt;
  return c;
}

struct EpsilonRow {
  long k = 0;
  long cell = 0;  // tail index n of the generator cell holding the B and C parts
  double prefix_q = 0.0;
  double prefix_bound = 0.0;  // uniform-gap bound (1/3) a_k^{-delta}
  double b_q = 0.0;
  double c_q = 0.0;
  double rho_p = 0.0;
  double total_q = 0.0;
  bool prefix_ok = false;
  bool b_ok = false;
  bool c_ok = false;
  bool total_ok = false;
};

struct EpsilonReport {
  double eps = 0.0;
  long n0 = 0;
  double tail_at_n0 = 0.0;
  double x_n0 = 0.0;
  double delta_prefix = 0.0;
  std::optional<long> k0;
  std::vector<EpsilonRow> rows;
};

/// Runs the three estimates of the dyadic-sum argument on a constructed
/// normalized disjoint family f_k = prefix part + B part + C part, where the
/// prefix part sits in [0, x_{n0}) and the B and C parts share the cell
/// [x_n, x_{n+1}) with n = n0 + k - 1.
inline EpsilonReport certificate_prop33_epsilon(const EmbeddingProblem& prob, const DssCertificate& cert, double eps,
                                                long K = 12) {
  if (cert.kind != DssKind::DyadicSum) throw Error(ErrorCode::PreconditionViolation, "needs a DYADIC_SUM certificate");
  if (!(eps > 0.0)) throw Error(ErrorCode::PreconditionViolation, "eps must be positive");
  const auto& gen = cert.sequence;
  const auto term = prop33_term(prob, gen);
  const auto& sv = cert.series;
  EpsilonReport out;
  out.eps = eps;
  // tail(n) = sum_{m >= n} term(m), from partial sums plus the certified tail bound.
  std::vector<double> terms;
  for (long n = gen.n0; n <= sv.partial_to; ++n) terms.push_back(term.value(n));
  std::vector<double> tails(terms.size() + 1, sv.tail_bound);
  {
    KahanSum s;
    s += sv.tail_bound;
    for (std::size_t i = terms.size(); i-- > 0;) {
      s += terms[i];
      tails[i] = s.value();
    }
  }
  std::optional<long> n0;
  for (std::size_t i = 0; i < tails.size(); ++i)
    if (tails[i] <= eps / 3.0) {
      n0 = gen.n0 + static_cast<long>(i);
      out.tail_at_n0 = tails[i];
      break;
    }
  if (!n0) throw Error(ErrorCode::ConstructionFailure, "tail never falls below eps/3 on the certified range");
  out.n0 = *n0;
  const Expr comp = gen.expr.complement();
  out.x_n0 = gen.expr.at(out.n0);
  if (!(out.x_n0 > 0.0)) throw Error(ErrorCode::ConstructionFailure, "x_{n0} leaves no prefix room");
  out.delta_prefix = value_bounds(prob.gap, IntervalSet{Interval(0.0, out.x_n0)}).first;

  double cursor = 0.0;
  for (long k = 1; k <= K; ++k) {
    const long n = out.n0 + k - 1;
    const double c0 = comp.at(n), c1 = comp.at(n + 1);
    const double xa = 1.0 - c0, xb = 1.0 - c1;
    const double mid = 0.5 * (xa + xb);
    if (!(xa < mid && mid < xb && xb < 1.0) || !(mid - xa > kTol && xb - mid > kTol)) break;
    const double dx = c0 - c1;
    EpsilonRow row;
    row.k = k;
    row.cell = n;
    // Prefix part: mass 1/3, amplitude large enough that supports fit.
    const double a = std::fmax(static_cast<double>(k), std::exp2(static_cast<double>(k) / prob.p.p_minus()));
    const auto E = detail::place_block(prob.p, cursor, out.x_n0, a, 1.0 / 3.0);
    if (!E) throw Error(ErrorCode::ConstructionFailure, "prefix room exhausted at k = " + std::to_string(k));
    cursor = E->hi;
    const auto fp = StepFunction::indicator(IntervalSet{*E}, a);
    const double rho_pre = modular(fp, prob.p).value;
    // C part on the right half: |f| > dx^{-1/p(t)}, mass 1/3.
    const auto [pm_r, pp_r] = detail::cell_bounds(prob.p, gen, n, Interval(mid, xb));
    (void)pp_r;
    const double c = 2.0 * std::pow(dx, -1.0 / pm_r);
    const auto C = detail::place_block(prob.p, mid, xb, c, 1.0 / 3.0);
    if (!C) throw Error(ErrorCode::ConstructionFailure, "C part does not fit in cell " + std::to_string(n));
    const auto fc = StepFunction::indicator(IntervalSet{*C}, c);
    const double rho_c = modular(fc, prob.p).value;
    // B part on the left half: |f| <= dx^{-1/p(t)}; its amplitude absorbs the
    // rest of the mass, which keeps rho_p(f_k) = 1 despite the coarse grid near 1.
    const auto [pm_l, pp_l] = detail::cell_bounds(prob.p, gen, n, Interval(xa, mid));
    (void)pm_l;
    const IntervalSet left{Interval(xa, mid)};
    auto mass_b = [&](double amp) { return modular(StepFunction::indicator(left, amp), prob.p).value; };
    const double want = 1.0 - rho_pre - rho_c;
    double blo = 0.0, bhi = std::pow(dx, -1.0 / pp_l);
    if (mass_b(bhi) < want) throw Error(ErrorCode::ConstructionFailure, "B part cannot carry its mass");
    for (int i = 0; i < 200 && bhi - blo > 1e-16 * bhi; ++i) {
      const double m = 0.5 * (blo + bhi);
      (mass_b(m) < want ? blo : bhi) = m;
    }
    const auto fb = StepFunction::indicator(left, bhi);
    const double rho_b = mass_b(bhi);
    row.prefix_q = modular(fp, prob.q).value;
    row.prefix_bound = std::pow(a, -out.delta_prefix) / 3.0;
    row.b_q = modular(fb, prob.q).value;
    row.c_q = modular(fc, prob.q).value;
    row.rho_p = rho_pre + rho_b + rho_c;
    row.total_q = row.prefix_q + row.b_q + row.c_q;
    row.prefix_ok = row.prefix_q < eps / 3.0;
    row.b_ok = row.b_q <= out.tail_at_n0 * (1.0 + 1e-12) && row.b_q <= eps / 3.0;
    row.c_ok = row.c_q <= eps / 3.0;
    row.total_ok = row.total_q <= eps;
    out.rows.push_back(row);
  }
  if (out.rows.empty()) throw Error(ErrorCode::ConstructionFailure, "no representable cell beyond x_{n0}");
  // k0: first k from which every row passes.
  for (std::size_t i = out.rows.size(); i-- > 0;) {
    const auto& r = out.rows[i];
    if (!(r.prefix_ok && r.b_ok && r.c_ok && r.total_ok)) break;
    out.k0 = r.k;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Level-set criterion
// ---------------------------------------------------------------------------

struct LogLevel {
  double log_measure = -kInf;
  double inf = std::nan("");
};

inline constexpr double kNearOne = 0x1p-40;  // below this 1 - x, level sets are measured in u = 1 - x
inline constexpr double kDeepestBit = 1000.0;  // u = 2^-1000 is the last resolvable point

namespace detail {

inline double log_add(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::nan("");
  const double hi = std::fmax(a, b), lo = std::fmin(a, b);
  return std::isinf(lo) ? hi : hi + std::log1p(std::exp(lo - hi));
}

// Level set of e(1 - u, u) for u in (0, 2^-s_lo], e monotone in u there.
// Parametrized by s = -log2 u; nullopt when the set reaches beyond u = 2^-1000.
inline std::optional<LogLevel> u_level(const Expr& e, double s_lo, const ValueBand& band) {
  auto G = [&](double s) {
    const double u = std::exp2(-s);
    return e.eval(1.0 - u, u);
  };
  const double limit = e.eval(1.0, 0.0);
  const double g_lo = G(s_lo), g_hi = G(kDeepestBit);
  if (std::isnan(limit) || std::isnan(g_lo) || std::isnan(g_hi)) return std::nullopt;
  // Values taken beyond s = 1000 lie between g_hi and the limit.
  const double beyond_lo = std::fmin(g_hi, limit), beyond_hi = std::fmax(g_hi, limit);
  if (band.contains(g_hi) || band.contains(limit) || (band.lo < beyond_hi && band.hi > beyond_lo)) return std::nullopt;
  LogLevel out;
  const bool up = g_hi > g_lo;  // direction in s
  auto in = [&](double s) { return band.contains(G(s)); };
  auto past_lo = [&](double s) {  // the band's near edge has been crossed
    const double v = G(s);
    return up ? (band.lo_closed ? v >= band.lo : v > band.lo) : (band.hi_closed ? v <= band.hi : v < band.hi);
  };
  auto past_hi = [&](double s) {  // the band's far edge has been crossed
    const double v = G(s);
    return up ? (band.hi_closed ? v > band.hi : v >= band.hi) : (band.lo_closed ? v < band.lo : v <= band.lo);
  };
  if (past_hi(s_lo) || !past_lo(kDeepestBit)) return out;
  const double sa = past_lo(s_lo) ? s_lo : bisect_boundary(past_lo, s_lo, kDeepestBit);
  const double sb = bisect_boundary(past_hi, sa, kDeepestBit);
  if (!(sb > sa) || !in(0.5 * (sa + sb))) return out;
  out.log_measure = -sa * std::log(2.0) + std::log1p(-std::exp2(-(sb - sa)));
  out.inf = std::clamp(std::fmin(G(sa), G(sb)), band.lo, band.hi);
  return out;
}

// Non-tail carriers: x-space level set on [0, 1 - 2^-40), u-space beyond.
inline LogLevel log_level_plain(const Function& g, const ValueBand& band) {
  const double x0 = 1.0 - kNearOne;
  LogLevel out;
  double inf = kInf;
  const auto ls = level_set(g, band);
  const double head = ls.set.intersect(IntervalSet{Interval(0.0, x0)}).measure();
  if (head > 0.0) {
    out.log_measure = std::log(head);
    inf = ls.inf;
  }
  for (const auto& sg : segments(g, x0, 1.0).segs) {
    if (sg.measure <= 0.0) continue;
    if (sg.constant) {
      if (band.contains(*sg.constant)) {
        out.log_measure = log_add(out.log_measure, std::log(sg.measure));
        inf = std::fmin(inf, *sg.constant);
      }
      continue;
    }
    const auto ms = monotone_segments(sg.expr, sg.iv.lo, sg.iv.hi);
    if (!ms) return {std::nan(""), std::nan("")};
    for (const auto& m : *ms) {
      if (m.hi < 1.0) {
        if (const auto iv = monotone_preimage(sg.expr, m, band)) {
          out.log_measure = log_add(out.log_measure, std::log(iv->measure()));
          const double a = sg.expr.eval(iv->lo, 1.0 - iv->lo), b = sg.expr.eval(iv->hi, 1.0 - iv->hi);
          inf = std::fmin(inf, std::clamp(std::fmin(a, b), band.lo, band.hi));
        }
        continue;
      }
      const auto lv = u_level(sg.expr, -std::log2(1.0 - m.lo), band);
      if (!lv) return {std::nan(""), std::nan("")};
      if (!std::isinf(lv->log_measure)) {
        out.log_measure = log_add(out.log_measure, lv->log_measure);
        inf = std::fmin(inf, lv->inf);
      }
    }
  }
  if (!std::isinf(out.log_measure)) out.inf = inf;
  return out;
}

}  // namespace detail

/// ln mu{g in band} and ess inf g there, measured in log form near 1 so that
/// measures below double spacing stay usable; NaN when the set reaches past
/// what can be resolved. band.lo must be > 0 or open at 0.
inline LogLevel log_level(const Function& g, const ValueBand& band) {
  const auto* t = std::get_if<TailFamily>(&g);
  if (!t) return detail::log_level_plain(g, band);
  LogLevel out;
  double inf = kInf;
  auto add = [&](double lm) {
    if (std::isinf(lm) && lm < 0) return;
    const double a = std::fmax(out.log_measure, lm), b = std::fmin(out.log_measure, lm);
    out.log_measure = std::isinf(b) ? a : a + std::log1p(std::exp(b - a));
  };
  const auto head = level_set(detail::as_function(t->prefix()), band);
  const double head_mu = head.set.intersect(IntervalSet{Interval(0.0, t->start())}).measure();
  if (head_mu > 0.0) {
    add(std::log(head_mu));
    inf = std::fmin(inf, head.inf);
  }
  const Expr comp = t->x_expr().complement();
  const auto& tr = t->trend();
  auto before_band = [&](double v) {
    return tr.direction == -1 ? (v > band.hi || (!band.hi_closed && v == band.hi))
                              : (v < band.lo || (!band.lo_closed && v == band.lo));
  };
  long n = t->n0();
  double lc0 = log_at(comp, n);
  for (; n < kTailIndexCap; ++n) {
    const double v = t->value(n);
    if (n >= tr.monotone_from && (tr.direction == -1 || tr.direction == 1) && before_band(v)) {
      // Gallop to the last index still before the band.
      long lo = n, step = 1;
      while (lo + step < kTailIndexCap && before_band(t->value(lo + step))) {
        lo += step;
        step *= 2;
      }
      long hi = std::min(lo + step, kTailIndexCap);
      while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        (before_band(t->value(mid)) ? lo : hi) = mid;
      }
      if (hi >= kTailIndexCap) {
        n = kTailIndexCap;
        lc0 = log_at(comp, n);
        break;
      }
      n = hi - 1;
      lc0 = log_at(comp, hi);
      continue;
    }
    const double lc1 = log_at(comp, n + 1);
    if (band.contains(v)) {
      add(detail::log_decrement(lc0, lc1));
      inf = std::fmin(inf, v);
    }
    lc0 = lc1;
    if (n >= tr.monotone_from && tr.direction != 2) {
      if (tr.direction == -1 && (v < band.lo || (!band.lo_closed && v == band.lo))) break;
      if (tr.direction == 1 && (v > band.hi || (!band.hi_closed && v == band.hi))) break;
      if (tr.direction == 0 && !band.contains(v)) break;
    }
  }
  if (n >= kTailIndexCap) {
    // Everything beyond the cap may lie in the band.
    add(lc0);
    if (tr.limit) inf = std::fmin(inf, *tr.limit);
  }
  if (!std::isinf(out.log_measure)) out.inf = inf;
  return out;
}

/// Term mu(R_k)^{(p-q)^-_{R_k} / p+} with R_k = (p-q)^{-1}((r_{k+1}, r_k]), in log form.
inline SeriesTerm prop35_term(const EmbeddingProblem& prob, const SequenceGenerator& r) {
  const double pp = prob.p.p_plus();
  auto lg = [prob, r, pp](long k) {
    const ValueBand band{r.expr.at(k + 1), r.expr.at(k), false, true};
    const auto lv = log_level(prob.gap, band);
    if (std::isnan(lv.log_measure)) return std::nan("");
    if (std::isinf(lv.log_measure)) return -kInf;
    if (lv.inf == 0.0) return 0.0;
    return lv.inf / pp * lv.log_measure;
  };
  return SeriesTerm::from_log(lg);
}

/// r_k strictly decreasing with limit 0 on [k0, k0 + window].
inline bool validate_decreasing_to_zero(const SequenceGenerator& r, long window = 2000) {
  const auto lim = r.expr.limit_at_infinity();
  if (!lim || *lim != 0.0) return false;
  double prev = log_at(r.expr, r.n0);
  if (std::isnan(prev) || std::isinf(prev)) return false;
  for (long k = r.n0 + 1; k <= r.n0 + window; ++k) {
    const double cur = log_at(r.expr, k);
    if (std::isnan(cur) || !(cur < prev)) return false;
    prev = cur;
  }
  return true;
}

/// LEVEL_SET_SUM when sum_k mu(R_k)^{(p-q)^-_{R_k}/p+} converges and {p = q} is null.
inline std::optional<DssCertificate> criterion_prop35(const EmbeddingProblem& prob, const SequenceGenerator& r) {
  if (!validate_decreasing_to_zero(r))
    throw Error(ErrorCode::PreconditionViolation, "level sequence " + r.name + " is not decreasing to 0");
  // The level sets only cover {0 < p - q <= r_1}; a non-null set {p = q} is
  // outside every R_k and the criterion does not apply.
  if (level_measure(prob.gap, ValueBand{-kInf, 0.0, false, true}) > 0.0) return std::nullopt;
  DssCertificate c;
  c.kind = DssKind::LevelSetSum;
  c.sequence = r;
  c.p_plus = prob.p.p_plus();
  c.series = certify(prop35_term(prob, r), r.n0);
  if (c.series.status != SeriesStatus::Converges) return std::nullopt;
  return c;
}

}  // namespace vlab
