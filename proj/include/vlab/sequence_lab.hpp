#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vlab/modular.hpp"
#include "vlab/series.hpp"

namespace vlab {

/// Three-valued verdict.
enum class Tri { Yes, No, Unknown };

inline std::string to_string(Tri t) {
  switch (t) {
    case Tri::Yes: return "YES";
    case Tri::No: return "NO";
    case Tri::Unknown: return "UNKNOWN";
  }
  return "?";
}

/// Nonzero step functions with pairwise disjoint supports.
class DisjointSimpleSequence {
 public:
  DisjointSimpleSequence() = default;
  explicit DisjointSimpleSequence(std::vector<StepFunction> members, double exponent_tolerance = 0.0)
      : members_(std::move(members)), exponent_tolerance_(exponent_tolerance) {
    std::vector<IntervalSet> supports;
    for (const auto& m : members_) {
      if (m.is_zero()) throw Error(ErrorCode::PreconditionViolation, "sequence member is zero");
      supports.push_back(m.support());
    }
    if (!pairwise_disjoint(supports)) throw Error(ErrorCode::PreconditionViolation, "supports are not disjoint");
  }

  std::span<const StepFunction> members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  const StepFunction& operator[](std::size_t k) const { return members_.at(k); }
  /// Largest deviation of the step approximant of p used in construction (0 if exact).
  double exponent_tolerance() const { return exponent_tolerance_; }

 private:
  std::vector<StepFunction> members_;
  double exponent_tolerance_ = 0.0;
};

namespace detail {

struct ExponentCell {
  Interval iv;
  double value;
};

// Piecewise-constant approximation of p on B; exact on constant segments,
// expression segments are split until their range is narrower than tol.
inline std::vector<ExponentCell> step_approximant(const Function& p, const IntervalSet& B, double tol,
                                                  double& max_dev) {
  std::vector<ExponentCell> out;
  std::function<void(const Expr&, double, double, int)> split = [&](const Expr& e, double a, double b, int depth) {
    auto r = expr_range(e, a, b);
    if (!r) throw Error(ErrorCode::Unsupported, "exponent cannot be bounded on a piece");
    const double w = r->second - r->first;
    if (w <= 2 * tol || depth > 40) {
      out.push_back({Interval(a, b), 0.5 * (r->first + r->second)});
      max_dev = std::fmax(max_dev, 0.5 * w);
      return;
    }
    const double m = 0.5 * (a + b);
    split(e, a, m, depth + 1);
    split(e, m, b, depth + 1);
  };
  for (const auto& iv : B.intervals()) {
    const auto list = segments(p, iv.lo, iv.hi);
    if (list.leftover > 0.0) throw Error(ErrorCode::Unsupported, "set reaches below double resolution near 1");
    for (const auto& s : list.segs) {
      if (s.constant)
        out.push_back({s.iv, *s.constant});
      else
        split(s.expr, s.iv.lo, s.iv.hi, 0);
    }
  }
  return out;
}

}  // namespace detail

/// g_k = chi_{A_k} mu(A_k)^{-1/p(t)}. Expression exponents are replaced by a
/// step approximant within tol (recorded on the result); the cell count grows
/// like (range of p) / tol.
inline DisjointSimpleSequence build_gk(std::span<const IntervalSet> A, const ExponentFunction& p, double tol = 1e-4) {
  if (!pairwise_disjoint(A)) throw Error(ErrorCode::PreconditionViolation, "sets are not disjoint");
  std::vector<StepFunction> g;
  double dev = 0.0;
  for (std::size_t k = 0; k < A.size(); ++k) {
    const double mu = A[k].measure();
    if (!(mu > 0.0)) throw Error(ErrorCode::NullSet, "A_" + std::to_string(k + 1) + " has measure zero");
    std::vector<Cell> cells;
    for (const auto& c : detail::step_approximant(p.carrier(), A[k], tol, dev))
      cells.push_back({c.iv, std::pow(mu, -1.0 / c.value)});
    g.push_back(StepFunction::from_cells(cells));
  }
  return DisjointSimpleSequence(std::move(g), dev);
}

/// Function on [0,1] with psi(0) = 0.
class OrliczFunction {
 public:
  OrliczFunction(std::function<double(double)> eval, std::string label)
      : eval_(std::move(eval)), label_(std::move(label)) {}

  double operator()(double s) const { return eval_(s); }
  const std::string& label() const { return label_; }

  /// psi(0) = 0, nondecreasing and convex on the grid {i / grid}
  /// (second differences >= -1e-8).
  bool valid(int grid = 1000) const {
    std::vector<double> v(static_cast<std::size_t>(grid) + 1);
    for (int i = 0; i <= grid; ++i) v[static_cast<std::size_t>(i)] = eval_(static_cast<double>(i) / grid);
    if (std::fabs(v[0]) > kTol) return false;
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] < v[i - 1] - 1e-12) return false;
      if (i + 1 < v.size() && v[i + 1] - 2 * v[i] + v[i - 1] < -1e-8) return false;
    }
    return true;
  }

 private:
  std::function<double(double)> eval_;
  std::string label_;
};

namespace detail {

inline constexpr double kPsiQuadTol = 1e-15;

}  // namespace detail

/// psi(s) = (1 / mu(A)) * integral over A of s^{p(t)}.
inline OrliczFunction orlicz_psi_indicator(const IntervalSet& A, const ExponentFunction& p) {
  const double mu = A.measure();
  if (!(mu > 0.0)) throw Error(ErrorCode::NullSet, "psi: set has measure zero");
  auto plans = std::make_shared<std::vector<Plan<1>>>();
  for (const auto& iv : A.intervals()) plans->emplace_back(std::array<const Function*, 1>{&p.carrier()}, iv.lo, iv.hi);
  // The plans hold copies of the segments, so p may go out of scope.
  return OrliczFunction(
      [plans, mu](double s) {
        if (s == 0.0) return 0.0;
        KahanSum sum;
        for (const auto& pl : *plans)
          sum += pl.integrate([s](const auto& v) { return std::pow(s, v[0]); }, detail::kPsiQuadTol).value;
        return sum.value() / mu;
      },
      "psi_indicator");
}

/// psi(s) = (1 / rho_p(g_k)) * integral of (s |g_k(t)|)^{p(t)}; k is 0-based.
inline OrliczFunction orlicz_psi_general(const DisjointSimpleSequence& g, std::size_t k, const ExponentFunction& p) {
  auto gk = std::make_shared<Function>(g[k]);
  auto plan = std::make_shared<Plan<2>>(std::array<const Function*, 2>{gk.get(), &p.carrier()});
  const double rho = plan->integrate([](const auto& v) { return std::pow(std::fabs(v[0]), v[1]); },
                                     detail::kPsiQuadTol).value;
  if (!(rho > 0.0)) throw Error(ErrorCode::ZeroModular, "psi: g_k has zero modular");
  return OrliczFunction(
      [plan, gk, rho](double s) {
        if (s == 0.0) return 0.0;
        return plan->integrate([s](const auto& v) { return std::pow(s * std::fabs(v[0]), v[1]); },
                               detail::kPsiQuadTol).value / rho;
      },
      "psi_general");
}

/// Checks s^{q+1/k} <= psi(s) <= s^{q+1/(k+1)} <= s^q at s = i / grid.
inline bool psi_sandwich_check(const IntervalSet& A, const ExponentFunction& p, double q, long k, int grid = 1000) {
  const double lo = q + 1.0 / static_cast<double>(k + 1), hi = q + 1.0 / static_cast<double>(k);
  const auto [pm, pp] = ess_bounds(p, A);
  if (pm < lo - kTol || pp > hi + kTol)
    throw Error(ErrorCode::PreconditionViolation, "p leaves the band [" + std::to_string(lo) + ", " +
                                                      std::to_string(hi) + ") on A_k");
  const auto psi = orlicz_psi_indicator(A, p);
  const double slack = 1e-10;
  for (int i = 0; i <= grid; ++i) {
    const double s = static_cast<double>(i) / grid;
    const double v = psi(s);
    const double a = std::pow(s, hi), b = std::pow(s, lo), c = std::pow(s, q);
    if (a > v + slack || v > b + slack || b > c + slack) return false;
  }
  return true;
}

/// Orlicz index s psi'(s) / psi(s) by central differences of ln psi against ln s.
inline double orlicz_index(const OrliczFunction& psi, double s, double h = 1e-6) {
  return (std::log(psi(s + h)) - std::log(psi(s - h))) / (std::log(s + h) - std::log(s - h));
}

/// Whether the index stays in [pMinus - 1e-3, pPlus + 1e-3] on s = 0.01, 0.02, ..., 0.99.
inline bool orlicz_index_check(const OrliczFunction& psi, double p_minus, double p_plus) {
  for (int i = 1; i <= 99; ++i) {
    const double idx = orlicz_index(psi, i / 100.0);
    if (!(idx >= p_minus - 1e-3 && idx <= p_plus + 1e-3)) return false;
  }
  return true;
}

/// Bands A_k = p^{-1}([q + 1/(k+1), q + 1/k)) for k = 1..K.
inline std::vector<IntervalSet> band_sets(const Function& p, double q, long K) {
  std::vector<IntervalSet> out;
  for (long k = 1; k <= K; ++k) {
    ValueBand b{q + 1.0 / static_cast<double>(k + 1), q + 1.0 / static_cast<double>(k), true, false};
    out.push_back(level_set(p, b).set);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Nakano coincidence and regularity
// ---------------------------------------------------------------------------

enum class Coincidence { Coincide, Differ, Unknown };

inline std::string to_string(Coincidence c) {
  switch (c) {
    case Coincidence::Coincide: return "COINCIDE";
    case Coincidence::Differ: return "DIFFER";
    case Coincidence::Unknown: return "UNKNOWN";
  }
  return "?";
}

struct CoincidenceResult {
  Coincidence verdict = Coincidence::Unknown;
  SeriesVerdict series;
  std::string reason;
};

/// Nakano exponents, either a formula in n or a finite list.
struct NakanoSeqExponents {
  std::optional<Expr> formula;
  std::vector<double> values;
  long n0 = 1;

  static NakanoSeqExponents of(Expr e, long n0 = 1) { return {std::move(e), {}, n0}; }
  static NakanoSeqExponents of(std::vector<double> v) { return {std::nullopt, std::move(v), 1}; }
  double at(long n) const { return formula ? formula->at(n) : values.at(static_cast<std::size_t>(n - 1)); }
};

inline constexpr long kNakanoWindow = 10000;

/// l^{(p_n)} = l^{(q_n)} iff sum (1/2)^{p_n q_n / |p_n - q_n|} converges.
inline CoincidenceResult nakano_coincide(const NakanoSeqExponents& p, const NakanoSeqExponents& q,
                                         double cap = kExponentCap) {
  CoincidenceResult out;
  const bool finite = !p.formula && !q.formula;
  const long n0 = std::max(p.n0, q.n0);
  const long last = finite ? static_cast<long>(std::min(p.values.size(), q.values.size())) : kNakanoWindow;
  for (long n = n0; n <= last; ++n) {
    const double a = p.at(n), b = q.at(n);
    if (!(a >= 1.0 - kTol && a <= cap + kTol && b >= 1.0 - kTol && b <= cap + kTol)) {
      out.reason = "exponent out of [1, M] at n = " + std::to_string(n);
      return out;
    }
  }
  auto log_term = [p, q](long n) {
    const double a = p.at(n), b = q.at(n);
    if (a == b) return -kInf;
    return -std::log(2.0) * a * b / std::fabs(a - b);
  };
  if (finite) {
    // A finite family gives a finite sum; the spaces are then trivially comparable.
    KahanSum s;
    for (long n = 1; n <= last; ++n) s += std::exp(log_term(n));
    out.verdict = Coincidence::Coincide;
    out.series.partial_sum = s.value();
    out.series.partial_to = last;
    out.reason = "finite family";
    return out;
  }
  out.series = certify(SeriesTerm::from_log(log_term), n0);
  switch (out.series.status) {
    case SeriesStatus::Converges: out.verdict = Coincidence::Coincide; break;
    case SeriesStatus::Diverges: out.verdict = Coincidence::Differ; break;
    case SeriesStatus::Unknown:
      out.verdict = Coincidence::Unknown;
      out.reason = out.series.reason;
      break;
  }
  return out;
}

struct RegularityResult {
  Tri regular = Tri::Unknown;
  /// Smallest C with 1/C <= mu(A_k)^{gap_k} <= C over the examined indices;
  /// any larger C keeps the verdict.
  double C = 1.0;
  std::vector<double> mu_pow_gap;
  std::vector<double> gaps;
  CoincidenceResult coincidence;
  std::string details;
};

/// Regularity over a supplied finite family A_1..A_K.
inline RegularityResult regularity_check(std::span<const IntervalSet> A, const ExponentFunction& p) {
  if (!pairwise_disjoint(A)) throw Error(ErrorCode::PreconditionViolation, "sets are not disjoint");
  RegularityResult out;
  std::vector<double> pp, pm;
  for (std::size_t k = 0; k < A.size(); ++k) {
    const double mu = A[k].measure();
    if (!(mu > 0.0)) throw Error(ErrorCode::NullSet, "A_" + std::to_string(k + 1) + " has measure zero");
    const auto [lo, hi] = ess_bounds(p, A[k]);
    pm.push_back(lo);
    pp.push_back(hi);
    const double gap = hi - lo;
    const double v = std::pow(mu, gap);
    out.gaps.push_back(gap);
    out.mu_pow_gap.push_back(v);
    out.C = std::fmax(out.C, std::fmax(v, 1.0 / v));
  }
  out.coincidence = nakano_coincide(NakanoSeqExponents::of(pp), NakanoSeqExponents::of(pm));
  out.regular = out.coincidence.verdict == Coincidence::Coincide   ? Tri::Yes
                : out.coincidence.verdict == Coincidence::Differ ? Tri::No
                                                                  : Tri::Unknown;
  out.details = "finite family of " + std::to_string(A.size()) + " sets";
  return out;
}

/// Infinite family described by formulas in k: ln mu(A_k), the oscillation
/// p+ - p- on A_k, and p- on A_k. The oscillation is given directly since
/// subtracting nearby exponents loses most of its digits.
struct RegularityFamily {
  Expr log_measure;
  Expr gap;
  Expr p_minus;
  long k0 = 1;

  Expr p_plus() const { return p_minus + gap; }
};

/// Regularity of a formula family. w_k = gap_k ln mu(A_k) converges when the
/// increments |w_{k+1} - w_k| have a convergent certificate; it is unbounded
/// when w is monotone on the window and the increments certify divergence.
inline RegularityResult regularity_check(const RegularityFamily& fam) {
  RegularityResult out;
  auto w = [&](long k) { return fam.gap.at(k) * fam.log_measure.at(k); };
  const long window = kNakanoWindow;
  double wmax = 0.0;
  int dir = 0;
  bool monotone = true;
  double prev = w(fam.k0);
  for (long k = fam.k0; k <= fam.k0 + window; ++k) {
    const double v = k == fam.k0 ? prev : w(k);
    if (!std::isfinite(v)) {
      out.details = "w_k undefined at k = " + std::to_string(k);
      return out;
    }
    wmax = std::fmax(wmax, std::fabs(v));
    if (k <= fam.k0 + 50) {
      out.gaps.push_back(fam.gap.at(k));
      out.mu_pow_gap.push_back(std::exp(v));
    }
    if (k > fam.k0) {
      const double d = v - prev;
      const int s = std::fabs(d) <= 1e-13 * (1.0 + std::fabs(v)) ? 0 : (d > 0 ? 1 : -1);
      if (s != 0) {
        if (dir != 0 && s != dir) monotone = false;
        dir = s;
      }
    }
    prev = v;
  }
  auto inc = [w](long k) {
    const double a = w(k), b = w(k + 1);
    const double d = std::fabs(b - a);
    return d <= 1e-13 * (1.0 + std::fabs(a)) ? -kInf : std::log(d);
  };
  const auto series = certify(SeriesTerm::from_log(inc), fam.k0);
  out.C = std::exp(wmax);
  if (series.status == SeriesStatus::Converges) {
    out.coincidence = nakano_coincide(NakanoSeqExponents::of(fam.p_plus(), fam.k0),
                                      NakanoSeqExponents::of(fam.p_minus, fam.k0));
    // Bound on |w| beyond the window from the increment series.
    out.C = std::exp(wmax + series.total_bound());
    out.regular = out.coincidence.verdict == Coincidence::Coincide   ? Tri::Yes
                  : out.coincidence.verdict == Coincidence::Differ ? Tri::No
                                                                    : Tri::Unknown;
    out.details = "mu^gap bounded";
  } else if (series.status == SeriesStatus::Diverges && monotone) {
    out.regular = Tri::No;
    out.C = kInf;
    out.details = "mu^gap is monotone with divergent increments";
  } else {
    out.details = "boundedness of mu^gap not certified";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Truncation
// ---------------------------------------------------------------------------

struct Truncation {
  StepFunction g;
  double bound = 0.0;
  double removed_measure = 0.0;
};

/// g = f chi_{|f| > r}; rho_p(f - g) <= mu(supp f \ supp g) * max(r^{p+}, r^{p-}),
/// which is the r^{p+} of the threshold step whenever r >= 1.
inline Truncation truncate_above(const StepFunction& f, double r, const ExponentFunction& p) {
  if (!(r > 0.0)) throw Error(ErrorCode::PreconditionViolation, "truncation level must be positive");
  Truncation out;
  std::vector<StepFunction::Piece> kept;
  KahanSum removed;
  for (const auto& pc : f.pieces()) {
    if (std::fabs(pc.value) > r)
      kept.push_back(pc);
    else
      removed += pc.set.measure();
  }
  out.g = StepFunction(std::move(kept));
  out.removed_measure = removed.value();
  out.bound = out.removed_measure * std::fmax(std::pow(r, p.p_plus()), std::pow(r, p.p_minus()));
  return out;
}

}  // namespace vlab
