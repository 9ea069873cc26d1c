#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vlab/dss.hpp"

namespace vlab {

enum class LimitVerdict { Zero, Positive, Unknown };

inline std::string to_string(LimitVerdict v) {
  switch (v) {
    case LimitVerdict::Zero: return "ZERO";
    case LimitVerdict::Positive: return "POSITIVE";
    case LimitVerdict::Unknown: return "UNKNOWN";
  }
  return "?";
}

struct LimitSample {
  int k = 0;       // x = 1 - 2^-k
  double g = 0.0;  // gap (or its rearrangement) at x
  double h = 0.0;  // (1 - x)^g
};

struct LimitResult {
  LimitVerdict verdict = LimitVerdict::Unknown;
  double estimate = std::nan("");
  bool rearranged = false;
  bool monotone = false;  // g certified nonincreasing
  std::vector<LimitSample> samples;
  std::string reason;
};

inline constexpr int kLimitSamples = 60;
inline constexpr double kLimitZero = 1e-6;
inline constexpr double kLimitPositive = 1e-3;

namespace detail {

// Evaluator for the nonincreasing rearrangement of g at points near 1.
inline std::function<double(const Point&)> rearranged_evaluator(const Function& g) {
  if (monotonicity_check(g) == Monotonicity::Nonincreasing) return [g](const Point& p) { return eval(g, p); };
  try {
    const Function r = decreasing_rearrangement(g);
    return [r](const Point& p) { return eval(r, p); };
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Unsupported) throw;
  }
  const auto [lo, hi] = value_bounds(g, IntervalSet{Interval(0.0, 1.0)});
  return [g, lo = lo, hi = hi](const Point& p) { return rearranged_value(g, p, lo, hi); };
}

}  // namespace detail

/// Behaviour of (1 - x)^{g(x)} as x -> 1 along x_k = 1 - 2^-k, k <= 60, with
/// g = p - q (which must be nonincreasing) or its nonincreasing rearrangement.
inline LimitResult necessary_limit(const EmbeddingProblem& prob, bool rearranged) {
  LimitResult out;
  out.rearranged = rearranged;
  const bool mono = monotonicity_check(prob.gap) == Monotonicity::Nonincreasing;
  if (!rearranged && !mono) throw Error(ErrorCode::HypothesisFail, "p - q is not certified nonincreasing");
  out.monotone = true;  // g itself, or a rearrangement, which is nonincreasing by construction
  const auto g = rearranged ? detail::rearranged_evaluator(prob.gap)
                            : std::function<double(const Point&)>([&](const Point& p) { return eval(prob.gap, p); });
  for (int k = 1; k <= kLimitSamples; ++k) {
    const double u = std::ldexp(1.0, -k);
    LimitSample s;
    s.k = k;
    s.g = g(Point{1.0 - u, u});
    s.h = s.g == 0.0 ? 1.0 : std::exp(s.g * std::log(u));
    out.samples.push_back(s);
  }
  out.estimate = out.samples.back().h;
  // A positive essential lower bound delta gives (1-x)^g <= (1-x)^delta -> 0.
  if (ess_inf_gap(prob) > 1e-9) {
    out.verdict = LimitVerdict::Zero;
    out.reason = "gap bounded below by a positive constant";
    return out;
  }
  double last5 = 0.0, min20 = kInf;
  for (int i = 0; i < kLimitSamples; ++i) {
    const double h = out.samples[static_cast<std::size_t>(i)].h;
    if (i >= kLimitSamples - 5) last5 = std::fmax(last5, h);
    if (i >= kLimitSamples - 20) min20 = std::fmin(min20, h);
  }
  if (last5 < kLimitZero) {
    out.verdict = LimitVerdict::Zero;
    out.reason = "samples below 1e-6 with a nonincreasing exponent";
  } else if (min20 > kLimitPositive) {
    out.verdict = LimitVerdict::Positive;
    out.reason = "last 20 samples stay above " + std::to_string(min20);
  } else {
    out.reason = "samples neither vanish nor stay bounded away from 0";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Witness of non-strict-singularity
// ---------------------------------------------------------------------------

/// Disjoint sequence s_n = chi_{A_n} mu(A_n)^{-1/p(t)} on which the p- and
/// q-modulars are equivalent: rho_p(sum y_n s_n) <= (2^{p+}/r) rho_q(sum y_n s_n)
/// for |y_n| < 1.
struct NotDssWitness {
  double r = 0.0;
  double p_plus = 0.0;
  double equiv_constant = 0.0;
  std::vector<double> x;       // x_n
  std::vector<Block> s;        // A_n with coefficient 1
  bool from_rearrangement = false;
};

struct WitnessCheck {
  bool ok = true;
  int tested = 0;
  double worst_ratio = 0.0;  // max rho_p / (C rho_q)
  std::vector<double> unit_modulars;  // rho_p(s_n), each 1
};

inline constexpr int kWitnessMaxTerms = 40;
inline constexpr int kWitnessDeepest = 51;

/// Builds the witness from a POSITIVE plain or rearranged limit. Only built
/// when p - q itself is certified nonincreasing; otherwise nullopt.
inline std::optional<NotDssWitness> build_witness_prop36(const EmbeddingProblem& prob, const LimitResult& lim) {
  if (lim.verdict != LimitVerdict::Positive) return std::nullopt;
  if (monotonicity_check(prob.gap) != Monotonicity::Nonincreasing) return std::nullopt;
  double min20 = kInf;
  for (std::size_t i = lim.samples.size() - 20; i < lim.samples.size(); ++i) min20 = std::fmin(min20, lim.samples[i].h);
  NotDssWitness w;
  w.r = 0.5 * min20;
  w.p_plus = prob.p.p_plus();
  w.equiv_constant = std::exp2(w.p_plus) / w.r;
  w.from_rearrangement = lim.rearranged;
  // Odd k keeps (x_n + 1)/2 < x_{n+1}; A_n = [x_n, (x_n + 1)/2) exactly.
  for (int k = 1; k <= kWitnessDeepest && static_cast<int>(w.x.size()) < kWitnessMaxTerms; k += 2) {
    const double u = std::ldexp(1.0, -k);
    const double g = eval(prob.gap, Point{1.0 - u, u});
    const double h = g == 0.0 ? 1.0 : std::exp(g * std::log(u));
    if (h < w.r) continue;
    w.x.push_back(1.0 - u);
    w.s.push_back({IntervalSet{Interval(1.0 - u, 1.0 - 0.5 * u)}, 1.0});
  }
  if (w.x.empty()) return std::nullopt;
  return w;
}

/// Checks rho_p(s_n) = 1 and the modular equivalence on `samples` random
/// coefficient vectors with |y_n| < 1 (relative tolerance 1e-9).
inline WitnessCheck validate_witness(const NotDssWitness& w, const ExponentFunction& p, const ExponentFunction& q,
                                     int samples = 100, std::uint64_t seed = 0) {
  WitnessCheck out;
  for (const auto& b : w.s) {
    const double m = block_modular(std::span<const Block>(&b, 1), p, p).value;
    out.unit_modulars.push_back(m);
    if (!near(m, 1.0, 1e-9)) out.ok = false;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<Block> blocks = w.s;
  for (int i = 0; i < samples; ++i) {
    for (auto& b : blocks) {
      do b.coefficient = dist(rng);
      while (!(std::fabs(b.coefficient) < 1.0));
    }
    const double rp = block_modular(blocks, p, p).value;
    const double rq = block_modular(blocks, q, p).value;
    const double ratio = rq > 0.0 ? rp / (w.equiv_constant * rq) : (rp > 0.0 ? kInf : 0.0);
    out.worst_ratio = std::fmax(out.worst_ratio, ratio);
    if (!(ratio <= 1.0 + 1e-9)) out.ok = false;
    ++out.tested;
  }
  return out;
}

}  // namespace vlab
