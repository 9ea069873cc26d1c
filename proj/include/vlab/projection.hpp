#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vlab/sequence_lab.hpp"

namespace vlab {

/// Disjoint sets A_1..A_K of positive measure together with an exponent.
struct ProjectionSpec {
  std::vector<IntervalSet> A;
  ExponentFunction p;

  void validate() const {
    if (!pairwise_disjoint(A)) throw Error(ErrorCode::PreconditionViolation, "projection sets are not disjoint");
    KahanSum total;
    for (std::size_t k = 0; k < A.size(); ++k) {
      const double mu = A[k].measure();
      if (!(mu > 0.0)) throw Error(ErrorCode::NullSet, "A_" + std::to_string(k + 1) + " has measure zero");
      total += mu;
    }
    if (total.value() > 1.0 + kTol) throw Error(ErrorCode::PreconditionViolation, "sets exceed [0,1]");
  }

  ProjectionSpec first(std::size_t K) const {
    return {std::vector<IntervalSet>(A.begin(), A.begin() + static_cast<std::ptrdiff_t>(std::min(K, A.size()))), p};
  }
};

enum class ProjectionOp { TA, PA };

inline std::string to_string(ProjectionOp op) { return op == ProjectionOp::TA ? "TA" : "PA"; }

inline constexpr double kProjectionExponentTol = 1e-4;

/// T_A f = sum_k (integral over A_k of f mu(A_k)^{-1/p*}) chi_{A_k} mu(A_k)^{-1/p(t)}.
/// Where p = 1 the factor mu^{-1/p*} is 1.
inline StepFunction apply_TA(const ProjectionSpec& spec, const StepFunction& f) {
  spec.validate();
  std::vector<Cell> out;
  double dev = 0.0;
  for (const auto& Ak : spec.A) {
    const double mu = Ak.measure();
    const auto cells = detail::step_approximant(spec.p.carrier(), Ak, kProjectionExponentTol, dev);
    KahanSum coef;
    for (const auto& c : cells) coef += f.restricted(IntervalSet{c.iv}).integral() * std::pow(mu, 1.0 / c.value - 1.0);
    const double a = coef.value();
    for (const auto& c : cells) out.push_back({c.iv, a * std::pow(mu, -1.0 / c.value)});
  }
  return StepFunction::from_cells(out);
}

/// P_A f = sum_k (mean of f on A_k) chi_{A_k}.
inline StepFunction apply_PA(const ProjectionSpec& spec, const StepFunction& f) {
  spec.validate();
  std::vector<StepFunction::Piece> out;
  for (const auto& Ak : spec.A) out.push_back({Ak, f.restricted(Ak).integral() / Ak.measure()});
  return StepFunction(std::move(out));
}

inline StepFunction apply(ProjectionOp op, const ProjectionSpec& spec, const StepFunction& f) {
  return op == ProjectionOp::TA ? apply_TA(spec, f) : apply_PA(spec, f);
}

struct NormRatioBound {
  double bound = 0.0;
  std::size_t argmax = 0;
  std::vector<double> ratios;
};

/// max over the family of ||op f|| / ||f||; a lower bound for the operator norm.
inline NormRatioBound opnorm_lower_bound(const ProjectionSpec& spec, std::span<const StepFunction> family,
                                         ProjectionOp op) {
  NormRatioBound out;
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (family[i].is_zero()) throw Error(ErrorCode::PreconditionViolation, "test function is zero");
    const double nf = luxemburg_norm(family[i], spec.p).value;
    const double nt = luxemburg_norm(apply(op, spec, family[i]), spec.p).value;
    const double r = nt / nf;
    out.ratios.push_back(r);
    if (r > out.bound) {
      out.bound = r;
      out.argmax = i;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Unbounded-projection family
// ---------------------------------------------------------------------------

/// sum_{n >= 1} n^{-alpha}: 10^6 terms plus an Euler-Maclaurin tail.
struct Normalizer {
  double value = 0.0;
  double abs_error_bound = 0.0;
};

inline Normalizer zeta_normalizer(double alpha, long N = 1000000) {
  if (!(alpha > 1.0)) throw Error(ErrorCode::PreconditionViolation, "alpha must exceed 1");
  KahanSum s;
  for (long n = N; n >= 1; --n) s += std::pow(static_cast<double>(n), -alpha);
  const double Nd = static_cast<double>(N);
  // sum_{n > N} n^-a = N^{1-a}/(a-1) - N^-a/2 + a N^{-a-1}/12 - ...
  s += std::pow(Nd, 1.0 - alpha) / (alpha - 1.0);
  s += -0.5 * std::pow(Nd, -alpha);
  s += alpha * std::pow(Nd, -alpha - 1.0) / 12.0;
  const double err = alpha * (alpha + 1.0) * (alpha + 2.0) * std::pow(Nd, -alpha - 3.0) / 720.0 +
                     1e-16 * s.value();
  return {s.value(), err};
}

namespace detail {

// Subset of `set` of measure m starting after the first `offset` of its
// measure, scanning left to right.
inline IntervalSet take_leftmost(const IntervalSet& set, double offset, double m) {
  std::vector<Interval> out;
  double skipped = 0.0, taken = 0.0;
  for (const auto& iv : set.intervals()) {
    double lo = iv.lo;
    const double len = iv.measure();
    if (skipped + len <= offset) {
      skipped += len;
      continue;
    }
    if (skipped < offset) {
      lo = iv.lo + (offset - skipped);
      skipped = offset;
    }
    const double want = m - taken;
    const double hi = std::fmin(iv.hi, lo + want);
    if (hi > lo) {
      out.push_back(Interval(lo, hi));
      taken += hi - lo;
    }
    if (taken >= m * (1.0 - 1e-15)) break;
  }
  return IntervalSet(std::move(out));
}

}  // namespace detail

struct Example24Family {
  double q1 = 1.0;
  double q2 = 2.0;
  double delta = 0.2;
  double alpha = 2.0;
  long K = 0;
  IntervalSet R;
  IntervalSet S;
  Normalizer normalizer;
  std::vector<IntervalSet> R_k;
  std::vector<IntervalSet> S_k;
  ProjectionSpec spec;

  /// Specification restricted to A_1..A_K'.
  ProjectionSpec spec_for(long k) const { return spec.first(static_cast<std::size_t>(k)); }
};

/// Builds R_k, S_k inside the band preimages p^{-1}((q2-d, q2+d)) and
/// p^{-1}((q1-d, q1+d)), leftmost first, with
/// mu(R_k) = mu(S_k) = mu(R) k^{-alpha} / sum_n n^{-alpha}.
inline Example24Family example24_build(double q1, double q2, double delta, double alpha, const ExponentFunction& p,
                                       long K) {
  if (!(q1 < q2)) throw Error(ErrorCode::PreconditionViolation, "need q1 < q2");
  if (!(delta > 0.0 && delta < (q2 - q1) / 4.0))
    throw Error(ErrorCode::PreconditionViolation, "need 0 < delta < (q2 - q1)/4");
  if (!(alpha > 1.0)) throw Error(ErrorCode::PreconditionViolation, "need alpha > 1");
  if (K < 1) throw Error(ErrorCode::PreconditionViolation, "need K >= 1");
  Example24Family fam;
  fam.q1 = q1;
  fam.q2 = q2;
  fam.delta = delta;
  fam.alpha = alpha;
  fam.K = K;
  const auto range = essential_range(p);
  const auto band_r = level_set(p.carrier(), ValueBand{q2 - delta, q2 + delta, false, false});
  const auto band_s = level_set(p.carrier(), ValueBand{q1 - delta, q1 + delta, false, false});
  if (!(band_r.measure > 0.0) || !range.contains(q2, delta))
    throw Error(ErrorCode::BandEmpty, "no positive-measure preimage near q2");
  if (!(band_s.measure > 0.0) || !range.contains(q1, delta))
    throw Error(ErrorCode::BandEmpty, "no positive-measure preimage near q1");
  const double m = std::fmin(band_r.measure, band_s.measure);
  fam.R = detail::take_leftmost(band_r.set, 0.0, m);
  fam.S = detail::take_leftmost(band_s.set, 0.0, m);
  const double mu = std::fmin(fam.R.measure(), fam.S.measure());
  fam.normalizer = zeta_normalizer(alpha);
  KahanSum offset;
  std::vector<IntervalSet> A;
  for (long k = 1; k <= K; ++k) {
    const double mk = mu / fam.normalizer.value * std::pow(static_cast<double>(k), -alpha);
    fam.R_k.push_back(detail::take_leftmost(fam.R, offset.value(), mk));
    fam.S_k.push_back(detail::take_leftmost(fam.S, offset.value(), mk));
    offset += mk;
    A.push_back(fam.R_k.back().unite(fam.S_k.back()));
  }
  fam.spec = ProjectionSpec{std::move(A), p};
  fam.spec.validate();
  return fam;
}

/// Witness parameters: c_k = mu^{-1/q} or k^beta on the chosen side.
struct WitnessGrid {
  std::vector<double> q = {1.0, 1.5, 2.0, 3.0};
  std::vector<double> beta = {-1.0, -0.5, 0.0, 0.5, 1.0};
};

/// Witness functions f = sum_{k <= J} c_k chi_{S_k} and the mirrored
/// sum_{k <= J} c_k chi_{R_k}, for every power of two J <= K and J = K, so
/// that the family at K contains the family at every smaller sweep size.
inline std::vector<StepFunction> example24_witnesses(const Example24Family& fam, long K,
                                                     const WitnessGrid& grid = {}) {
  std::vector<long> sizes;
  for (long J = 1; J < K; J *= 2) sizes.push_back(J);
  sizes.push_back(K);
  std::vector<StepFunction> out;
  for (const auto* side : {&fam.S_k, &fam.R_k}) {
    for (long J : sizes) {
      auto make = [&](auto coef) {
        std::vector<StepFunction::Piece> pieces;
        for (long k = 1; k <= J; ++k) {
          const auto& set = (*side)[static_cast<std::size_t>(k - 1)];
          pieces.push_back({set, coef(k, set.measure())});
        }
        out.push_back(StepFunction(std::move(pieces)));
      };
      for (double q : grid.q) make([q](long, double mu) { return std::pow(mu, -1.0 / q); });
      for (double b : grid.beta) make([b](long k, double) { return std::pow(static_cast<double>(k), b); });
    }
  }
  return out;
}

struct GrowthRow {
  long K;
  double bound;
  std::size_t argmax;
};

/// (K, T_A lower bound) over the witness family for each K in Ks.
inline std::vector<GrowthRow> example24_sweep(const Example24Family& fam, std::span<const long> Ks,
                                              const WitnessGrid& grid = {}) {
  std::vector<GrowthRow> rows;
  for (long K : Ks) {
    if (K > fam.K) throw Error(ErrorCode::PreconditionViolation, "sweep size exceeds the built family");
    const auto spec = fam.spec_for(K);
    const auto family = example24_witnesses(fam, K, grid);
    const auto r = opnorm_lower_bound(spec, family, ProjectionOp::TA);
    rows.push_back({K, r.bound, r.argmax});
  }
  return rows;
}

}  // namespace vlab
