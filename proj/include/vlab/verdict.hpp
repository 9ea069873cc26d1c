#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vlab/necessity.hpp"

namespace vlab {

enum class Criterion { DisjointRanges, UniformGap, DyadicSum, LevelSetSum, NecessaryLimit, RearrangedLimit };

inline std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::DisjointRanges: return "disjoint_ranges";
    case Criterion::UniformGap: return "uniform_gap";
    case Criterion::DyadicSum: return "dyadic_sum";
    case Criterion::LevelSetSum: return "level_set_sum";
    case Criterion::NecessaryLimit: return "necessary_limit";
    case Criterion::RearrangedLimit: return "rearranged_limit";
  }
  return "?";
}

enum class DssStatus { Dss, NotDss, Unknown };

inline std::string to_string(DssStatus s) {
  switch (s) {
    case DssStatus::Dss: return "DSS";
    case DssStatus::NotDss: return "NOT_DSS";
    case DssStatus::Unknown: return "UNKNOWN";
  }
  return "?";
}

struct Diagnostic {
  std::string criterion;
  std::string outcome;  // FIRED, NONE, POSITIVE, ZERO, UNKNOWN, HYPOTHESIS_FAIL, ...
  std::string detail;
};

struct DssVerdict {
  DssStatus status = DssStatus::Unknown;
  std::optional<DssCertificate> certificate;
  std::optional<NotDssWitness> witness;
  std::optional<WitnessCheck> witness_check;
  std::vector<Diagnostic> diagnostics;
};

struct DssOptions {
  std::vector<Criterion> strategy = {Criterion::DisjointRanges, Criterion::UniformGap,   Criterion::DyadicSum,
                                     Criterion::LevelSetSum,    Criterion::NecessaryLimit, Criterion::RearrangedLimit};
  std::vector<SequenceGenerator> x_generators;  // tried after the defaults
  std::vector<SequenceGenerator> r_generators;
  std::uint64_t seed = 0;
};

/// x_n generators tried by default: dyadic, the power tower, and the gap's own
/// endpoints when p - q is a tail family.
inline std::vector<SequenceGenerator> default_x_generators(const EmbeddingProblem& prob) {
  std::vector<SequenceGenerator> out = {dyadic_generator(), power_tower_generator()};
  if (const auto* t = std::get_if<TailFamily>(&prob.gap)) out.push_back({"gap-endpoints", t->x_expr(), t->n0()});
  return out;
}

/// Runs the criteria in strategy order. Sufficient criteria come first; the
/// necessary checks only run when no certificate was found.
inline DssVerdict dss_verdict(const EmbeddingProblem& prob, const DssOptions& opt = {}) {
  if (!check_inclusion(prob)) throw Error(ErrorCode::PreconditionViolation, "q > p on a set of positive measure");
  DssVerdict v;
  auto note = [&](Criterion c, std::string outcome, std::string detail = {}) {
    v.diagnostics.push_back({to_string(c), std::move(outcome), std::move(detail)});
  };
  auto fired = [&](Criterion c, std::optional<DssCertificate> cert, const std::string& detail) {
    if (!cert) {
      note(c, "NONE", detail);
      return false;
    }
    note(c, "FIRED", detail);
    v.status = DssStatus::Dss;
    v.certificate = std::move(cert);
    return true;
  };
  auto guarded = [&](Criterion c, auto&& body) {
    try {
      return body();
    } catch (const Error& e) {
      note(c, std::string(to_string(e.code())), e.what());
      return false;
    }
  };

  for (Criterion c : opt.strategy) {
    bool done = false;
    switch (c) {
      case Criterion::DisjointRanges:
        done = guarded(c, [&] { return fired(c, criterion_disjoint_ranges(prob), {}); });
        break;
      case Criterion::UniformGap:
        done = guarded(c, [&] { return fired(c, criterion_uniform_gap(prob), {}); });
        break;
      case Criterion::DyadicSum: {
        auto gens = default_x_generators(prob);
        gens.insert(gens.end(), opt.x_generators.begin(), opt.x_generators.end());
        for (const auto& g : gens) {
          done = guarded(c, [&] {
            auto cert = criterion_prop33(prob, g);
            return fired(c, cert, g.name + (cert ? "" : ": series not certified convergent"));
          });
          if (done) break;
        }
        break;
      }
      case Criterion::LevelSetSum: {
        std::vector<SequenceGenerator> gens = {dyadic_levels()};
        gens.insert(gens.end(), opt.r_generators.begin(), opt.r_generators.end());
        for (const auto& g : gens) {
          done = guarded(c, [&] {
            auto cert = criterion_prop35(prob, g);
            return fired(c, cert, g.name);
          });
          if (done) break;
        }
        break;
      }
      case Criterion::NecessaryLimit:
      case Criterion::RearrangedLimit:
        if (v.status == DssStatus::Dss) break;
        done = guarded(c, [&] {
          const auto lim = necessary_limit(prob, c == Criterion::RearrangedLimit);
          note(c, to_string(lim.verdict), lim.reason);
          if (lim.verdict != LimitVerdict::Positive) return false;
          auto w = build_witness_prop36(prob, lim);
          if (!w) {
            note(c, "NO_WITNESS", "p - q is not certified nonincreasing");
            return false;
          }
          auto check = validate_witness(*w, prob.p, prob.q, 100, opt.seed);
          if (!check.ok) {
            note(c, "WITNESS_FAILED", "worst ratio " + std::to_string(check.worst_ratio));
            return false;
          }
          v.status = DssStatus::NotDss;
          v.witness = std::move(w);
          v.witness_check = std::move(check);
          return true;
        });
        break;
    }
    if (done) break;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Re-validation from serialized data
// ---------------------------------------------------------------------------

struct RecheckReport {
  bool ok = false;
  std::string detail;
};

/// Re-derives a certificate's claims from the problem alone.
inline RecheckReport recheck_certificate(const EmbeddingProblem& prob, const DssCertificate& c) {
  RecheckReport r;
  switch (c.kind) {
    case DssKind::UniformGap: {
      const double g = ess_inf_gap(prob);
      r.ok = c.delta > 0.0 && g > c.delta;
      r.detail = "ess inf gap " + std::to_string(g) + " vs delta " + std::to_string(c.delta);
      return r;
    }
    case DssKind::DisjointRanges: {
      const auto rp = essential_range(prob.p), rq = essential_range(prob.q);
      r.ok = !rp.intersects(rq);
      r.detail = r.ok ? "ranges disjoint" : "ranges intersect";
      return r;
    }
    case DssKind::DyadicSum:
    case DssKind::LevelSetSum: {
      if (!c.series.certificate || c.series.status != SeriesStatus::Converges) {
        r.detail = "no convergence certificate";
        return r;
      }
      const bool dyadic = c.kind == DssKind::DyadicSum;
      if (dyadic && monotonicity_check(prob.gap) != Monotonicity::Nonincreasing) {
        r.detail = "p - q is not certified nonincreasing";
        return r;
      }
      if (dyadic ? !validate_increasing_to_one(c.sequence) : !validate_decreasing_to_zero(c.sequence)) {
        r.detail = "sequence generator fails validation";
        return r;
      }
      const auto term = dyadic ? prop33_term(prob, c.sequence) : prop35_term(prob, c.sequence);
      const auto rc = recheck(*c.series.certificate, term);
      r.ok = rc.ok;
      r.detail = rc.ok ? "series certificate holds on " + std::to_string(rc.checked) + " indices"
                       : "series certificate fails at n = " + std::to_string(*rc.first_failure);
      return r;
    }
  }
  return r;
}

inline RecheckReport recheck_witness(const EmbeddingProblem& prob, const NotDssWitness& w, std::uint64_t seed = 0) {
  RecheckReport r;
  if (monotonicity_check(prob.gap) != Monotonicity::Nonincreasing) {
    r.detail = "p - q is not certified nonincreasing";
    return r;
  }
  if (!pairwise_disjoint([&] {
        std::vector<IntervalSet> sets;
        for (const auto& b : w.s) sets.push_back(b.set);
        return sets;
      }())) {
    r.detail = "witness supports overlap";
    return r;
  }
  const auto check = validate_witness(w, prob.p, prob.q, 100, seed);
  r.ok = check.ok;
  r.detail = "tested " + std::to_string(check.tested) + " vectors, worst ratio " + std::to_string(check.worst_ratio);
  return r;
}

}  // namespace vlab
