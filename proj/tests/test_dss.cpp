#include <gtest/gtest.h>

#include <cmath>

#include "vlab/corpus.hpp"

using namespace vlab;

namespace {

const Expr x = Expr::var();
const Expr one = Expr::constant(1.0);

EmbeddingProblem power_gap(double r, double q = 1.0) { return corpus::power_family(r, q).problem; }

bool fired(const DssVerdict& v, const std::string& criterion) {
  for (const auto& d : v.diagnostics)
    if (d.criterion == criterion && d.outcome == "FIRED") return true;
  return false;
}

}  // namespace

TEST(Inclusion, DetectsViolation) {
  const EmbeddingProblem bad(ExponentFunction::constant(1.5), ExponentFunction::constant(2.0));
  EXPECT_FALSE(check_inclusion(bad));
  EXPECT_THROW(dss_verdict(bad), Error);
  EXPECT_TRUE(check_inclusion(power_gap(1.0)));
  EXPECT_NEAR(ess_inf_gap(power_gap(1.0)), 0.0, 1e-12);
}

TEST(UniformGap, FiresWithHalfTheGap) {
  const auto prob = corpus::uniform_gap(1.0, 0.3).problem;
  const auto c = criterion_uniform_gap(prob);
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->gap, 0.3, 1e-12);
  EXPECT_GT(c->delta, 0.0);
  EXPECT_LT(c->delta, c->gap);
  EXPECT_FALSE(criterion_uniform_gap(power_gap(2.0)));
}

TEST(UniformGap, DecayRowsStayBelowBound) {
  const auto prob = corpus::uniform_gap(1.0, 0.5).problem;
  const auto c = criterion_uniform_gap(prob);
  ASSERT_TRUE(c);
  const auto rep = prop32_decay_check(prob, *c, 20);
  ASSERT_EQ(rep.rows.size(), 20u);
  EXPECT_TRUE(rep.all_ok);
  EXPECT_TRUE(rep.nonincreasing);
  for (const auto& row : rep.rows) {
    EXPECT_NEAR(row.rho_p, 1.0, 1e-9);
    // rho_q = a^{q - p} rho_p with constant exponents
    EXPECT_NEAR(row.rho_q, std::pow(row.amplitude, -0.5), 1e-9);
    EXPECT_LE(row.rho_q, std::pow(static_cast<double>(row.n), -c->delta) + 1e-12);
  }
}

TEST(DisjointRanges, Fires) {
  const EmbeddingProblem prob(
      ExponentFunction(StepFunction::from_cells(std::vector<Cell>{{Interval(0.0, 0.5), 3.0}, {Interval(0.5, 1.0), 4.0}})),
      ExponentFunction(StepFunction::from_cells(std::vector<Cell>{{Interval(0.0, 0.5), 1.0}, {Interval(0.5, 1.0), 2.0}})));
  EXPECT_TRUE(criterion_disjoint_ranges(prob));
  EXPECT_FALSE(criterion_disjoint_ranges(power_gap(1.0)));
}

TEST(DyadicSum, TermMatchesClosedForm) {
  const auto e = corpus::ejemp2();
  const auto gen = power_tower_generator();
  const auto t = prop33_term(e.problem, gen);
  for (long n = 3; n <= 40; ++n) {
    const double nd = static_cast<double>(n);
    // ln(n^{-(n-1)} - (n+1)^{-n}), exponent 1/ln(n+1) over p+ = 2
    const double a = -(nd - 1.0) * std::log(nd), b = -nd * std::log(nd + 1.0);
    const double want = (a + std::log1p(-std::exp(b - a))) / (2.0 * std::log(nd + 1.0));
    EXPECT_NEAR(t.log(n), want, 1e-12 * std::fabs(want));
  }
}

TEST(DyadicSum, Ejemp2IsDss) {
  const auto e = corpus::ejemp2();
  const auto c = criterion_prop33(e.problem, power_tower_generator());
  ASSERT_TRUE(c);
  EXPECT_EQ(c->kind, DssKind::DyadicSum);
  EXPECT_TRUE(recheck_certificate(e.problem, *c).ok);
  const auto v = dss_verdict(e.problem);
  EXPECT_EQ(v.status, DssStatus::Dss);
  ASSERT_TRUE(v.certificate);
  EXPECT_EQ(v.certificate->kind, DssKind::DyadicSum);
}

TEST(DyadicSum, RejectsIncreasingGap) {
  const EmbeddingProblem prob(ExponentFunction(ExprPiecewise(one + one + x)), ExponentFunction::constant(1.0));
  EXPECT_THROW(criterion_prop33(prob, dyadic_generator()), Error);
}

TEST(DyadicSum, EpsilonReportRows) {
  const auto e = corpus::ejemp2();
  const auto c = criterion_prop33(e.problem, power_tower_generator());
  ASSERT_TRUE(c);
  const auto rep = certificate_prop33_epsilon(e.problem, *c, 0.3);
  ASSERT_FALSE(rep.rows.empty());
  EXPECT_LE(rep.tail_at_n0, 0.1 + 1e-12);
  for (const auto& row : rep.rows) {
    EXPECT_NEAR(row.rho_p, 1.0, 1e-9);
    EXPECT_TRUE(row.b_ok);
    EXPECT_TRUE(row.c_ok);
  }
  ASSERT_TRUE(rep.k0);
  for (const auto& row : rep.rows)
    if (row.k >= *rep.k0) EXPECT_TRUE(row.total_ok);
}

TEST(LevelSetSum, FiresOnFastCells) {
  // r_k = 1/k puts exactly the cell with value 1/k in R_k; its measure is about
  // 2^{-k^2}, so the terms behave like 2^{-k/2}.
  const auto e = corpus::level_sets();
  const SequenceGenerator harmonic{"harmonic", one / x, 1};
  const auto c = criterion_prop35(e.problem, harmonic);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->kind, DssKind::LevelSetSum);
  EXPECT_TRUE(recheck_certificate(e.problem, *c).ok);
  DssOptions opt;
  opt.strategy = {Criterion::LevelSetSum};
  opt.r_generators = {harmonic};
  const auto v = dss_verdict(e.problem, opt);
  EXPECT_EQ(v.status, DssStatus::Dss);
  ASSERT_TRUE(v.certificate);
  EXPECT_EQ(v.certificate->kind, DssKind::LevelSetSum);
}

TEST(LevelSetSum, ClosedFormExamples) {
  const SequenceGenerator half{"half-harmonic", one / (x - Expr::constant(0.5)), 1};
  const auto prefix = StepFunction::from_cells(std::vector<Cell>{{Interval(0.0, 0.5), 2.0}});
  // value 1/k on measure about 2^{-k}: terms tend to 2^{-1/2}
  const EmbeddingProblem slow(ExponentFunction(TailFamily(prefix, one - Expr::pow(Expr::constant(0.5), x), one + one / x, 1)),
                              ExponentFunction::constant(1.0));
  EXPECT_FALSE(criterion_prop35(slow, half));
  const auto t = prop35_term(slow, half);
  // R_k is the single cell [1 - 2^-k, 1 - 2^-(k+1)), measure 2^-(k+1), minimum 1/k, p+ = 2
  for (long k = 2; k <= 30; ++k)
    EXPECT_NEAR(t.log(k), -(static_cast<double>(k) + 1.0) * std::log(2.0) / (2.0 * static_cast<double>(k)), 1e-12);
  // value 1/k on measure about 2^{-k^2}: terms about 2^{-k/2}
  EXPECT_TRUE(criterion_prop35(corpus::level_sets().problem, half));
  // gap >= 0.5 with levels below 0.5: every R_k is null
  const auto c = criterion_prop35(corpus::uniform_gap(1.0, 0.5).problem,
                                  {"low", Expr::constant(0.1) * Expr::pow(Expr::constant(0.5), x), 1});
  ASSERT_TRUE(c);
  EXPECT_EQ(c->series.partial_sum, 0.0);
}

TEST(LevelSetSum, DyadicLevelsMissDeepValues) {
  // Values 1/k below 2^-20 sit beyond the tail cap, where the whole remainder
  // counts toward one band and the term cannot be bounded.
  EXPECT_FALSE(criterion_prop35(corpus::level_sets().problem, dyadic_levels()));
}

TEST(LevelSetSum, DoesNotCertifyPowerGaps) {
  // p - q = (1 - x)^r has level sets of measure r_k^{1/r}; the terms tend to 1.
  for (double r : {1.0, 2.0}) EXPECT_FALSE(criterion_prop35(power_gap(r), dyadic_levels()));
}

TEST(LevelSetSum, NeedsNullCoincidenceSet) {
  const EmbeddingProblem prob(
      ExponentFunction(StepFunction::from_cells(std::vector<Cell>{{Interval(0.0, 0.5), 1.0}, {Interval(0.5, 1.0), 2.0}})),
      ExponentFunction::constant(1.0));
  EXPECT_FALSE(criterion_prop35(prob, dyadic_levels()));
}

TEST(Necessity, PowerGapsHavePositiveLimit) {
  for (double r : {1.0, 2.0, 3.0}) {
    const auto lim = necessary_limit(power_gap(r), false);
    EXPECT_EQ(lim.verdict, LimitVerdict::Positive) << r;
    // (1 - x)^{(1 - x)^r} -> 1
    EXPECT_GE(lim.estimate, 0.99);
    const auto rl = necessary_limit(power_gap(r), true);
    EXPECT_EQ(rl.verdict, LimitVerdict::Positive);
  }
}

TEST(Necessity, UniformGapGivesZero) {
  // consistency: a DSS certificate and a positive limit never coexist
  for (double gap : {0.05, 0.5, 2.0}) {
    const auto prob = corpus::uniform_gap(1.5, gap).problem;
    EXPECT_EQ(necessary_limit(prob, false).verdict, LimitVerdict::Zero);
    EXPECT_EQ(necessary_limit(prob, true).verdict, LimitVerdict::Zero);
  }
  EXPECT_EQ(necessary_limit(corpus::ejemp2().problem, false).verdict, LimitVerdict::Zero);
}

TEST(Necessity, RearrangementOfMonotoneGapAgrees) {
  const auto prob = power_gap(2.0);
  const auto a = necessary_limit(prob, false), b = necessary_limit(prob, true);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_NEAR(a.samples[i].h, b.samples[i].h, 1e-9);
}

TEST(Witness, ValidOnPowerFamily) {
  for (double r : {1.0, 2.0, 3.0}) {
    const auto prob = power_gap(r);
    const auto v = dss_verdict(prob);
    ASSERT_EQ(v.status, DssStatus::NotDss) << r;
    ASSERT_TRUE(v.witness);
    EXPECT_NEAR(v.witness->equiv_constant, std::exp2(prob.p.p_plus()) / v.witness->r, 1e-12);
    const auto chk = validate_witness(*v.witness, prob.p, prob.q, 100, 0);
    EXPECT_TRUE(chk.ok);
    EXPECT_EQ(chk.tested, 100);
    for (double m : chk.unit_modulars) EXPECT_NEAR(m, 1.0, 1e-9);
    EXPECT_TRUE(recheck_witness(prob, *v.witness).ok);
    EXPECT_FALSE(fired(v, "level_set_sum"));
  }
}

TEST(Verdict, CorpusMatchesExpectations) {
  for (const auto& e : corpus::dss_entries()) {
    DssOptions opt;
    opt.x_generators = e.x_generators;
    EXPECT_EQ(to_string(dss_verdict(e.problem, opt).status), e.expected) << e.name;
  }
}

TEST(Verdict, StrategyOrderIsRespected) {
  const auto prob = corpus::uniform_gap(1.0, 0.5).problem;
  DssOptions opt;
  opt.strategy = {Criterion::NecessaryLimit, Criterion::UniformGap};
  const auto v = dss_verdict(prob, opt);
  EXPECT_EQ(v.status, DssStatus::Dss);
  ASSERT_FALSE(v.diagnostics.empty());
  EXPECT_EQ(v.diagnostics.front().criterion, "necessary_limit");
}
