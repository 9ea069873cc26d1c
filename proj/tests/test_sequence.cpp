#include <gtest/gtest.h>

#include <cmath>

#include "vlab/sequence_lab.hpp"

using namespace vlab;

namespace {

ExponentFunction two_step() {
  return ExponentFunction(StepFunction::from_cells(std::vector<Cell>{{Interval(0.0, 0.5), 1.0}, {Interval(0.5, 1.0), 2.0}}));
}

}  // namespace

TEST(Gk, UnitModularOnStepExponent) {
  const std::vector<IntervalSet> A = {IntervalSet{Interval(0.0, 0.25)}, IntervalSet{Interval(0.4, 0.6)},
                                      IntervalSet({Interval(0.7, 0.8), Interval(0.9, 0.95)})};
  const auto g = build_gk(A, two_step());
  ASSERT_EQ(g.size(), 3u);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(modular(g[k], two_step()).value, 1.0, 1e-12);
  // On [0.4, 0.6) the value is mu^{-1/p}: 0.2^{-1} on the p = 1 half, 0.2^{-1/2} on the other.
  EXPECT_DOUBLE_EQ(g[1](0.45), 5.0);
  EXPECT_DOUBLE_EQ(g[1](0.55), 1.0 / std::sqrt(0.2));
}

TEST(Gk, RejectsOverlap) {
  const std::vector<IntervalSet> A = {IntervalSet{Interval(0.0, 0.5)}, IntervalSet{Interval(0.4, 0.6)}};
  EXPECT_THROW(build_gk(A, two_step()), Error);
}

TEST(Psi, ConstantExponentIsPower) {
  const auto psi = orlicz_psi_indicator(IntervalSet{Interval(0.1, 0.6)}, ExponentFunction::constant(3.0));
  EXPECT_NEAR(psi(0.5), 0.125, 1e-14);
  EXPECT_TRUE(psi.valid());
}

TEST(Psi, TwoStepAverage) {
  // psi(s) = (s + s^2) / 2 on [0, 1)
  const auto psi = orlicz_psi_indicator(IntervalSet{Interval(0.0, 1.0)}, two_step());
  EXPECT_NEAR(psi(0.5), 0.375, 1e-14);
  EXPECT_TRUE(psi.valid());
  EXPECT_TRUE(orlicz_index_check(psi, 1.0, 2.0));
}

TEST(Psi, SandwichOnBands) {
  const Expr x = Expr::var();
  const ExponentFunction p(ExprPiecewise(Expr::constant(1.0) + x));
  const auto bands = band_sets(p.carrier(), 1.0, 5);
  for (long k = 1; k <= 5; ++k) EXPECT_TRUE(psi_sandwich_check(bands[static_cast<std::size_t>(k - 1)], p, 1.0, k));
}

TEST(Psi, GeneralMatchesIndicatorForGk) {
  const std::vector<IntervalSet> A = {IntervalSet{Interval(0.2, 0.7)}};
  const auto g = build_gk(A, two_step());
  const auto a = orlicz_psi_general(g, 0, two_step());
  // g = 2 on [0.2, 0.5) with p = 1 and sqrt(2) on [0.5, 0.7) with p = 2; rho_p(g) = 1.
  const double s = 0.3, mu = 0.5;
  const double oracle = 0.3 * s / mu + 0.2 * s * s / mu;
  EXPECT_NEAR(a(s), oracle, 1e-12);
}

TEST(Nakano, FiniteFamiliesCoincide) {
  const auto r = nakano_coincide(NakanoSeqExponents::of({1.0, 2.0, 3.0}), NakanoSeqExponents::of({3.0, 2.0, 1.0}));
  EXPECT_EQ(r.verdict, Coincidence::Coincide);
}

TEST(Nakano, FormulaFamilies) {
  const Expr n = Expr::var(), two = Expr::constant(2.0);
  // p q / |p - q| ~ 4n: terms 2^{-4n}, summable.
  EXPECT_EQ(nakano_coincide(NakanoSeqExponents::of(two + Expr::constant(1.0) / n), NakanoSeqExponents::of(two)).verdict,
            Coincidence::Coincide);
  // p - q = 4 ln 2 / ln(n+1): p q / |p - q| = log2(n+1) + 2, terms 1/(4(n+1)).
  const Expr slow = two + Expr::constant(4.0 * std::log(2.0)) / Expr::ln(n + Expr::constant(1.0));
  EXPECT_EQ(nakano_coincide(NakanoSeqExponents::of(slow), NakanoSeqExponents::of(two)).verdict, Coincidence::Differ);
}

TEST(Regularity, FiniteFamilyConstant) {
  const std::vector<IntervalSet> A = {IntervalSet{Interval(0.0, 0.25)}, IntervalSet{Interval(0.5, 0.75)}};
  const auto r = regularity_check(A, two_step());
  EXPECT_EQ(r.regular, Tri::Yes);
  EXPECT_DOUBLE_EQ(r.C, 1.0);
}

TEST(Regularity, FormulaFamilies) {
  const Expr k = Expr::var(), one = Expr::constant(1.0), ln2 = Expr::constant(std::log(2.0));
  // mu = 2^-k, oscillation 2^-k: mu^{gap} -> 1.
  RegularityFamily a{Expr::constant(-std::log(2.0)) * k, Expr::pow(Expr::constant(0.5), k), one, 1};
  const auto ra = regularity_check(a);
  EXPECT_EQ(ra.regular, Tri::Yes);
  EXPECT_GE(ra.C, 1.0);
  // mu = 2^{-k^2}, oscillation 1/k: mu^{gap} = 2^{-k} -> 0.
  RegularityFamily b{Expr::constant(0.0) - ln2 * k * k, one / k, one, 1};
  EXPECT_EQ(regularity_check(b).regular, Tri::No);
}

TEST(Truncation, BoundHolds) {
  const auto f = StepFunction::from_cells(
      std::vector<Cell>{{Interval(0.0, 0.2), 5.0}, {Interval(0.2, 0.5), 0.5}, {Interval(0.5, 1.0), -0.25}});
  const auto p = two_step();
  const auto t = truncate_above(f, 1.0, p);
  EXPECT_DOUBLE_EQ(t.removed_measure, 0.8);
  EXPECT_EQ(t.g(0.1), 5.0);
  EXPECT_EQ(t.g(0.3), 0.0);
  const double rest = modular(f - t.g, p).value;
  EXPECT_NEAR(rest, 0.3 * 0.5 + 0.5 * 0.0625, 1e-15);
  EXPECT_LE(rest, t.bound);
}
