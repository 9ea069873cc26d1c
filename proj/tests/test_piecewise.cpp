#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "vlab/carrier.hpp"
#include "vlab/quadrature.hpp"

using namespace vlab;

namespace {

StepFunction two_piece(double a, double b, double cut = 0.5) {
  return StepFunction::from_cells(std::vector<Cell>{{Interval(0.0, cut), a}, {Interval(cut, 1.0), b}});
}

double simpson(const std::function<double(double)>& f, double a, double b, int n = 200000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST(IntervalSet, MergesAndMeasures) {
  const IntervalSet s({Interval(0.5, 0.75), Interval(0.0, 0.25), Interval(0.25, 0.375)});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s.measure(), 0.625);
  EXPECT_TRUE(s.contains(0.3));
  EXPECT_FALSE(s.contains(0.375));
  const IntervalSet t({Interval(0.2, 0.6)});
  EXPECT_DOUBLE_EQ(s.intersect(t).measure(), 0.175 + 0.1);
  EXPECT_DOUBLE_EQ(s.subtract(t).measure(), 0.625 - 0.275);
}

TEST(IntervalSet, PairwiseDisjoint) {
  std::vector<IntervalSet> a = {IntervalSet{Interval(0.0, 0.5)}, IntervalSet{Interval(0.5, 1.0)}};
  EXPECT_TRUE(pairwise_disjoint(a));
  a.push_back(IntervalSet{Interval(0.4, 0.6)});
  EXPECT_FALSE(pairwise_disjoint(a));
}

TEST(StepFunction, EvaluatesAndIntegrates) {
  const auto f = two_piece(3.0, -1.0, 0.25);
  EXPECT_EQ(f(0.1), 3.0);
  EXPECT_EQ(f(0.25), -1.0);
  EXPECT_DOUBLE_EQ(f.integral(), 0.75 - 0.75);
  EXPECT_DOUBLE_EQ(f.integral_pow(2.0), 9 * 0.25 + 0.75);
}

TEST(StepFunction, SumOnCommonRefinement) {
  const auto f = two_piece(1.0, 2.0, 0.3), g = two_piece(10.0, 20.0, 0.6);
  const auto h = f + g;
  EXPECT_EQ(h(0.1), 11.0);
  EXPECT_EQ(h(0.4), 12.0);
  EXPECT_EQ(h(0.9), 22.0);
}

TEST(Rearrangement, MatchesSortAccumulate) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> cuts = {0.0, 1.0};
    for (int i = 0; i < 6; ++i) cuts.push_back(u(rng));
    std::sort(cuts.begin(), cuts.end());
    std::vector<Cell> cells;
    std::vector<std::pair<double, double>> oracle;  // (value, length)
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (!(cuts[i + 1] > cuts[i])) continue;
      const double v = std::floor(u(rng) * 5.0);
      cells.push_back({Interval(cuts[i], cuts[i + 1]), v});
      oracle.push_back({v, cuts[i + 1] - cuts[i]});
    }
    const auto r = decreasing_rearrangement(StepFunction::from_cells(cells));
    std::stable_sort(oracle.begin(), oracle.end(), [](auto a, auto b) { return a.first > b.first; });
    double x = 0.0;
    for (const auto& [v, len] : oracle) {
      if (v == 0.0) break;
      EXPECT_EQ(r(x + 0.5 * len), v);
      x += len;
    }
    EXPECT_EQ(monotonicity_check(r), Monotonicity::Nonincreasing);
  }
}

TEST(Expr, EvaluatesDerivativeAgainstFiniteDifference) {
  const Expr x = Expr::var(), one = Expr::constant(1.0);
  const Expr e = Expr::pow(x, one + x) + Expr::ln(one + x * x) / (Expr::constant(2.0) - x);
  const Expr d = e.derivative();
  for (double t : {0.1, 0.37, 0.8}) {
    const double h = 1e-6;
    const double fd = (e.eval(t + h, 1 - t - h) - e.eval(t - h, 1 - t + h)) / (2 * h);
    EXPECT_NEAR(d.eval(t, 1 - t), fd, 1e-7);
  }
}

TEST(Expr, OneMinusXUsesComplementCoordinate) {
  const Expr x = Expr::var();
  const Expr e = Expr::pow(Expr::constant(1.0) - x, Expr::constant(2.0));
  const double u = 1e-200;
  EXPECT_DOUBLE_EQ(e.eval(1.0 - u, u), 0.0);  // underflows, but not via cancellation
  EXPECT_DOUBLE_EQ(Expr::pow(Expr::constant(1.0) - x, Expr::constant(0.5)).eval(1.0, 1e-100), 1e-50);
}

TEST(Expr, MinusCancelsMatchingConstants) {
  const Expr x = Expr::var(), q = Expr::constant(1.5);
  const Expr tail = Expr::pow(Expr::constant(1.0) - x, Expr::constant(3.0));
  EXPECT_TRUE(Expr::minus(q + tail, q) == tail);
  EXPECT_TRUE(Expr::minus(tail, tail).is_const());
}

TEST(Expr, LimitsAtInfinity) {
  const Expr n = Expr::var(), one = Expr::constant(1.0);
  EXPECT_EQ(*(one / n).limit_at_infinity(), 0.0);
  EXPECT_EQ(*Expr::pow(Expr::constant(0.5), n).limit_at_infinity(), 0.0);
  EXPECT_EQ(*(one - one / Expr::ln(n)).limit_at_infinity(), 1.0);
}

TEST(Quadrature, MatchesSimpsonOracle) {
  auto f = [](double x) { return std::pow(x, 1.0 + x); };
  const auto r = integrate(f, 0.0, 1.0, 1e-12);
  EXPECT_NEAR(r.value, simpson(f, 0.0, 1.0), 1e-11);
  EXPECT_LE(r.abs_error, 1e-10);
}

TEST(Quadrature, PolynomialsExact) {
  const auto r = integrate([](double x) { return 5 * std::pow(x, 4) - 2 * x; }, 0.0, 2.0);
  EXPECT_NEAR(r.value, 32.0 - 4.0, 1e-12);
}

TEST(TailFamily, CellsValuesAndLocate) {
  const Expr n = Expr::var(), one = Expr::constant(1.0);
  const auto prefix = StepFunction::from_cells(std::vector<Cell>{{Interval(0.0, 0.5), 7.0}});
  const TailFamily t(prefix, one - Expr::pow(Expr::constant(0.5), n), one / n, 1);
  EXPECT_DOUBLE_EQ(t.endpoint(3), 0.875);
  EXPECT_DOUBLE_EQ(t.cell_measure(3), 0.0625);
  EXPECT_EQ(t.locate(Point::at(0.3)), 0);
  EXPECT_EQ(t.locate(Point::at(0.8)), 2);
  EXPECT_EQ(t.locate(Point::from_one(std::ldexp(1.0, -100))), 100);
  EXPECT_DOUBLE_EQ(eval(Function(t), Point::from_one(std::ldexp(0.75, -100))), 1.0 / 100);
}

TEST(TailFamily, LevelSetMeasureFromCells) {
  const Expr n = Expr::var(), one = Expr::constant(1.0);
  const auto prefix = StepFunction::from_cells(std::vector<Cell>{{Interval(0.0, 0.5), 1.0}});
  const Function f = TailFamily(prefix, one - Expr::pow(Expr::constant(0.5), n), one / n, 1);
  // values 1/n in (1/5, 1/2]: n = 2, 3, 4 with measures 1/8, 1/16, 1/32
  const auto ls = level_set(f, ValueBand{0.2, 0.5, false, true});
  EXPECT_DOUBLE_EQ(ls.measure, 0.125 + 0.0625 + 0.03125);
  EXPECT_DOUBLE_EQ(ls.inf, 0.25);
  EXPECT_EQ(monotonicity_check(f), Monotonicity::Nonincreasing);
}

TEST(Carrier, ExpressionValueBoundsAndMonotonicity) {
  const Expr x = Expr::var();
  const Function f = ExprPiecewise(Expr::constant(2.0) - (x - Expr::constant(0.5)) * (x - Expr::constant(0.5)));
  const auto [lo, hi] = value_bounds(f, IntervalSet{Interval(0.0, 1.0)});
  EXPECT_NEAR(lo, 1.75, 1e-12);
  EXPECT_NEAR(hi, 2.0, 1e-12);
  EXPECT_EQ(monotonicity_check(f), Monotonicity::Neither);
  EXPECT_EQ(monotonicity_check(Function(two_piece(2.0, 2.0))), Monotonicity::Nonincreasing);
}

TEST(Carrier, RearrangedValueOfExpression) {
  const Expr x = Expr::var();
  const Function f = ExprPiecewise(x);  // f* (t) = 1 - t
  EXPECT_NEAR(rearranged_value(f, Point::at(0.25), 0.0, 1.0), 0.75, 1e-12);
}
