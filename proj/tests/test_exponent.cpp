#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vlab/modular.hpp"

using namespace vlab;

namespace {

StepFunction cells(std::vector<double> cuts, std::vector<double> values) {
  std::vector<Cell> c;
  for (std::size_t i = 0; i < values.size(); ++i) c.push_back({Interval(cuts[i], cuts[i + 1]), values[i]});
  return StepFunction::from_cells(c);
}

}  // namespace

TEST(Exponent, RejectsOutOfRange) {
  EXPECT_THROW(ExponentFunction(cells({0, 0.5, 1}, {0.5, 2.0})), Error);
  EXPECT_THROW(ExponentFunction(StepFunction::constant(70.0)), Error);
  EXPECT_NO_THROW(ExponentFunction(StepFunction::constant(64.0)));
}

TEST(Exponent, BoundsAndRange) {
  const ExponentFunction p(cells({0, 0.25, 0.5, 1}, {3.0, 1.5, 2.0}));
  EXPECT_EQ(p.p_minus(), 1.5);
  EXPECT_EQ(p.p_plus(), 3.0);
  const auto r = essential_range(p);
  EXPECT_TRUE(r.contains(2.0));
  EXPECT_FALSE(r.contains(2.5));
  EXPECT_TRUE(r.exact());
}

TEST(Exponent, ExpressionRangeIsInterval) {
  const Expr x = Expr::var();
  const ExponentFunction p(ExprPiecewise(Expr::constant(1.0) + x));
  const auto r = essential_range(p);
  EXPECT_TRUE(r.contains(1.5));
  EXPECT_NEAR(r.min(), 1.0, 1e-12);
  EXPECT_NEAR(r.max(), 2.0, 1e-12);
}

TEST(Exponent, Conjugate) {
  const ExponentFunction p(cells({0, 0.5, 1}, {1.0, 3.0}));
  EXPECT_TRUE(conjugate(p, 0.2).infinite);
  EXPECT_DOUBLE_EQ(conjugate(p, 0.7).value, 1.5);
  EXPECT_THROW(conjugate_exponent(p), Error);
  const auto c = conjugate_exponent(ExponentFunction(cells({0, 0.5, 1}, {2.0, 4.0})));
  EXPECT_DOUBLE_EQ(c(0.2), 2.0);
  EXPECT_DOUBLE_EQ(c(0.7), 4.0 / 3.0);
}

TEST(Modular, StepCellsExact) {
  const ExponentFunction p(cells({0, 0.5, 1}, {1.0, 2.0}));
  const auto m = modular(StepFunction::constant(2.0), p);
  EXPECT_DOUBLE_EQ(m.value, 0.5 * 2.0 + 0.5 * 4.0);
}

TEST(Modular, ExpressionExponentAgainstQuadratureOracle) {
  const Expr x = Expr::var();
  const ExponentFunction p(ExprPiecewise(Expr::constant(1.0) + x));
  // integral of 3^{1+x} over [0,1] = 3 (3 - 1) / ln 3
  const auto m = modular(StepFunction::constant(3.0), p);
  EXPECT_NEAR(m.value, 6.0 / std::log(3.0), 1e-10);
}

TEST(Norm, TwoPieceExactCase) {
  const ExponentFunction p(cells({0, 0.5, 1}, {1.0, 2.0}));
  const auto n = luxemburg_norm(StepFunction::constant(2.0), p);
  EXPECT_NEAR(n.value, 2.0, 1e-9);
}

TEST(Norm, ConstantExponentMatchesPowerSum) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (double pc : {1.0, 2.0, 3.0}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> vals = {u(rng), u(rng), u(rng), u(rng)};
      const auto f = cells({0, 0.1, 0.4, 0.7, 1}, vals);
      const double lens[] = {0.1, 0.3, 0.3, 0.3};
      double s = 0;
      for (int i = 0; i < 4; ++i) s += std::pow(std::fabs(vals[i]), pc) * lens[i];
      EXPECT_NEAR(luxemburg_norm(f, ExponentFunction::constant(pc)).value, std::pow(s, 1.0 / pc), 1e-9);
    }
  }
}

TEST(Norm, UnitModularAtNorm) {
  const Expr x = Expr::var();
  const ExponentFunction p(ExprPiecewise(Expr::constant(1.5) + x * x));
  const auto f = cells({0, 0.3, 1}, {5.0, -0.5});
  const double n = luxemburg_norm(f, p).value;
  EXPECT_NEAR(modular(f.scaled(1.0 / n), p).value, 1.0, 1e-9);
}

TEST(Norm, ZeroFunction) { EXPECT_EQ(luxemburg_norm(StepFunction::constant(0.0), ExponentFunction::constant(2.0)).value, 0.0); }

TEST(Holder, PairingBoundHolds) {
  const ExponentFunction p(cells({0, 0.5, 1}, {2.0, 3.0}));
  const auto f = cells({0, 0.2, 1}, {1.0, 4.0});
  const auto g = cells({0, 0.7, 1}, {2.0, -1.0});
  const auto h = holder_pairing_check(f, g, p);
  EXPECT_TRUE(h.holds);
  EXPECT_LE(h.pairing.value, h.bound);
}

TEST(BlockModular, NormalizedIndicatorsHaveUnitModular) {
  const Expr x = Expr::var();
  const ExponentFunction p(ExprPiecewise(Expr::constant(1.0) + x));
  const std::vector<Block> b = {{IntervalSet{Interval(0.1, 0.3)}, 1.0}};
  EXPECT_NEAR(block_modular(b, p, p).value, 1.0, 1e-12);
}
