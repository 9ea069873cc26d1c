#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "vlab/series.hpp"

using namespace vlab;

namespace {

const Expr n = Expr::var();
const Expr one = Expr::constant(1.0);

}  // namespace

TEST(Series, InverseSquareConverges) {
  const auto v = certify(one / (n * n), 1);
  ASSERT_EQ(v.status, SeriesStatus::Converges);
  ASSERT_TRUE(v.certificate);
  EXPECT_EQ(v.certificate->kind, ConvergenceCertificate::Kind::Comparison);
  EXPECT_EQ(v.certificate->s, 2.0);
  const double zeta2 = std::numbers::pi * std::numbers::pi / 6.0;
  EXPECT_LE(v.partial_sum, zeta2);
  EXPECT_GE(v.total_bound(), zeta2 - 1e-12);
}

TEST(Series, HarmonicDiverges) {
  const auto v = certify(one / n, 1);
  ASSERT_EQ(v.status, SeriesStatus::Diverges);
  EXPECT_EQ(v.certificate->kind, ConvergenceCertificate::Kind::Divergence);
  EXPECT_EQ(v.certificate->c, 1.0);
}

TEST(Series, GeometricSumIsBracketed) {
  const auto v = certify(Expr::pow(Expr::constant(0.6), n), 1);
  ASSERT_EQ(v.status, SeriesStatus::Converges);
  EXPECT_LE(v.partial_sum, 1.5 + 1e-12);
  EXPECT_GE(v.total_bound(), 1.5 - 1e-12);
}

TEST(Series, RatioCertificateWhenPowersFail) {
  // Without comparison exponents the ratio search picks it up at 0.9.
  SeriesGrid g;
  g.s.clear();
  const auto v = certify(Expr::pow(Expr::constant(0.6), n), 1, g);
  ASSERT_EQ(v.status, SeriesStatus::Converges);
  EXPECT_EQ(v.certificate->kind, ConvergenceCertificate::Kind::Geometric);
  EXPECT_EQ(v.certificate->ratio, 0.9);
}

TEST(Series, SlowTermHasNoCertificate) {
  // 1/(n ln n ln ln n) diverges too slowly for c/n and converges for nothing.
  const Expr ln = Expr::ln(n);
  const auto v = certify(one / (n * ln * Expr::ln(ln)), 16);
  EXPECT_EQ(v.status, SeriesStatus::Unknown);
  EXPECT_FALSE(v.reason.empty());
}

TEST(Series, PartialSumsMatchLoop) {
  double s = 0.0;
  for (long k = 1; k <= 100; ++k) s += 1.0 / static_cast<double>(k);
  EXPECT_NEAR(partial_sum(one / n, 1, 100), s, 1e-13);
  EXPECT_THROW(partial_sum(one / n, 5, 4), Error);
}

TEST(Series, RecheckConfirmsAndRejects) {
  const auto t = SeriesTerm::from_expr(one / (n * n));
  const auto v = certify(one / (n * n), 1);
  ASSERT_TRUE(v.certificate);
  EXPECT_TRUE(recheck(*v.certificate, t).ok);
  auto bad = *v.certificate;
  bad.s = 3.0;
  const auto r = recheck(bad, t);
  EXPECT_FALSE(r.ok);
  ASSERT_TRUE(r.first_failure);
}

TEST(Series, LogDomainHandlesUnderflow) {
  // (1/n)^n underflows near n = 150; the log form keeps certifying.
  const Expr e = Expr::pow(one / n, n);
  EXPECT_NEAR(log_at(e, 1000), -1000.0 * std::log(1000.0), 1e-9);
  EXPECT_EQ(certify(e, 1).status, SeriesStatus::Converges);
}
