#include <cmath>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <gtest/gtest.h>

#include "stap/random.hpp"
#include "test_support.hpp"

using namespace stap;
using namespace testsupport;

TEST(Random, Uniform01IsOpen) {
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform01(rng);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Random, GammaMatchesCdf) {
  for (double shape : {0.05, 0.7, 3.5}) {
    Rng rng(2);
    std::vector<double> x(20000);
    for (double& v : x) v = gamma(rng, shape, 2.0);
    const boost::math::gamma_distribution<double> d(shape, 0.5);
    // Tiny shapes underflow in linear space; compare on the log scale via cdf.
    EXPECT_LT(ks_one_sample(x, [&](double v) { return v <= 0 ? 0.0 : boost::math::cdf(d, v); }), kKs001)
        << "shape " << shape;
  }
}

TEST(Random, LogGammaSmallShape) {
  Rng rng(3);
  // For shape a, log G has mean digamma(a).
  const double a = 0.01;
  double s = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) s += log_gamma_variate(rng, a);
  EXPECT_NEAR(s / n, boost::math::digamma(a), 0.01 * std::abs(boost::math::digamma(a)));
}

TEST(Random, BetaMatchesCdf) {
  Rng rng(4);
  std::vector<double> x(20000);
  for (double& v : x) v = beta(rng, 2.5, 0.6);
  const boost::math::beta_distribution<double> d(2.5, 0.6);
  EXPECT_LT(ks_one_sample(x, [&](double v) { return boost::math::cdf(d, v); }), kKs001);
}

TEST(Random, DirichletMeansAndZeros) {
  Rng rng(5);
  const std::vector<double> conc{0.5, 2.0, 0.0, 1.5};
  std::vector<double> m(4, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto w = dirichlet(rng, std::span<const double>(conc));
    EXPECT_EQ(w[2], 0.0);
    for (int k = 0; k < 4; ++k) m[k] += w[k] / n;
  }
  EXPECT_NEAR(m[0], 0.125, 3e-3);
  EXPECT_NEAR(m[1], 0.5, 3e-3);
  EXPECT_NEAR(m[3], 0.375, 3e-3);
}

TEST(Random, CrtMean) {
  Rng rng(6);
  const std::int64_t n = 40;
  const double conc = 2.3;
  double expect = 0.0;
  for (int t = 0; t < n; ++t) expect += conc / (t + conc);
  double s = 0.0;
  const int reps = 100000;
  for (int i = 0; i < reps; ++i) s += static_cast<double>(crt(rng, n, conc));
  EXPECT_NEAR(s / reps, expect, 0.02);
  EXPECT_EQ(crt(rng, 0, conc), 0);
}

TEST(Random, InverseWishartMean) {
  Rng rng(7);
  const Mat2 scale = Mat2::sym(2.0, 0.6, 1.0);
  const double dof = 9.0;
  Mat2 acc{};
  const int n = 200000;
  for (int i = 0; i < n; ++i) acc += (1.0 / n) * inverse_wishart(rng, dof, scale);
  EXPECT_NEAR(acc.a, scale.a / (dof - 3), 0.01 * scale.a / (dof - 3));
  EXPECT_NEAR(acc.b, scale.b / (dof - 3), 0.01 * scale.a / (dof - 3));
  EXPECT_NEAR(acc.d, scale.d / (dof - 3), 0.01 * scale.d / (dof - 3));
}

TEST(Random, TruncatedNormalCdf) {
  struct Case { double mean, sd, lo, hi; };
  for (const Case c : {Case{0.3, 0.5, 0.0, 1.0}, Case{5.0, 0.1, 0.0, 1.0}, Case{-40.0, 1.0, 0.0, 1.0},
                       Case{0.5, 1e-4, 0.0, 1.0}}) {
    Rng rng(8);
    std::vector<double> x(20000);
    for (double& v : x) {
      v = truncated_normal(rng, c.mean, c.sd, c.lo, c.hi);
      ASSERT_GE(v, c.lo);
      ASSERT_LE(v, c.hi);
    }
    if (c.mean < -30) continue;  // distribution collapses on lo
    const double flo = normal_cdf((c.lo - c.mean) / c.sd), fhi = normal_cdf((c.hi - c.mean) / c.sd);
    if (fhi - flo < 1e-12) continue;
    EXPECT_LT(ks_one_sample(x, [&](double v) { return (normal_cdf((v - c.mean) / c.sd) - flo) / (fhi - flo); }),
              kKs001);
  }
}

TEST(Random, TruncatedNormalDeepTailMean) {
  // Mean of N(0,1) truncated to [a, inf) is phi(a)/(1-Phi(a)) ~ a + 1/a.
  Rng rng(9);
  const double a = 40.0;
  double s = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) s += truncated_normal(rng, 0.0, 1.0, a, 1e9);
  EXPECT_NEAR(s / n, a + 1.0 / a - 2.0 / (a * a * a), 1e-3);
}

TEST(Random, WrappedCauchyResultant) {
  Rng rng(10);
  const double mu = 2.0, rho = 0.6;
  double c = 0, s = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double t = wrapped_cauchy(rng, mu, rho);
    c += std::cos(t);
    s += std::sin(t);
  }
  EXPECT_NEAR(std::hypot(c, s) / n, rho, 5e-3);
  EXPECT_NEAR(std::atan2(s, c), mu, 1e-2);
}

TEST(Random, WeibullMean) {
  Rng rng(11);
  double s = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) s += weibull(rng, 1.5, 2.0);
  EXPECT_NEAR(s / n, 2.0 * std::tgamma(1.0 + 1.0 / 1.5), 0.01);
}

TEST(Random, CategoricalSkipsZeroWeights) {
  Rng rng(12);
  const std::vector<double> w{0.0, 1.0, 0.0, 3.0};
  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < 40000; ++i) ++counts[categorical(rng, std::span<const double>(w))];
  EXPECT_EQ(counts[0], 0);
  EXPECT_EQ(counts[2], 0);
  EXPECT_NEAR(counts[3] / 40000.0, 0.75, 0.01);
}
