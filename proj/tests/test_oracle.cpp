#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gjs/divergence.hpp"
#include "gjs/error.hpp"
#include "gjs/oracle.hpp"
#include "support/random_gaussians.hpp"

namespace gjs {
namespace {

FullGaussian normal1(double mean, double var) { return FullGaussian(Vec::Constant(1, mean), Mat::Constant(1, 1, var)); }

// Some integrands are constant (the dual at alpha = 0.5), so the standard
// error is floored at rounding level.
void expect_within_3se(const McEstimate& est, double truth) {
  const double se = std::max(est.std_error, 1e-13 * std::max(1.0, std::abs(truth)));
  EXPECT_LE(std::abs(est.value - truth), 3.0 * se)
      << "estimate " << est.value << " +- " << est.std_error << " vs " << truth;
}

TEST(McKl, IdenticalIsZero) {
  const auto p = gaussian_handle(FullGaussian::standard(3));
  const auto est = mc_kl(p, p, 10000, 1);
  EXPECT_LE(std::abs(est.value), 3.0 * est.std_error + 1e-15);
}

TEST(McKl, UnitMeanShift) {
  const auto est = mc_kl(gaussian_handle(normal1(1, 1)), gaussian_handle(normal1(0, 1)), 1000000, 2);
  expect_within_3se(est, 0.5);
  EXPECT_EQ(est.n_samples, 1000000);
  EXPECT_EQ(est.seed, 2u);
}

TEST(McKl, Deterministic) {
  const auto p = gaussian_handle(normal1(0.3, 2)), q = gaussian_handle(normal1(-1, 0.5));
  const auto a = mc_kl(p, q, 50000, 9), b = mc_kl(p, q, 50000, 9);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_NE(a.value, mc_kl(p, q, 50000, 10).value);
}

TEST(McKl, ReportsNonFiniteIntegrand) {
  DensityHandle bad = gaussian_handle(normal1(0, 1));
  bad.log_pdf = [](const Vec&) { return -std::numeric_limits<double>::infinity(); };
  bad.log_pdf_rows = nullptr;
  bad.gaussian.reset();
  EXPECT_THROW(mc_kl(gaussian_handle(normal1(0, 1)), bad, 100, 1), NumericalError);
}

TEST(McJs, BoundsAndSaturation) {
  const auto p = gaussian_handle(normal1(0, 1));
  const auto same = mc_js(p, p, 20000, 1);
  EXPECT_LE(std::abs(same.value), 3.0 * same.std_error + 1e-15);
  const auto far = mc_js(p, gaussian_handle(normal1(10, 1)), 200000, 2);
  EXPECT_NEAR(far.value, std::log(2.0), 0.02 * std::log(2.0));
  Rng rng = make_rng(3);
  for (int t = 0; t < 10; ++t) {
    const auto n = testing::random_dim(rng, 1, 3);
    const auto e = mc_js(gaussian_handle(testing::random_full(rng, n)), gaussian_handle(testing::random_full(rng, n)),
                         20000, static_cast<std::uint64_t>(t));
    EXPECT_GE(e.value, -3.0 * e.std_error);
    EXPECT_LE(e.value, std::log(2.0) + 3.0 * e.std_error);
  }
}

TEST(McJs, MatchesQuadrature) {
  const auto p = gaussian_handle(normal1(-2, 1)), q = gaussian_handle(normal1(2, 2));
  const DivergenceSpec spec(Family::JS, SkewConvention::Primed);
  const auto [lo, hi] = default_bounds_1d(p, q);
  expect_within_3se(mc_js(p, q, 1000000, 4), quad_divergence_1d(p, q, spec, lo, hi, 1e-10));
}

TEST(McLambda, HalfIsJs) {
  const auto p = gaussian_handle(normal1(-1, 1)), q = gaussian_handle(normal1(1, 3));
  const auto lam = mc_lambda(p, q, 0.5, 200000, 5);
  const auto js = mc_js(p, q, 200000, 6);
  EXPECT_LE(std::abs(lam.value - js.value), 3.0 * std::hypot(lam.std_error, js.std_error));
}

// With the mixture (1-lam) p + lam q, lam = 0 leaves KL(q || p).
TEST(McLambda, ZeroIsReverseKl) {
  const auto g1 = normal1(-1, 1), g2 = normal1(1, 3);
  expect_within_3se(mc_lambda(gaussian_handle(g1), gaussian_handle(g2), 0.0, 1000000, 7), kl_full(g2, g1));
  const auto p = gaussian_handle(g1);
  for (double lam : {0.0, 0.3, 1.0}) {
    const auto e = mc_lambda(p, p, lam, 10000, 8);
    EXPECT_LE(std::abs(e.value), 3.0 * e.std_error + 1e-15);
  }
}

TEST(McLambda, MatchesQuadrature) {
  const auto p = gaussian_handle(normal1(0, 1)), q = gaussian_handle(normal1(1.5, 0.5));
  DivergenceSpec spec(Family::Lambda, SkewConvention::Primed);
  spec.lambda_skew = 0.25;
  const auto [lo, hi] = default_bounds_1d(p, q);
  expect_within_3se(mc_lambda(p, q, 0.25, 1000000, 9), quad_divergence_1d(p, q, spec, lo, hi, 1e-10));
}

TEST(McGjs, MatchesClosedForms) {
  Rng rng = make_rng(10);
  for (int t = 0; t < 4; ++t) {
    const auto n = testing::random_dim(rng, 1, 4);
    const auto g1 = testing::random_full(rng, n), g2 = testing::random_full(rng, n);
    const auto p = gaussian_handle(g1), q = gaussian_handle(g2);
    for (auto conv : {SkewConvention::Original, SkewConvention::Primed}) {
      expect_within_3se(mc_gjs(p, q, 0.5, conv, false, 1000000, 11 + t), gjs_full(g1, g2, 0.5, conv));
      expect_within_3se(mc_gjs(p, q, 0.3, conv, true, 1000000, 21 + t), gjs_dual_full(g1, g2, 0.3, conv));
    }
  }
  const auto p = gaussian_handle(FullGaussian::standard(2));
  const auto same = mc_gjs(p, p, 0.4, SkewConvention::Primed, false, 10000, 1);
  EXPECT_LE(std::abs(same.value), 3.0 * same.std_error + 1e-12);
}

TEST(McDivergence, Dispatch) {
  const auto g1 = normal1(0, 1), g2 = normal1(1, 2);
  const auto p = gaussian_handle(g1), q = gaussian_handle(g2);
  EXPECT_EQ(mc_divergence(p, q, DivergenceSpec(Family::KLReverse, SkewConvention::Primed), 1000, 3).value,
            mc_kl(q, p, 1000, 3).value);
  EXPECT_THROW(mc_divergence(p, q, DivergenceSpec(Family::MMD, SkewConvention::Primed), 1000, 3), UnsupportedError);
}

TEST(GeometricMean, GaussianHandleIsIntermediate) {
  const auto g1 = normal1(-2, 1), g2 = normal1(2, 2);
  const auto m = geometric_mean_handle(gaussian_handle(g1), gaussian_handle(g2), 0.3, SkewConvention::Primed);
  ASSERT_TRUE(m.gaussian.has_value());
  const auto ref = intermediate_full(g1, g2, 0.3, SkewConvention::Primed);
  EXPECT_EQ(m.gaussian->mu(), ref.mu());
  EXPECT_EQ(m.gaussian->sigma(), ref.sigma());
}

TEST(GeometricMean, QuadratureNormalizedForMixtures) {
  const auto p = mixture_handle({0.6, 0.4}, {normal1(-2, 0.5), normal1(1, 1)});
  const auto q = gaussian_handle(normal1(0.5, 2));
  const auto m = geometric_mean_handle(p, q, 0.5, SkewConvention::Original);
  const double mass = adaptive_simpson([&](double x) { return std::exp(m.log_pdf(Vec::Constant(1, x))); }, -15.0,
                                       15.0, 1e-11);
  EXPECT_NEAR(mass, 1.0, 1e-8);
  const Mat s = m.sampler(200000, 3);
  const double mean = s.col(0).mean();
  const double quad_mean = adaptive_simpson(
      [&](double x) { return x * std::exp(m.log_pdf(Vec::Constant(1, x))); }, -15.0, 15.0, 1e-11);
  EXPECT_NEAR(mean, quad_mean, 0.02);
}

TEST(GeometricMean, TwoDimensionalMixture) {
  const FullGaussian a(Vec{{1.0, 0.0}}, Mat::Identity(2, 2)), b(Vec{{-1.0, 0.5}}, Mat{{1.5, 0.2}, {0.2, 0.8}});
  const auto p = mixture_handle({0.5, 0.5}, {a, b});
  const auto q = gaussian_handle(FullGaussian::standard(2));
  const auto m = geometric_mean_handle(p, q, 0.4, SkewConvention::Primed);
  const double mass = adaptive_simpson(
      [&](double x) {
        return adaptive_simpson([&](double y) { return std::exp(m.log_pdf(Vec{{x, y}})); }, -10.0, 10.0, 1e-11);
      },
      -10.0, 10.0, 1e-9);
  EXPECT_NEAR(mass, 1.0, 1e-6);
}

TEST(GeometricMean, HighDimensionalMixtureUnsupported) {
  const auto p = mixture_handle({1.0}, {FullGaussian::standard(3)});
  const auto q = gaussian_handle(FullGaussian::standard(3));
  EXPECT_THROW(geometric_mean_handle(p, q, 0.5, SkewConvention::Primed), UnsupportedError);
}

TEST(Quadrature, SimpsonRules) {
  EXPECT_NEAR(adaptive_simpson([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 1e-12), 2.0, 1e-11);
  std::vector<double> y(101);
  for (int i = 0; i <= 100; ++i) y[static_cast<std::size_t>(i)] = std::pow(i * 0.01, 3);
  EXPECT_NEAR(simpson_sum(y, 0.01), 0.25, 1e-14);
  EXPECT_THROW(adaptive_simpson([](double x) { return 1.0 / x; }, 0.0, 1.0, 1e-12, 12), QuadratureError);
}

TEST(Quadrature, KlUnitShift) {
  const auto p = gaussian_handle(normal1(1, 1)), q = gaussian_handle(normal1(0, 1));
  EXPECT_NEAR(quad_divergence_1d(p, q, DivergenceSpec(Family::KLForward, SkewConvention::Primed), -12, 12, 1e-9),
              0.5, 1e-8);
  EXPECT_NEAR(quad_divergence_1d(p, p, DivergenceSpec(Family::GJS, SkewConvention::Primed), -12, 12, 1e-9), 0.0,
              1e-9);
}

TEST(Quadrature, GjsIntegrandMatchesClosedForm) {
  const auto g1 = normal1(-2, 1), g2 = normal1(2, 2);
  const auto p = gaussian_handle(g1), q = gaussian_handle(g2);
  const auto [lo, hi] = default_bounds_1d(p, q);
  for (auto conv : {SkewConvention::Original, SkewConvention::Primed}) {
    DivergenceSpec s(Family::GJS, conv);
    EXPECT_NEAR(quad_divergence_1d(p, q, s, lo, hi, 1e-10), gjs_full(g1, g2, 0.5, conv), 1e-6);
    s.family = Family::GJSDual;
    s.alpha = 0.2;
    EXPECT_NEAR(quad_divergence_1d(p, q, s, lo, hi, 1e-10), gjs_dual_full(g1, g2, 0.2, conv), 1e-6);
  }
  const auto t = tabulate_integrand(p, q, DivergenceSpec(Family::GJS, SkewConvention::Primed), lo, hi, 4001);
  EXPECT_NEAR(simpson_sum(t.integrand, t.x[1] - t.x[0]), gjs_full(g1, g2, 0.5, SkewConvention::Primed), 1e-6);
  EXPECT_NEAR(simpson_sum(t.mean_density, t.x[1] - t.x[0]), 1.0, 1e-6);
}

TEST(Quadrature, RejectsMultivariate) {
  const auto p = gaussian_handle(FullGaussian::standard(2));
  EXPECT_THROW(quad_divergence_1d(p, p, DivergenceSpec(Family::KLForward, SkewConvention::Primed), -1, 1, 1e-6),
               DimensionError);
}

}  // namespace
}  // namespace gjs
