#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "mvmd/mixture_univariate.hpp"
#include "mvmd/random.hpp"
#include "support/oracles.hpp"

using mvmd::AssetMixture;
using mvmd::VolCurve;

namespace {

AssetMixture asset1() { return AssetMixture(1.0, 0.05, {0.6, 0.4}, {0.3, 0.2}); }
AssetMixture asset2() { return AssetMixture(1.0, 0.05, {0.7, 0.3}, {0.25, 0.35}); }

double oracle_mixture_pdf(double x) {
    return 0.6 * oracle::lognormal_pdf(x, 0.05 - 0.045, 0.3) + 0.4 * oracle::lognormal_pdf(x, 0.05 - 0.02, 0.2);
}

}  // namespace

TEST(AssetMixture, Validation) {
    EXPECT_THROW(AssetMixture(1.0, 0.0, {0.5, 0.4}, {0.2, 0.3}), mvmd::ValidationError);
    EXPECT_THROW(AssetMixture(0.0, 0.0, {1.0}, {0.2}), mvmd::ValidationError);
    EXPECT_THROW(AssetMixture(1.0, 0.0, {1.2, -0.2}, {0.2, 0.3}), mvmd::ValidationError);
    EXPECT_THROW(AssetMixture(1.0, 0.0, std::vector<double>{}, std::vector<double>{}), mvmd::ValidationError);
    EXPECT_NO_THROW(AssetMixture(1.0, 0.0, {0.5, 0.5 + 1e-13}, {0.2, 0.3}));
}

TEST(ComponentPdf, MatchesClosedFormAtLogMean) {
    const AssetMixture a(1.0, 0.0, {1.0}, {0.2});
    const double x = std::exp(-0.02);
    EXPECT_NEAR(mvmd::component_pdf(a, 0, 1.0, x), 1.0 / (std::sqrt(2.0 * std::numbers::pi) * 0.2 * x), 1e-13);
    EXPECT_EQ(mvmd::component_pdf(a, 0, 1.0, 0.0), 0.0);
    EXPECT_EQ(mvmd::component_pdf(a, 0, 1.0, -1.0), 0.0);
    EXPECT_LT(mvmd::component_pdf(a, 0, 1.0, 1e6), 1e-300);
    EXPECT_THROW(mvmd::component_pdf(a, 0, 0.0, 1.0), mvmd::DomainError);
}

TEST(ComponentPdf, IntegratesToOne) {
    const auto a = asset1();
    for (std::size_t k = 0; k < 2; ++k)
        EXPECT_NEAR(oracle::integrate_positive([&](double x) { return mvmd::component_pdf(a, k, 1.0, x); }), 1.0, 1e-8);
}

TEST(MixturePdf, MatchesIndependentFormulaAndNormalises) {
    const auto a = asset1();
    for (double x : {0.3, 0.8, 1.0, 1.2, 2.5}) EXPECT_NEAR(mvmd::mixture_pdf(a, 1.0, x), oracle_mixture_pdf(x), 1e-13);
    EXPECT_NEAR(oracle::integrate_positive([&](double x) { return mvmd::mixture_pdf(a, 1.0, x); }), 1.0, 1e-8);
}

TEST(MixtureCdf, MatchesQuadrature) {
    const auto a = asset1();
    const double q = oracle::integrate([](double x) { return oracle_mixture_pdf(x); }, 1e-12, 1.0);
    EXPECT_NEAR(mvmd::mixture_cdf(a, 1.0, 1.0), q, 1e-10);
    EXPECT_EQ(mvmd::mixture_cdf(a, 1.0, 0.0), 0.0);
    EXPECT_EQ(mvmd::mixture_cdf(a, 1.0, -3.0), 0.0);
    EXPECT_NEAR(mvmd::mixture_cdf(a, 1.0, 1e6), 1.0, 1e-15);
    double prev = 0.0;
    for (double x = 0.05; x < 5.0; x += 0.05) {
        const double f = mvmd::mixture_cdf(a, 1.0, x);
        EXPECT_GE(f, prev);
        prev = f;
    }
}

TEST(MixtureCdf, SingleComponentReduces) {
    const AssetMixture a(1.3, 0.02, {1.0}, {0.25});
    for (double x : {0.5, 1.3, 2.0}) {
        EXPECT_EQ(mvmd::mixture_pdf(a, 0.7, x), mvmd::component_pdf(a, 0, 0.7, x));
        EXPECT_EQ(mvmd::mixture_cdf(a, 0.7, x), mvmd::component_cdf(a, 0, 0.7, x));
    }
}

TEST(InverseCdf, RoundTripsAndMedian) {
    const auto a = asset1();
    for (double x : {0.4, 0.9, 1.0, 1.1, 2.0}) EXPECT_NEAR(mvmd::inverse_cdf(a, 1.0, mvmd::mixture_cdf(a, 1.0, x)), x, 1e-8);
    for (double u : {1e-6, 0.01, 0.3, 0.5, 0.9, 0.999999})
        EXPECT_NEAR(mvmd::mixture_cdf(a, 1.0, mvmd::inverse_cdf(a, 1.0, u)), u, 1e-10);
    const AssetMixture g(1.0, 0.05, {1.0}, {0.2});
    EXPECT_NEAR(mvmd::inverse_cdf(g, 1.0, 0.5), std::exp(0.05 - 0.02), 1e-12);
    EXPECT_THROW(mvmd::inverse_cdf(a, 1.0, 0.0), mvmd::DomainError);
    EXPECT_THROW(mvmd::inverse_cdf(a, 1.0, 1.0), mvmd::DomainError);
}

TEST(InverseCdf, MatchesBisectionOnQuadratureCdf) {
    const auto a = asset2();
    auto pdf = [](double x) {
        return 0.7 * oracle::lognormal_pdf(x, 0.05 - 0.03125, 0.25) + 0.3 * oracle::lognormal_pdf(x, 0.05 - 0.06125, 0.35);
    };
    const double x = oracle::bisect(
        [&](double y) { return oracle::integrate(pdf, 1e-12, y) - 0.975; }, 0.5, 4.0, 80);
    EXPECT_NEAR(mvmd::inverse_cdf(a, 1.0, 0.975), x, 1e-8);
}

TEST(LocalVol, IdenticalComponentsGiveThatVol) {
    const AssetMixture a(1.0, 0.03, {0.3, 0.7}, {0.25, 0.25});
    for (double x : {0.01, 0.5, 1.0, 3.0, 1e4}) EXPECT_NEAR(mvmd::local_vol(a, 0.5, x), 0.25, 1e-14);
}

TEST(LocalVol, MatchesHandEvaluation) {
    const auto a = asset1();
    const double x = std::exp(0.05);
    const double p1 = oracle::lognormal_pdf(x, 0.05 - 0.045, 0.3);
    const double p2 = oracle::lognormal_pdf(x, 0.05 - 0.02, 0.2);
    const double expected = std::sqrt((0.6 * 0.09 * p1 + 0.4 * 0.04 * p2) / (0.6 * p1 + 0.4 * p2));
    EXPECT_NEAR(mvmd::local_vol(a, 1.0, x), expected, 1e-14);
}

TEST(LocalVol, StaysWithinComponentBounds) {
    const AssetMixture a(1.0, 0.05, {{0.2, VolCurve({0.0, 0.5}, {0.1, 0.6})}, {0.5, VolCurve(0.3)}, {0.3, VolCurve(0.45)}});
    mvmd::RandomStream r(3, 0);
    for (int i = 0; i < 10000; ++i) {
        const double t = 1e-3 + 3.0 * r.uniform();
        const double x = std::exp(6.0 * (r.uniform() - 0.5));
        const double lo = std::min({a.component(0).vol(t), 0.3, 0.45});
        const double hi = std::max({a.component(0).vol(t), 0.3, 0.45});
        const double nu = mvmd::local_vol(a, t, x);
        ASSERT_GE(nu, lo * (1 - 1e-14));
        ASSERT_LE(nu, hi * (1 + 1e-14));
    }
}

TEST(LocalVol, ExtremeLevelsTakeTheFattestTail) {
    const auto a = asset1();
    EXPECT_NEAR(mvmd::local_vol(a, 0.01, 1e-200), 0.3, 1e-12);
    EXPECT_NEAR(mvmd::local_vol(a, 0.01, 1e200), 0.3, 1e-12);
    EXPECT_THROW(mvmd::local_vol(a, 0.0, 1.0), mvmd::DomainError);
}

TEST(LocalVol, SmallTimeLimitAtSpot) {
    const auto a = asset1();
    const double limit = std::sqrt((0.6 * 0.3 + 0.4 * 0.2) / (0.6 / 0.3 + 0.4 / 0.2));
    EXPECT_NEAR(mvmd::local_vol_at_start(a), limit, 1e-15);
    EXPECT_NEAR(mvmd::local_vol(a, 1e-10, 1.0), limit, 1e-5);
}

TEST(Moments, MatchLognormalFormula) {
    const auto a = asset1();
    for (int m = 1; m <= 4; ++m) {
        const double expected = 0.6 * std::exp(m * (0.05 - 0.045) + 0.5 * m * m * 0.09) +
                                0.4 * std::exp(m * (0.05 - 0.02) + 0.5 * m * m * 0.04);
        EXPECT_NEAR(mvmd::mixture_moment(a, 1.0, m), expected, 1e-12 * expected);
    }
    const double q = oracle::integrate_positive([&](double x) { return x * x * mvmd::mixture_pdf(a, 1.0, x); });
    EXPECT_NEAR(mvmd::mixture_moment(a, 1.0, 2), q, 1e-8);
}

TEST(EulerMd, ConstantVolIsExactGbm) {
    const AssetMixture a(1.0, 0.05, {1.0}, {0.3});
    const auto xs = mvmd::simulate_md_euler(a, 1.0, 12, 100000, 5, 1);
    const auto ks = oracle::ks_one_sample(xs, [&](double x) { return mvmd::mixture_cdf(a, 1.0, x); });
    EXPECT_GT(ks.p_value, 0.01);
}

TEST(EulerMd, TerminalLawMatchesMixture) {
    const auto a = asset1();
    const auto xs = mvmd::simulate_md_euler(a, 1.0, 360, 100000, 9, 1);
    const auto ks = oracle::ks_one_sample(xs, [&](double x) { return mvmd::mixture_cdf(a, 1.0, x); });
    EXPECT_LT(ks.statistic, 0.006);
    EXPECT_GT(ks.p_value, 0.01);
    double mean = 0.0, sq = 0.0;
    for (double x : xs) {
        mean += x;
        sq += x * x;
        ASSERT_GT(x, 0.0);
    }
    mean /= xs.size();
    const double se = std::sqrt((sq / xs.size() - mean * mean) / xs.size());
    EXPECT_NEAR(mean * std::exp(-0.05), 1.0, 3.0 * se);
}

TEST(EulerMd, DeterministicAcrossWorkers) {
    const auto a = asset2();
    const auto one = mvmd::simulate_md_euler(a, 1.0, 50, 5000, 17, 1);
    const auto three = mvmd::simulate_md_euler(a, 1.0, 50, 5000, 17, 3);
    EXPECT_EQ(one, three);
    EXPECT_EQ(one, mvmd::simulate_md_euler(a, 1.0, 50, 5000, 17, 1));
}

TEST(EulerMd, OptionPricesAreConvexCombinations) {
    const auto a = asset1();
    const double k = 1.05, r = 0.05;
    const auto xs = mvmd::simulate_md_euler(a, 1.0, 360, 100000, 23, 1);
    double mean = 0.0, sq = 0.0;
    for (double x : xs) {
        const double p = std::exp(-r) * std::max(x - k, 0.0);
        mean += p;
        sq += p * p;
    }
    mean /= xs.size();
    const double se = std::sqrt((sq / xs.size() - mean * mean) / xs.size());
    auto bs = [&](double s) {
        const double d1 = (std::log(1.0 / k) + (r + 0.5 * s * s)) / s;
        return oracle::phi(d1) - k * std::exp(-r) * oracle::phi(d1 - s);
    };
    EXPECT_NEAR(mean, 0.6 * bs(0.3) + 0.4 * bs(0.2), 3.0 * se);
}
