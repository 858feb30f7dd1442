#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mvmd/pricing.hpp"
#include "mvmd/random.hpp"
#include "support/oracles.hpp"

using namespace mvmd;

namespace {

MultiAssetModel vanilla(double rho) {
    return MultiAssetModel({AssetMixture(1.0, 0.05, {0.6, 0.4}, {0.3, 0.2}), AssetMixture(1.0, 0.05, {0.7, 0.3}, {0.25, 0.35})},
                           CorrelationMatrix::pair(rho));
}

MultiAssetModel spread(double rho) {
    return MultiAssetModel({AssetMixture(0.7, 0.05, {0.6, 0.4}, {0.2, 0.1}), AssetMixture(1.7, 0.05, {0.7, 0.3}, {0.4, 0.5})},
                           CorrelationMatrix::pair(rho));
}

MultiAssetModel gbm_pair(double x1, double x2, double s1, double s2, double rho, double mu = 0.05) {
    return MultiAssetModel({AssetMixture(x1, mu, {1.0}, {s1}), AssetMixture(x2, mu, {1.0}, {s2})}, CorrelationMatrix::pair(rho));
}

BasketSpec arith(std::vector<double> w, double k, int omega = 1) { return {std::move(w), BasketKind::arithmetic, k, 1.0, omega, 0.05}; }
BasketSpec geo(double k) { return {{1.0, 1.0}, BasketKind::geometric, k, 1.0, 1, 0.05}; }

}  // namespace

TEST(BasketSpec, Validation) {
    EXPECT_THROW(arith({0.0, 0.0}, 1.0).validate(2), ValidationError);
    EXPECT_THROW(arith({1.0}, 1.0).validate(2), ValidationError);
    EXPECT_THROW(arith({1.0, 1.0}, -1.0).validate(2), ValidationError);
    BasketSpec g = geo(1.0);
    g.weights = {1.0, -1.0};
    EXPECT_THROW(g.validate(2), ValidationError);
    EXPECT_NO_THROW(arith({-1.0, 1.0}, 0.0).validate(2));
}

TEST(BlackScholes, DegenerateCases) {
    EXPECT_NEAR(black_scholes(1.3, 0.0, 0.0, 0.05, 2.0, 1), 1.3, 1e-15);
    EXPECT_NEAR(black_scholes(1.0, 0.5, 0.0, 0.05, 1.0, 1), 1.0 - 0.5 * std::exp(-0.05), 1e-15);
    EXPECT_THROW(black_scholes(1.0, -1.0, 0.2, 0.0, 1.0, 1), DomainError);
}

TEST(BlackScholes, PutCallParity) {
    RandomStream r(2, 0);
    for (int i = 0; i < 1000; ++i) {
        const double s = 0.1 + 3 * r.uniform(), k = 0.1 + 3 * r.uniform(), v = 0.01 + r.uniform(), rate = 0.1 * r.uniform(),
                     t = 0.1 + 3 * r.uniform();
        const double c = black_scholes(s, k, v, rate, t, 1), p = black_scholes(s, k, v, rate, t, -1);
        ASSERT_NEAR(c - p, s - k * std::exp(-rate * t), 1e-12);
    }
}

TEST(BlackScholes, MatchesPayoffQuadrature) {
    const double q = std::exp(-0.05) * oracle::integrate(
                                           [](double x) { return (x - 1.0) * oracle::lognormal_pdf(x, 0.05 - 0.045, 0.3); },
                                           1.0, 30.0, 1e-14);
    EXPECT_NEAR(black_scholes(1.0, 1.0, 0.3, 0.05, 1.0, 1), q, 1e-10);
}

TEST(Margrabe, ClosedFormCases) {
    const double s = std::sqrt(0.04 - 2 * 0.6 * 0.2 * 0.4 + 0.16);
    EXPECT_NEAR(margrabe(1.2, 1.2, 0.2, 0.4, 0.6, 1.0, 1), 1.2 * (oracle::phi(0.5 * s) - oracle::phi(-0.5 * s)), 1e-14);
    EXPECT_EQ(margrabe(0.7, 1.7, 0.3, 0.3, 1.0, 1.0, 1), 1.0);
    EXPECT_EQ(margrabe(1.7, 0.7, 0.3, 0.3, 1.0, 1.0, 1), 0.0);
    EXPECT_EQ(margrabe(1.7, 0.7, 0.3, 0.3, 1.0, 1.0, -1), 1.0);
}

TEST(Margrabe, RateInvariantAndMatchesMc) {
    const double closed = margrabe(0.7, 1.7, 0.2, 0.4, 0.6, 1.0, 1);
    for (double rate : {0.0, 0.05}) {
        const auto m = gbm_pair(0.7, 1.7, 0.2, 0.4, 0.6, rate);
        BasketSpec spec = arith({-1.0, 1.0}, 0.0);
        spec.rate = rate;
        const auto est = price_arithmetic_mvmd(m, spec, 0.0, {1'000'000, 3, 1});
        EXPECT_NEAR(est.price, closed, 3.0 * est.std_error) << rate;
    }
}

TEST(GeometricK0, ClosedFormCases) {
    EXPECT_NEAR(geometric_pair_k0(1.2, 0.8, 0.0, 0.0, 0.3, 1.0, 2.0, 0.05, 1.0),
                std::pow(1.2, 1.0 / 3.0) * std::pow(0.8, 2.0 / 3.0), 1e-14);
    // rho = -1 and sigma1 w1 = sigma2 w2: no randomness left in the average.
    const double g = geometric_pair_k0(1.0, 1.0, 0.2, 0.4, -1.0, 2.0, 1.0, 0.0, 1.0);
    EXPECT_NEAR(g, std::exp(-(0.5 * 0.04 * 2.0 + 0.5 * 0.16) / 3.0), 1e-14);
}

TEST(GeometricK0, MatchesMcAndGeneralK) {
    const auto m = gbm_pair(1.0, 1.0, 0.3, 0.25, 0.6);
    const double closed = geometric_pair_k0(1.0, 1.0, 0.3, 0.25, 0.6, 1.0, 1.0, 0.05, 1.0);
    EXPECT_NEAR(price_geometric_mvmd(m, geo(0.0)).price, closed, 1e-14);
    const auto est = price_mvmd_single_step(m, geo(0.0), 0.0, {1'000'000, 5, 1});
    EXPECT_NEAR(est.price, closed, 3.0 * est.std_error);
}

TEST(GeometricMixture, ExactPriceMatchesMc) {
    for (double k : {0.7, 1.0, 1.3}) {
        const auto m = vanilla(0.6);
        const double closed = price_geometric_mvmd(m, geo(k)).price;
        EXPECT_EQ(price_geometric_mvmd(m, geo(k)).std_error, 0.0);
        const auto est = price_mvmd_single_step(m, geo(k), 0.0, {1'000'000, 8, 1});
        EXPECT_NEAR(est.price, closed, 3.0 * est.std_error) << k;
    }
}

TEST(GeometricMixture, PublishedCells) {
    // The exact mixture price against the published single-step estimates.
    EXPECT_NEAR(price_geometric_mvmd(vanilla(0.6), geo(0.7)).price, 0.3313, 3 * 0.00074);
    EXPECT_NEAR(price_geometric_mvmd(vanilla(-0.6), geo(1.0)).price, 0.0584, 3 * 0.00025);
}

TEST(ComponentPrice, CollapsesToClosedForms) {
    const MultiAssetModel one({AssetMixture(1.0, 0.05, {1.0}, {0.3})}, CorrelationMatrix(Matrix::Identity(1, 1)));
    BasketSpec s{{1.0}, BasketKind::arithmetic, 1.0, 1.0, 1, 0.05};
    const auto est = component_arithmetic_price(one, {{0}, 1.0}, s, {1'000'000, 4, 1});
    EXPECT_NEAR(est.price, black_scholes(1.0, 1.0, 0.3, 0.05, 1.0, 1), 3.0 * est.std_error);

    const auto m = spread(0.6);
    const auto ex = component_arithmetic_price(m, {{0, 1}, 0.18}, arith({-1.0, 1.0}, 0.0), {1'000'000, 4, 1});
    EXPECT_NEAR(ex.price, margrabe(0.7, 1.7, 0.2, 0.5, 0.6, 1.0, 1), 3.0 * ex.std_error);
}

TEST(ComponentPrice, RegressionFixture) {
    const auto est = component_arithmetic_price(vanilla(0.6), {{0, 0}, 0.42}, arith({0.5, 0.5}, 1.0), {1'000'000, 2024, 1});
    EXPECT_NEAR(est.price, 0.12187561491395332, 1e-10);
    EXPECT_NEAR(est.std_error, 0.00018245777268755946, 1e-12);
}

TEST(MixturePrice, IsTheConvexCombinationOfTuplePrices) {
    const auto m = vanilla(0.6);
    const auto spec = arith({0.5, 0.5}, 1.0);
    const McOptions opts{200'000, 77, 1};
    const auto total = price_arithmetic_mvmd(m, spec, 0.0, opts);
    double resum = 0.0;
    for (const auto& t : truncate(m, 0.0)) resum += t.weight * component_arithmetic_price(m, t, spec, opts).price;
    EXPECT_NEAR(total.price, resum, 1e-12);
}

TEST(MixturePrice, PublishedCells) {
    const McOptions opts{1'000'000, 11, 1};
    const auto a = price_arithmetic_mvmd(vanilla(0.6), arith({0.5, 0.5}, 0.7), 0.0, opts);
    EXPECT_NEAR(a.price, 0.3380, 3.0 * std::hypot(0.0007, a.std_error));
    const auto b = price_arithmetic_mvmd(spread(0.6), arith({-1.0, 1.0}, 1.0), 0.0, opts);
    EXPECT_NEAR(b.price, 0.2868, 3.0 * std::hypot(0.0017, b.std_error));
    const auto c = price_arithmetic_mvmd(vanilla(1.0), arith({0.5, 0.5}, 1.3), 0.0, opts);
    EXPECT_NEAR(c.price, 0.0364, 3.0 * std::hypot(0.0003, c.std_error));
}

TEST(MixturePrice, MonotoneInStrike) {
    for (double rho : {-0.6, 0.6, 1.0}) {
        double prev = 1e9;
        for (double k : {0.7, 1.0, 1.3}) {
            const double p = price_arithmetic_mvmd(vanilla(rho), arith({0.5, 0.5}, k), 0.0, {100'000, 1, 1}).price;
            EXPECT_LE(p, prev);
            prev = p;
        }
    }
}

TEST(MixturePrice, PutCallParityWithinSe) {
    const auto m = spread(0.6);
    const McOptions opts{500'000, 3, 1};
    const auto c = price_arithmetic_mvmd(m, arith({-1.0, 1.0}, 1.0, 1), 0.0, opts);
    const auto p = price_arithmetic_mvmd(m, arith({-1.0, 1.0}, 1.0, -1), 0.0, {500'000, 4, 1});
    const double forward = std::exp(-0.05) * ((-0.7 + 1.7) * std::exp(0.05) - 1.0);
    EXPECT_NEAR(c.price - p.price, forward, 3.0 * std::hypot(c.std_error, p.std_error));
}

TEST(Greeks, LinearPayoffDeltaIsTheWeight) {
    const MultiAssetModel m({AssetMixture(1.0, 0.05, {1.0}, {1e-9}), AssetMixture(2.0, 0.05, {1.0}, {1e-9})},
                            CorrelationMatrix::pair(0.3));
    BasketSpec s = arith({0.4, 0.6}, 0.0);
    const double bumps[2] = {1e-3, 2e-3};
    const auto g = greeks_mvmd(m, s, bumps, 0.0, {1000, 1, 1});
    EXPECT_NEAR(g.delta(0), 0.4, 1e-8);
    EXPECT_NEAR(g.delta(1), 0.6, 1e-8);
    EXPECT_NEAR(g.gamma.norm(), 0.0, 1e-4);
}

TEST(Greeks, GeometricDeltaMatchesAnalyticDerivative) {
    const auto m = vanilla(0.6);
    const auto spec = geo(1.0);
    const double bumps[2] = {1e-4, 1e-4};
    const auto g = greeks_mvmd(m, spec, bumps);
    // Each tuple is Black on a composite forward F = c * sqrt(x1 x2): dPrice/dx1 = e^{-rT} N(d1) F / (2 x1).
    double delta = 0.0;
    for (const auto& t : truncate(m, 0.0)) {
        const double s1 = t.indices[0] == 0 ? 0.3 : 0.2, s2 = t.indices[1] == 0 ? 0.25 : 0.35;
        const double var = 0.25 * (s1 * s1 + s2 * s2 + 2 * 0.6 * s1 * s2);
        const double log_f = 0.5 * ((0.05 - 0.5 * s1 * s1) + (0.05 - 0.5 * s2 * s2)) + 0.5 * var;
        const double d1 = (log_f + 0.5 * var) / std::sqrt(var);
        delta += t.weight * std::exp(-0.05) * oracle::phi(d1) * std::exp(log_f) * 0.5;
    }
    EXPECT_NEAR(g.delta(0), delta, 1e-4 * delta);
}

TEST(Greeks, ConvexCombinationIdentity) {
    const auto m = vanilla(0.6);
    const auto spec = arith({0.5, 0.5}, 1.0);
    const double bumps[2] = {0.01, 0.01};
    const McOptions opts{100'000, 9, 1};
    const auto total = greeks_mvmd(m, spec, bumps, 0.0, opts);
    Vector d = Vector::Zero(2);
    Matrix gm = Matrix::Zero(2, 2);
    for (const auto& t : truncate(m, 0.0)) {
        const auto g = component_greeks(m, t, spec, bumps, opts);
        d += t.weight * g.delta;
        gm += t.weight * g.gamma;
    }
    EXPECT_NEAR((total.delta - d).norm(), 0.0, 1e-12);
    EXPECT_NEAR((total.gamma - gm).norm(), 0.0, 1e-12);
    const double bad[2] = {0.0, 0.01};
    EXPECT_THROW(greeks_mvmd(m, spec, bad, 0.0, opts), DomainError);
}

TEST(Truncation, ConvergesToFullPrice) {
    for (auto m : {vanilla(0.6), spread(0.6)}) {
        const bool is_spread = m.asset(0).spot() != 1.0;
        const auto spec = is_spread ? arith({-1.0, 1.0}, 1.0) : arith({0.5, 0.5}, 1.0);
        const McOptions opts{200'000, 12, 1};
        const auto p0 = price_arithmetic_mvmd(m, spec, 0.0, opts);
        const auto p1 = price_arithmetic_mvmd(m, spec, 0.1, opts);
        const auto p2 = price_arithmetic_mvmd(m, spec, 0.01, opts);
        EXPECT_LE(std::abs(p2.price - p0.price), std::abs(p1.price - p0.price) + 1e-15);
        EXPECT_LE(std::abs(p2.price - p0.price), p0.std_error);
    }
}
