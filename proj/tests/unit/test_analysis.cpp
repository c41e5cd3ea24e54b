/*
 * Copyright 2026 The mumimo-sched Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/lambert_w.hpp>
#include <gtest/gtest.h>

#include "mumimo/analysis.hpp"

using namespace mumimo;

namespace {

RateParams section5(int k = 40)
{
    RateParams p;
    p.users = k;
    return p;
}

// Baseline service rate from the order-statistic tail integral, packets/slot.
double oracle_mu_b(const RateParams& p)
{
    boost::math::quadrature::exp_sinh<double> es;
    const int m = p.tx_antennas;
    const double draws = static_cast<double>(p.rx_antennas) * p.users;
    auto f = [&](double x) {
        const double tail = std::exp(-x / p.power) / std::pow(1.0 + x, m - 1);
        return -std::expm1(draws * std::log1p(-tail)) / (1.0 + x);
    };
    const double kappa = p.bandwidth_hz * p.slot_seconds / (p.packet_bits * std::log(2.0));
    return kappa * m * es.integrate(f, 1e-13) / p.users;
}

// Decay-rate lower bound straight from its definition, with Boost's Lambert
// W and tanh-sinh quadrature.
struct OracleBound {
    double eps;
    double value;
};

OracleBound oracle_prop_lb(const RateParams& p)
{
    const double kappa = p.bandwidth_hz * p.slot_seconds / (p.packet_bits * std::log(2.0));
    const double lambda = p.arrival_rate_total * p.slot_seconds / p.users;
    const int m = p.tx_antennas;
    const int n = p.rx_antennas;
    boost::math::quadrature::exp_sinh<double> es;
    const double r0 = es.integrate(
        [&](double x) {
            return std::log1p(x) * std::exp(-x / p.power) * std::pow(1.0 + x, -m) * ((1.0 + x) / p.power + m - 1);
        },
        1e-14);
    const double floor = kappa * m * r0 / p.users;
    auto mu = [&](double x) {
        const double s = std::min(std::exp(boost::math::lambert_w0(m * n * x / p.cost_weight)) / n,
                                  static_cast<double>(p.users));
        const double inner = p.power * std::log(n * s);
        return inner > 0 ? kappa * m * std::log(inner) / s : -std::numeric_limits<double>::infinity();
    };
    // first crossing of the floor by a fine scan then bisection
    double lo = 1e-12;
    double hi = lo;
    while (!(mu(hi) > floor)) {
        lo = hi;
        hi *= 1.01;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mu(mid) > floor ? hi : lo) = mid;
    }
    const double eps = 0.5 * (lo + hi);
    boost::math::quadrature::tanh_sinh<double> ts;
    const double head = eps * std::log(floor / lambda);
    const double tail = ts.integrate([&](double x) { return std::log(mu(x) / lambda); }, eps, 1.0);
    return {eps, head + tail};
}

} // namespace

TEST(Lmf, VanishesAtZeroAndSlopeIsDrift)
{
    const double lambda = 0.1875;
    const double mu = 0.6;
    const auto arrival = ArrivalModel::poisson(lambda);
    auto dep = [&](double, double s) { return mu * std::expm1(s); };
    for (double x : {0.0, 0.3, 1.0}) {
        EXPECT_EQ(local_lmf(x, 0.0, arrival, dep), 0.0);
    }
    const double h = 1e-6;
    const double slope = (local_lmf(0.5, h, arrival, dep) - local_lmf(0.5, -h, arrival, dep)) / (2 * h);
    EXPECT_NEAR(slope, lambda - mu, 1e-8);
    EXPECT_NEAR(local_lmf(0.5, 0.7, arrival, dep), poisson_lmf(0.7, lambda, mu), 1e-15);
}

TEST(Lmf, PositiveRootIsAlgebraic)
{
    for (auto [lambda, mu] : {std::pair{0.1875, 0.2729}, std::pair{1.0, 5.0}, std::pair{0.5, 0.51}}) {
        const double root = positive_root([&](double t) { return poisson_lmf(t, lambda, mu); });
        EXPECT_NEAR(root, std::log(mu / lambda), 1e-10);
        EXPECT_NEAR(poisson_lmf(std::log(mu / lambda), lambda, mu), 0.0, 1e-15);
    }
    const auto p = section5();
    for (double x : {0.05, 0.3, 1.0}) {
        const double mu = mu_p_hat(x, p);
        const double root = positive_root([&](double t) { return poisson_lmf(t, p.lambda(), mu); });
        EXPECT_NEAR(root, std::log(mu / p.lambda()), 1e-10);
    }
    EXPECT_THROW(positive_root([](double t) { return poisson_lmf(t, 2.0, 1.0); }), DomainError);
}

TEST(RateIntegral, ConstantAndBaseline)
{
    EXPECT_NEAR(rate_integral([](double) { return 0.42; }), 0.42, 1e-12);
    const auto p = section5();
    const double mu = mu_baseline(p, BaselineForm::exact);
    const double via_roots =
        rate_integral([&](double) { return positive_root([&](double t) { return poisson_lmf(t, p.lambda(), mu); }); });
    EXPECT_NEAR(via_roots, i_baseline(p), 1e-9);
}

TEST(RateIntegral, ReportsFailingPoint)
{
    try {
        rate_integral([](double x) {
            if (x > 0.5) {
                throw DomainError("no root");
            }
            return 1.0;
        });
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("x = "), std::string::npos);
    }
}

TEST(Baseline, ExactMatchesOrderStatisticOracle)
{
    for (int k : {10, 40, 100, 1000, 10000}) {
        const auto p = section5(k);
        EXPECT_NEAR(mu_baseline(p, BaselineForm::exact), oracle_mu_b(p), 1e-9 * oracle_mu_b(p)) << k;
    }
}

TEST(Baseline, FrozenRates)
{
    const std::vector<std::pair<int, double>> expected{
        {10, 0.0760598651}, {40, 0.382517611}, {100, 0.5385}, {1000, 0.8286}, {10000, 1.0258}};
    for (auto [k, v] : expected) {
        EXPECT_NEAR(i_baseline(section5(k)), v, 1e-4) << k;
    }
}

TEST(Baseline, AsymptoticFormConvergesToExact)
{
    // one beam: the asymptotic service rate is within 10% at K = 1e4
    auto p = section5(10000);
    p.tx_antennas = 1;
    EXPECT_NEAR(mu_baseline(p, BaselineForm::asymptotic) / mu_baseline(p, BaselineForm::exact), 1.0, 0.1);
    // four beams: the relative gap closes as K grows
    double prev = std::numeric_limits<double>::infinity();
    for (int k : {10, 100, 1000, 10000}) {
        const auto q = section5(k);
        const double gap = mu_baseline(q, BaselineForm::asymptotic) / mu_baseline(q, BaselineForm::exact) - 1.0;
        EXPECT_LT(gap, prev);
        prev = gap;
    }
}

TEST(Baseline, DoublingLoadCostsLogTwo)
{
    auto p = section5(100);
    p.arrival_rate_total /= 2.0;
    const double a = i_baseline(p);
    const double a_asym = i_baseline(p, BaselineForm::asymptotic);
    p.arrival_rate_total *= 2.0;
    EXPECT_NEAR(a - i_baseline(p), std::log(2.0), 1e-12);
    EXPECT_NEAR(a_asym - i_baseline(p, BaselineForm::asymptotic), std::log(2.0), 1e-12);
}

TEST(Baseline, IncreasingInK)
{
    double prev = -std::numeric_limits<double>::infinity();
    for (int k : {10, 20, 40, 100, 300, 1000, 3000, 10000}) {
        const double v = i_baseline(section5(k));
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(Baseline, HypothesisViolationNamesRates)
{
    auto p = section5(40);
    p.arrival_rate_total = 20000.0;
    try {
        i_baseline(p);
        FAIL();
    } catch (const HypothesisError& e) {
        EXPECT_NE(std::string(e.what()).find("mu_b"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("lambda"), std::string::npos);
    }
}

TEST(R0, LimitsAndClosedForm)
{
    const auto p = section5();
    EXPECT_LT(r0(p, R0Limit::one), r0(p, R0Limit::infinity));
    EXPECT_NEAR(r0(p, R0Limit::infinity), 0.317998, 1e-6);
    EXPECT_NEAR(r0(p, R0Limit::one), 0.205139, 1e-6);

    auto one_beam = p;
    one_beam.tx_antennas = 1;
    EXPECT_NEAR(r0(one_beam, R0Limit::infinity), std::exp(0.1) * boost::math::expint(1, 0.1), 1e-10);

    auto quiet = p;
    quiet.power = 1e-4;
    EXPECT_LT(r0(quiet, R0Limit::infinity), 1e-3);
}

TEST(MuP, ClampedFeedbackGivesBaselineForm)
{
    auto p = section5(40);
    p.cost_weight = 1e-6;
    EXPECT_EQ(s_hat(1.0, p), 40.0);
    EXPECT_NEAR(mu_p_hat(1.0, p), mu_baseline(p, BaselineForm::asymptotic), 1e-14);
}

TEST(MuP, FloorNearZero)
{
    const auto p = section5();
    EXPECT_EQ(mu_p_tilde(1e-9, p), mu_p_floor(p));
    EXPECT_LT(mu_p_hat(1e-9, p), mu_p_floor(p));
    EXPECT_EQ(mu_p_tilde(0.5, p), mu_p_hat(0.5, p));
}

TEST(MuP, DecreasingBeyondPeak)
{
    const auto p = section5();
    double prev = std::numeric_limits<double>::infinity();
    for (double x = 0.15; x <= 1.0; x += 0.05) {
        const double v = mu_p_hat(x, p);
        EXPECT_LT(v, prev) << x;
        prev = v;
    }
    // and increasing before it
    EXPECT_LT(mu_p_hat(0.02, p), mu_p_hat(0.08, p));
}

TEST(Epsilon, CrossingMatchesOracle)
{
    for (int k : {10, 40, 1000}) {
        const auto p = section5(k);
        const double eps = epsilon(p);
        EXPECT_NEAR(eps, oracle_prop_lb(p).eps, 1e-10);
        EXPECT_NEAR(mu_p_hat(eps, p), mu_p_floor(p), 1e-9);
    }
    auto fixed = section5();
    fixed.epsilon = 0.05;
    EXPECT_EQ(epsilon(fixed), 0.05);
}

TEST(PropLowerBound, ClosedFormEqualsDirectIntegral)
{
    for (int k : {10, 40, 100, 1000, 10000}) {
        const auto p = section5(k);
        EXPECT_NEAR(i_prop_lb(p), i_prop_lb_direct(p), 1e-6) << k;
        EXPECT_NEAR(i_prop_lb(p), oracle_prop_lb(p).value, 1e-6) << k;
    }
}

TEST(PropLowerBound, FrozenValues)
{
    const std::vector<std::pair<int, double>> expected{
        {10, 2.58807}, {40, 3.95501}, {100, 4.85860}, {1000, 7.12936}, {10000, 9.40013}};
    for (auto [k, v] : expected) {
        EXPECT_NEAR(i_prop_lb(section5(k)), v, 1e-5) << k;
    }
}

TEST(PropLowerBound, CTermByTwoSchemes)
{
    const auto p = section5(1000);
    const double eps = epsilon(p);
    const double c = lambert_slope(p);
    auto f = [&](double x) {
        const double w = boost::math::lambert_w0(c * x);
        return std::log(p.rx_antennas * std::log(p.power * w)) - w;
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    const double a = ts.integrate(f, eps, 1.0);
    const double b = numerics::integrate(f, eps, 1.0).value;
    EXPECT_TRUE(std::isfinite(a));
    EXPECT_NEAR(a, b, 1e-6);
}

TEST(PropLowerBound, ScalesAsOneMinusEpsilonLogK)
{
    const double i2 = i_prop_lb(section5(100));
    const double i3 = i_prop_lb(section5(1000));
    const double i4 = i_prop_lb(section5(10000));
    for (auto [a, b, k] : {std::tuple{i2, i3, 1000}, std::tuple{i3, i4, 10000}}) {
        const double slope = (b - a) / std::log(10.0);
        const double target = 1.0 - epsilon(section5(k));
        EXPECT_NEAR(slope, target, 0.05 * target);
    }
}

TEST(PropLowerBound, BeatsBaselineAndGapGrows)
{
    double prev_gap = -std::numeric_limits<double>::infinity();
    for (int k : {40, 100, 1000, 10000}) {
        const auto p = section5(k);
        const double gap = i_prop_lb(p) - i_baseline(p);
        EXPECT_GT(gap, 0.0) << k;
        EXPECT_GT(gap, prev_gap) << k;
        prev_gap = gap;
    }
}

TEST(PropLowerBound, HypothesisViolation)
{
    auto p = section5(40);
    p.arrival_rate_total = 400000.0;
    EXPECT_THROW(i_prop_lb(p), HypothesisError);
}

TEST(P0T, TrivialCases)
{
    auto rng = substream(1, 9);
    const auto p = section5();
    EXPECT_EQ(p0T(1, p, 1000, rng), 1.0);
    auto zero_arrivals = ArrivalModel::poisson(0.0);
    EXPECT_EQ(p0T(2, zero_arrivals, 10000, rng, default_departure_sampler(p)), 0.0);
    EXPECT_THROW(p0T(2, p, 10, rng), InsufficientDataError);
    EXPECT_THROW(p0T(0, p, 1000, rng), ConfigError);
}

TEST(P0T, SkellamSymmetryWithoutDepartures)
{
    // Pr{A1 > A2} = (1 - Pr{A1 = A2}) / 2, Pr{A1 = A2} = sum_k (e^-1 / k!)^2
    double tie = 0.0;
    double term = std::exp(-1.0);
    for (int k = 0; k < 40; ++k) {
        tie += term * term;
        term /= (k + 1);
    }
    const double expected = (1.0 - tie) / 2.0;
    auto rng = substream(2, 9);
    const std::size_t n = 100000;
    const double got = p0T(2, ArrivalModel::poisson(1.0), n, rng, [](RandomStream&) { return 0.0; });
    EXPECT_NEAR(got, expected, 3.0 * std::sqrt(expected * (1 - expected) / n));
}

TEST(P0T, NonincreasingInT)
{
    // ten users keeps the probability measurable over a longer stretch of T
    const auto p = section5(10);
    const std::size_t n = 100000;
    double prev = 1.0;
    for (int t = 2; t <= 20; ++t) {
        auto rng = substream(3, static_cast<std::uint64_t>(t));
        const double v = p0T(t, p, n, rng);
        const double se = std::sqrt(std::max(prev * (1 - prev), v * (1 - v)) / n);
        EXPECT_LE(v, prev + 3.0 * std::sqrt(2.0) * se) << t;
        prev = v;
    }
}

TEST(StaleFeedback, LimitsOfTheCorrection)
{
    for (double d : {-0.5, 0.0, 0.3, 5.0, 80.0}) {
        EXPECT_EQ(stale_log_factor(d, 1.0), 0.0);
        EXPECT_EQ(stale_log_factor(d, 0.0), -std::numeric_limits<double>::infinity());
        EXPECT_LT(stale_log_factor(d, 0.5), 0.0);
    }
    // delta -> 0 limit is log P0
    EXPECT_NEAR(stale_log_factor(1e-9, 0.3), std::log(0.3), 1e-8);
    EXPECT_THROW(stale_log_factor(1.0, 1.5), DomainError);
}

TEST(StaleFeedback, BoundDecreasesWithT)
{
    const auto p = section5();
    EXPECT_EQ(i_prop_T(p, 1.0), i_prop_lb(p));
    EXPECT_EQ(i_prop_T(p, 0.0), -std::numeric_limits<double>::infinity());
    auto rng = substream(4, 9);
    EXPECT_EQ(i_prop_T(p, 1, 1000, rng), i_prop_lb(p));

    double prev = std::numeric_limits<double>::infinity();
    for (int t : {1, 5, 10}) {
        auto r = substream(5, 9);
        const double v = i_prop_T(p, t, 100000, r);
        EXPECT_LE(v, prev) << t;
        prev = v;
    }
    // decreasing in P0 for a fixed parameter set
    EXPECT_GT(i_prop_T(p, 0.9), i_prop_T(p, 0.5));
}

TEST(RateParams, Validation)
{
    auto p = section5();
    p.cost_weight = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = section5();
    p.epsilon = 1.5;
    EXPECT_THROW(p.validate(), ConfigError);
    EXPECT_NEAR(section5().kappa(), 10e6 * 1e-3 / (8000 * std::log(2.0)), 1e-15);
    EXPECT_NEAR(section5(40).lambda(), 0.1875, 1e-15);
}
