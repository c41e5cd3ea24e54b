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

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <vector>

#include <gtest/gtest.h>

#include "mumimo/channel.hpp"

using namespace mumimo;

namespace {

ChannelConfig config(int k, int n, int m)
{
    ChannelConfig c;
    c.users = k;
    c.rx_antennas = n;
    c.tx_antennas = m;
    return c;
}

double ks_distance(std::vector<double> samples, int m, double power)
{
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = sinr_cdf(samples[i], m, power);
        d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
    }
    return d;
}

} // namespace

TEST(Beams, AreOrthonormal)
{
    auto rng = substream(11, 0);
    for (int m : {1, 2, 4, 8}) {
        for (int rep = 0; rep < 20; ++rep) {
            const auto b = draw_beams(m, rng);
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < m; ++j) {
                    Complex dot = 0.0;
                    for (int a = 0; a < m; ++a) {
                        dot += std::conj(b.beam(i)[a]) * b.beam(j)[a];
                    }
                    EXPECT_NEAR(std::abs(dot - Complex(i == j ? 1.0 : 0.0)), 0.0, 1e-12);
                }
            }
        }
    }
}

TEST(Sinr, HandInstance)
{
    // Two beams along the coordinate axes; h = (2, 1).
    ChannelRealization h(1, 1, 2, 0);
    h.row(0, 0)[0] = 2.0;
    h.row(0, 0)[1] = 1.0;
    BeamSet beams(2);
    beams.beam(0)[0] = 1.0;
    beams.beam(1)[1] = 1.0;
    const double p = 10.0;
    EXPECT_NEAR(effective_sinr(h, beams, p, 0, 0, 0), 4.0 / (1.0 + 0.1), 1e-14);
    EXPECT_NEAR(effective_sinr(h, beams, p, 0, 0, 1), 1.0 / (4.0 + 0.1), 1e-14);

    const auto report = build_sinr_report(h, beams, p);
    EXPECT_EQ(report.at(0, 0).best_beam, 0);
    EXPECT_NEAR(report.gamma(0, 0), 4.0 / 1.1, 1e-14);
    EXPECT_EQ(report.gamma(0, 1), 0.0);
}

TEST(Sinr, SingleBeamIsScaledGain)
{
    auto rng = substream(3, 0);
    const auto h = draw_channel(config(1, 1, 1), nullptr, rng);
    const auto b = draw_beams(1, rng);
    EXPECT_NEAR(effective_sinr(h, b, 7.0, 0, 0, 0), 7.0 * std::norm(h.row(0, 0)[0]), 1e-12);
}

TEST(SinrReport, TiesGoToLowestBeam)
{
    SinrTable t(1, 1, 3);
    t(0, 0, 0) = 0.5;
    t(0, 0, 1) = 2.0;
    t(0, 0, 2) = 2.0;
    const auto r = build_sinr_report(t);
    EXPECT_EQ(r.at(0, 0).best_beam, 1);
    EXPECT_EQ(r.antennas_reporting(0, 1), std::vector<int>{0});
    EXPECT_TRUE(r.antennas_reporting(0, 2).empty());
}

TEST(SinrLaw, CdfPdfQuantileAreConsistent)
{
    for (int m : {1, 2, 4}) {
        for (double p : {1.0, 10.0, 100.0}) {
            EXPECT_EQ(sinr_cdf(0.0, m, p), 0.0);
            for (double x : {0.01, 0.3, 1.0, 4.0, 20.0}) {
                const double h = 1e-6 * std::max(1.0, x);
                const double fd = (sinr_cdf(x + h, m, p) - sinr_cdf(x - h, m, p)) / (2 * h);
                EXPECT_NEAR(sinr_pdf(x, m, p), fd, 1e-6 * std::max(1.0, fd));
                EXPECT_NEAR(std::exp(sinr_log_cdf(x, m, p)), sinr_cdf(x, m, p), 1e-14);
                const double u = sinr_cdf(x, m, p);
                EXPECT_NEAR(sinr_cdf(sinr_quantile(u, m, p), m, p), u, 1e-14);
            }
        }
    }
}

TEST(SinrLaw, OneDbTailValue)
{
    // 1 - F(10^0.1) at M = 4, P = 10
    EXPECT_NEAR(1.0 - sinr_cdf(std::pow(10.0, 0.1), 4, 10.0), 0.0764930, 5e-7);
}

TEST(SinrLaw, RejectsNegativeArguments)
{
    EXPECT_THROW(sinr_cdf(-1.0, 4, 10.0), DomainError);
    EXPECT_THROW(sinr_quantile(1.0, 4, 10.0), DomainError);
}

TEST(SinrLaw, SimulatedSinrMatchesClosedForm)
{
    // Smaller version of the acceptance check: KS distance of 1e5 beam SINRs.
    auto rng = substream(21, 0);
    const auto cfg = config(1, 2, 4);
    std::vector<double> s;
    while (s.size() < 100000) {
        const auto h = draw_channel(cfg, nullptr, rng);
        const auto b = draw_beams(4, rng);
        const auto t = compute_sinr_table(h, b, 10.0);
        for (int n = 0; n < 2; ++n) {
            for (int i = 0; i < 4; ++i) {
                s.push_back(t(0, n, i));
            }
        }
    }
    // beams of one antenna are dependent, so use one SINR per antenna per draw
    std::vector<double> thinned;
    for (std::size_t i = 0; i < s.size(); i += 4) {
        thinned.push_back(s[i]);
    }
    EXPECT_LT(ks_distance(thinned, 4, 10.0), 1.63 / std::sqrt(static_cast<double>(thinned.size())));
}

TEST(Channel, Ar1RequiresCoefficientInUnitInterval)
{
    auto c = config(2, 1, 2);
    c.correlation = Correlation::ar1;
    c.ar1_coefficient = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c.ar1_coefficient = -0.1;
    EXPECT_THROW(c.validate(), ConfigError);
    c.ar1_coefficient = 0.5;
    EXPECT_NO_THROW(c.validate());
}

TEST(Channel, Ar1KeepsUnitVarianceAndCorrelation)
{
    auto c = config(1, 1, 1);
    c.correlation = Correlation::ar1;
    c.ar1_coefficient = 0.8;
    auto rng = substream(8, 0);
    std::optional<ChannelRealization> prev;
    double power = 0.0;
    Complex lag = 0.0;
    const int n = 200000;
    for (int t = 0; t < n; ++t) {
        auto next = draw_channel(c, prev, rng);
        const Complex h = next.row(0, 0)[0];
        power += std::norm(h);
        if (prev) {
            lag += h * std::conj(prev->row(0, 0)[0]);
        }
        prev = std::move(next);
    }
    EXPECT_NEAR(power / n, 1.0, 0.02);
    EXPECT_NEAR(lag.real() / n, 0.8, 0.02);
    EXPECT_EQ(prev->slot_index(), n - 1);
}

TEST(Channel, SameSeedSameDraws)
{
    auto a = substream(99, 1);
    auto b = substream(99, 1);
    const auto ha = draw_channel(config(3, 2, 4), nullptr, a);
    const auto hb = draw_channel(config(3, 2, 4), nullptr, b);
    EXPECT_TRUE(std::equal(ha.gains().begin(), ha.gains().end(), hb.gains().begin()));
}

TEST(BeamDominance, NoAntennaWinsTwoBeamsAboveUnitSinr)
{
    auto rng = substream(4, 0);
    const auto cfg = config(10, 2, 4);
    std::vector<int> all(10);
    std::iota(all.begin(), all.end(), 0);
    int premises = 0;
    for (int rep = 0; rep < 5000; ++rep) {
        const auto t = compute_sinr_table(draw_channel(cfg, nullptr, rng), draw_beams(4, rng), 10.0);
        const auto check = check_beam_dominance(t, all);
        premises += check.premise_holds ? 1 : 0;
        EXPECT_FALSE(check.violation);
    }
    EXPECT_GT(premises, 1000);
}

TEST(BeamDominance, DetectsViolationBelowUnitSinrIsNotChecked)
{
    SinrTable t(1, 1, 2);
    t(0, 0, 0) = 0.5;
    t(0, 0, 1) = 0.5;
    const std::vector<int> set{0};
    const auto check = check_beam_dominance(t, set);
    EXPECT_FALSE(check.premise_holds);
    EXPECT_FALSE(check.violation);
}
