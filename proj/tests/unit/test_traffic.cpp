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

#include <gtest/gtest.h>

#include "mumimo/traffic.hpp"

using namespace mumimo;

namespace {

struct Moments {
    double mean;
    double var;
};

Moments sample(const ArrivalModel& model, int n, std::uint64_t seed)
{
    auto rng = substream(seed, 3);
    double s = 0.0;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = static_cast<double>(draw_arrival(model, rng));
        s += a;
        s2 += a * a;
    }
    const double mean = s / n;
    return {mean, s2 / n - mean * mean};
}

} // namespace

TEST(Arrivals, PoissonMoments)
{
    const auto m = sample(ArrivalModel::poisson(0.1875), 400000, 1);
    EXPECT_NEAR(m.mean, 0.1875, 0.003);
    EXPECT_NEAR(m.var, 0.1875, 0.004);
}

TEST(Arrivals, DeterministicIsConstant)
{
    const auto m = sample(ArrivalModel::deterministic(3.0), 1000, 2);
    EXPECT_EQ(m.mean, 3.0);
    EXPECT_EQ(m.var, 0.0);
    EXPECT_THROW(ArrivalModel::deterministic(0.5).validate(), ConfigError);
}

TEST(Arrivals, BernoulliBatchMoments)
{
    const auto model = ArrivalModel::bernoulli_batch(0.5, 4);
    const auto m = sample(model, 400000, 3);
    EXPECT_NEAR(m.mean, 0.5, 0.01);
    const double p = 0.125;
    EXPECT_NEAR(m.var, 16.0 * p * (1.0 - p), 0.03);
    EXPECT_THROW(ArrivalModel::bernoulli_batch(5.0, 4).validate(), ConfigError);
    EXPECT_THROW(ArrivalModel::bernoulli_batch(0.5, 0).validate(), ConfigError);
}

TEST(Arrivals, RejectsNegativeRate)
{
    EXPECT_THROW(ArrivalModel::poisson(-1.0).validate(), ConfigError);
}

TEST(Arrivals, ZeroRateGivesNothing)
{
    auto rng = substream(1, 1);
    for (auto a : draw_arrivals(ArrivalModel::poisson(0.0), 50, rng)) {
        EXPECT_EQ(a, 0);
    }
}

TEST(ArrivalLmf, VanishesAtZeroAndSlopeIsMean)
{
    for (const auto& model :
         {ArrivalModel::poisson(0.7), ArrivalModel::deterministic(2.0), ArrivalModel::bernoulli_batch(0.3, 3)}) {
        EXPECT_NEAR(arrival_lmf(model, 0.0), 0.0, 1e-15);
        const double h = 1e-6;
        const double slope = (arrival_lmf(model, h) - arrival_lmf(model, -h)) / (2 * h);
        EXPECT_NEAR(slope, model.rate, 1e-8) << to_string(model.kind);
    }
}

TEST(ArrivalLmf, PoissonClosedForm)
{
    EXPECT_NEAR(arrival_lmf(ArrivalModel::poisson(2.0), 0.5), 2.0 * (std::exp(0.5) - 1.0), 1e-14);
}
