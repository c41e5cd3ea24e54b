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

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mumimo/common.hpp"

namespace mumimo {

/// Per-user i.i.d. packet arrival law. `rate` is the mean in packets/slot.
struct ArrivalModel {
    enum class Kind { poisson, bernoulli_batch, deterministic };

    Kind kind = Kind::poisson;
    double rate = 0.0;
    int batch_size = 1; // bernoulli_batch only: a batch arrives w.p. rate / batch_size

    static ArrivalModel poisson(double rate) { return ArrivalModel{Kind::poisson, rate, 1}; }
    static ArrivalModel deterministic(double rate) { return ArrivalModel{Kind::deterministic, rate, 1}; }
    static ArrivalModel bernoulli_batch(double rate, int batch_size)
    {
        return ArrivalModel{Kind::bernoulli_batch, rate, batch_size};
    }

    double batch_probability() const { return rate / batch_size; }

    void validate() const
    {
        if (!(rate >= 0.0) || !std::isfinite(rate)) {
            throw ConfigError("arrivals: rate must be finite and >= 0");
        }
        switch (kind) {
        case Kind::poisson:
            break;
        case Kind::deterministic:
            if (rate != std::floor(rate)) {
                throw ConfigError("arrivals: deterministic rate must be a whole number of packets per slot");
            }
            break;
        case Kind::bernoulli_batch:
            if (batch_size < 1 || batch_probability() > 1.0) {
                throw ConfigError("arrivals: bernoulli-batch needs batch >= 1 and rate <= batch");
            }
            break;
        }
    }
};

inline std::string to_string(ArrivalModel::Kind kind)
{
    switch (kind) {
    case ArrivalModel::Kind::poisson:
        return "poisson";
    case ArrivalModel::Kind::bernoulli_batch:
        return "bernoulli_batch";
    case ArrivalModel::Kind::deterministic:
        return "deterministic";
    }
    return "?";
}

inline std::int64_t draw_arrival(const ArrivalModel& model, RandomStream& rng)
{
    switch (model.kind) {
    case ArrivalModel::Kind::poisson: {
        if (model.rate == 0.0) {
            return 0;
        }
        std::poisson_distribution<std::int64_t> dist(model.rate);
        return dist(rng);
    }
    case ArrivalModel::Kind::deterministic:
        return static_cast<std::int64_t>(model.rate);
    case ArrivalModel::Kind::bernoulli_batch: {
        std::bernoulli_distribution coin(model.batch_probability());
        return coin(rng) ? model.batch_size : 0;
    }
    }
    return 0;
}

/// One slot of arrivals for K users.
inline std::vector<std::int64_t> draw_arrivals(const ArrivalModel& model, int users, RandomStream& rng)
{
    model.validate();
    std::vector<std::int64_t> out(static_cast<std::size_t>(users));
    for (auto& a : out) {
        a = draw_arrival(model, rng);
    }
    return out;
}

/// log E[e^{theta A}].
inline double arrival_lmf(const ArrivalModel& model, double theta)
{
    switch (model.kind) {
    case ArrivalModel::Kind::poisson:
        return model.rate * std::expm1(theta);
    case ArrivalModel::Kind::deterministic:
        return model.rate * theta;
    case ArrivalModel::Kind::bernoulli_batch: {
        const double p = model.batch_probability();
        return std::log1p(p * std::expm1(theta * model.batch_size));
    }
    }
    return std::numeric_limits<double>::infinity();
}

} // namespace mumimo
