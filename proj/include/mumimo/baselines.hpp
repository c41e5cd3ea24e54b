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

// Reference schedulers: max-SINR (CSIO), thresholded max-SINR (CSIO-LF),
// proportional fair, and per-beam max-weight on queues (MWQ). All of them
// receive reports from every user; CSIO-LF drops reports below a threshold.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "mumimo/channel.hpp"
#include "mumimo/common.hpp"
#include "mumimo/scheduler.hpp"

namespace mumimo {

inline std::vector<int> all_users(int users)
{
    std::vector<int> v(static_cast<std::size_t>(users));
    std::iota(v.begin(), v.end(), 0);
    return v;
}

inline ScheduleAssignment csio_schedule(const SinrReport& report, const RateMap& rate)
{
    const auto users = all_users(report.users());
    return assign_beams(report, users, rate, [](int, double gamma) { return gamma; });
}

/// Copy of `report` with every entry below `threshold` zeroed, i.e. not sent.
inline SinrReport threshold_report(const SinrReport& report, double threshold)
{
    if (!(threshold >= 0.0)) {
        throw DomainError("threshold_report: threshold must be >= 0");
    }
    SinrReport out = report;
    for (int k = 0; k < out.users(); ++k) {
        for (int n = 0; n < out.rx_antennas(); ++n) {
            auto& e = out.at(k, n);
            if (!(e.sinr >= threshold)) {
                e.sinr = 0.0;
            }
        }
    }
    return out;
}

inline ScheduleAssignment csio_lf_schedule(const SinrReport& report, double threshold, const RateMap& rate)
{
    return csio_schedule(threshold_report(report, threshold), rate);
}

/// Users with at least one antenna report at or above the threshold.
inline std::vector<int> lf_feedback_users(const SinrReport& report, double threshold)
{
    std::vector<int> out;
    for (int k = 0; k < report.users(); ++k) {
        for (int n = 0; n < report.rx_antennas(); ++n) {
            if (report.at(k, n).sinr >= threshold) {
                out.push_back(k);
                break;
            }
        }
    }
    return out;
}

/// Number of (user, antenna) reports at or above the threshold.
inline int lf_report_count(const SinrReport& report, double threshold)
{
    int count = 0;
    for (int k = 0; k < report.users(); ++k) {
        for (int n = 0; n < report.rx_antennas(); ++n) {
            count += report.at(k, n).sinr >= threshold ? 1 : 0;
        }
    }
    return count;
}

/// EWMA of delivered bits per slot. A window of +inf freezes the averages.
struct PfsState {
    std::vector<double> avg_bits;
    double window = 100.0;
    double floor = 1e-6;

    PfsState() = default;
    PfsState(int users, double window_slots, double floor_bits = 1e-6)
        : avg_bits(static_cast<std::size_t>(users), floor_bits), window(window_slots), floor(floor_bits)
    {
        if (!(window_slots >= 1.0)) {
            throw ConfigError("PfsState: window must be >= 1 slot");
        }
        if (!(floor_bits > 0.0)) {
            throw ConfigError("PfsState: floor must be > 0");
        }
    }
};

inline std::pair<ScheduleAssignment, PfsState> pfs_schedule(const SinrReport& report, const PfsState& state,
                                                            const RateMap& rate)
{
    if (state.avg_bits.size() != static_cast<std::size_t>(report.users())) {
        throw ConfigError("pfs_schedule: state size does not match report");
    }
    const auto users = all_users(report.users());
    auto assignment = assign_beams(report, users, rate,
                                   [&](int k, double gamma) { return rate.bits(gamma) / state.avg_bits[k]; });
    PfsState next = state;
    if (std::isfinite(state.window)) {
        const double a = 1.0 / state.window;
        for (std::size_t k = 0; k < next.avg_bits.size(); ++k) {
            next.avg_bits[k] = std::max(next.floor, (1.0 - a) * state.avg_bits[k] + a * assignment.user_bits[k]);
        }
    }
    return {std::move(assignment), std::move(next)};
}

/// Per-beam argmax of Q_k ln(1 + gamma) over every user; zero queues never win.
inline ScheduleAssignment mwq_schedule(const SinrReport& report, std::span<const double> queues, const RateMap& rate)
{
    const auto users = all_users(report.users());
    return stage2_schedule(report, users, queues, rate);
}

inline ScheduleAssignment mwq_schedule(const SinrReport& report, const QueueVector& queues, const RateMap& rate)
{
    return mwq_schedule(report, queues.values(), rate);
}

} // namespace mumimo
