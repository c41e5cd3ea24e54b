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

// Slot-level simulator for the downlink: channel and arrival draws, periodic
// feedback-policy refresh, per-slot scheduling, queue evolution and metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mumimo/baselines.hpp"
#include "mumimo/channel.hpp"
#include "mumimo/common.hpp"
#include "mumimo/numerics/stats.hpp"
#include "mumimo/scheduler.hpp"
#include "mumimo/traffic.hpp"

namespace mumimo {

enum class SchedulerKind { proposed, csio, csio_lf, pfs, mwq };

inline std::string to_string(SchedulerKind kind)
{
    switch (kind) {
    case SchedulerKind::proposed:
        return "proposed";
    case SchedulerKind::csio:
        return "csio";
    case SchedulerKind::csio_lf:
        return "csio_lf";
    case SchedulerKind::pfs:
        return "pfs";
    case SchedulerKind::mwq:
        return "mwq";
    }
    return "?";
}

inline SchedulerKind parse_scheduler(const std::string& name)
{
    for (auto kind : {SchedulerKind::proposed, SchedulerKind::csio, SchedulerKind::csio_lf, SchedulerKind::pfs,
                      SchedulerKind::mwq}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw ConfigError("unknown scheduler '" + name + "'");
}

/// fresh: new random beams every slot; fixed: one beam set for the whole run.
enum class BeamRefresh { fresh, fixed };

struct SimParams {
    int users = 40;      // K
    int tx_antennas = 4; // M
    int rx_antennas = 2; // N
    double power = 10.0; // linear SNR
    double arrival_rate_total = 7500.0; // packets/s over all users
    double packet_bits = 8000.0;
    double bandwidth_hz = 10e6;
    double slot_seconds = 1e-3;
    int refresh_period = 1;   // T, slots between feedback-policy updates
    double cost_weight = 0.01; // V
    std::int64_t total_slots = 100000;
    SchedulerKind scheduler = SchedulerKind::proposed;
    double lf_threshold = 1.2589254117941673; // 1 dB
    double pfs_window = 100.0;                // slots
    ArrivalModel::Kind arrival_kind = ArrivalModel::Kind::poisson;
    int batch_size = 1;
    Correlation correlation = Correlation::iid;
    double ar1_coefficient = 0.9;
    BeamRefresh beams = BeamRefresh::fresh;
    std::uint64_t seed = 1;
    std::int64_t warmup = -1; // negative: 10% of total_slots
    bool trace = false;

    /// Mean arrivals per user per slot.
    double per_user_rate() const { return arrival_rate_total * slot_seconds / users; }

    std::int64_t warmup_slots() const { return warmup >= 0 ? warmup : total_slots / 10; }

    ArrivalModel arrival_model() const { return ArrivalModel{arrival_kind, per_user_rate(), batch_size}; }

    ChannelConfig channel_config() const
    {
        ChannelConfig c;
        c.users = users;
        c.rx_antennas = rx_antennas;
        c.tx_antennas = tx_antennas;
        c.correlation = correlation;
        c.ar1_coefficient = ar1_coefficient;
        return c;
    }

    RateMap rate_map() const { return RateMap{bandwidth_hz, slot_seconds}; }

    void validate() const
    {
        if (users < 1 || tx_antennas < 1 || rx_antennas < 1) {
            throw ConfigError("users, tx_antennas and rx_antennas must be >= 1");
        }
        if (!(power > 0.0) || !(packet_bits > 0.0) || !(bandwidth_hz > 0.0) || !(slot_seconds > 0.0)) {
            throw ConfigError("power, packet_bits, bandwidth_hz and slot_seconds must be > 0");
        }
        if (!(arrival_rate_total >= 0.0)) {
            throw ConfigError("arrival_rate_total must be >= 0");
        }
        if (refresh_period < 1) {
            throw ConfigError("refresh_period must be >= 1");
        }
        if (!(cost_weight >= 0.0)) {
            throw ConfigError("cost_weight must be >= 0");
        }
        if (total_slots < 1 || warmup_slots() >= total_slots) {
            throw ConfigError("total_slots must exceed the warmup");
        }
        if (!(lf_threshold >= 0.0)) {
            throw ConfigError("lf_threshold must be >= 0");
        }
        if (!(pfs_window >= 1.0)) {
            throw ConfigError("pfs_window must be >= 1");
        }
        channel_config().validate();
        arrival_model().validate();
    }

    std::vector<std::string> warnings() const
    {
        std::vector<std::string> w;
        if (users < tx_antennas) {
            w.push_back("fewer users than beams: some beams will often stay idle");
        }
        return w;
    }
};

/// Fixed-point resolution of queue contents: quanta per packet.
inline constexpr std::int64_t kQuantaPerPacket = std::int64_t{1} << 20;

inline double quanta_to_packets(std::int64_t q) { return static_cast<double>(q) / kQuantaPerPacket; }

inline std::int64_t checked_add(std::int64_t a, std::int64_t b)
{
    std::int64_t out = 0;
    if (__builtin_add_overflow(a, b, &out)) {
        throw OverflowError("engine: 64-bit accumulator overflow");
    }
    return out;
}

struct UserMetrics {
    double mean_queue = 0.0;      // packets, post-warmup
    double mean_departures = 0.0; // packets/slot, post-warmup
    double mean_delay = std::numeric_limits<double>::quiet_NaN(); // slots, FIFO sojourn of departed packets

    // Exact totals in quanta.
    std::int64_t initial_queue = 0;
    std::int64_t arrivals = 0;
    std::int64_t departures = 0;
    std::int64_t final_queue = 0;

    /// Q / D over the measurement window.
    double little_delay() const { return mean_departures > 0.0 ? mean_queue / mean_departures : 0.0; }
};

struct MetricsTrace {
    SimParams params;
    std::int64_t window_start = 0; // first measured slot

    // One entry per measured slot; queues are sampled at the end of the slot.
    std::vector<double> q_max;
    std::vector<int> q_argmax;
    std::vector<int> feedback_users;

    // Only with params.trace: row-major [slot][user].
    std::vector<double> served_packets;
    std::vector<std::int64_t> arrivals;

    std::vector<UserMetrics> users;
    double mean_feedback = 0.0;    // mean |F(t)|
    double mean_policy_cost = 0.0; // mean sum of p_k, proposed only
    double mean_s_star = 0.0;      // proposed only
    double mean_reports = 0.0;     // mean (user, antenna) reports sent
    double throughput = 0.0;       // packets/slot delivered

    std::size_t slots() const { return q_max.size(); }

    bool conserved() const
    {
        for (const auto& u : users) {
            if (u.arrivals != u.departures + u.final_queue - u.initial_queue) {
                return false;
            }
        }
        return true;
    }

    double mean_q_max() const
    {
        double s = 0.0;
        for (double q : q_max) {
            s += q;
        }
        return q_max.empty() ? 0.0 : s / static_cast<double>(q_max.size());
    }
};

namespace detail {

enum StreamTag : std::uint64_t { channel_stream = 1, beam_stream = 2, arrival_stream = 3, feedback_stream = 4 };

// Per-user FIFO of (arrival slot, quanta) used to measure packet sojourn.
struct Fifo {
    std::deque<std::pair<std::int64_t, std::int64_t>> items;

    void push(std::int64_t slot, std::int64_t quanta)
    {
        if (quanta > 0) {
            items.emplace_back(slot, quanta);
        }
    }

    // Removes `quanta` from the head; returns sum of quanta * sojourn.
    double pop(std::int64_t slot, std::int64_t quanta)
    {
        double delay = 0.0;
        while (quanta > 0 && !items.empty()) {
            auto& head = items.front();
            const std::int64_t take = std::min(quanta, head.second);
            delay += static_cast<double>(take) * static_cast<double>(slot - head.first);
            head.second -= take;
            quanta -= take;
            if (head.second == 0) {
                items.pop_front();
            }
        }
        return delay;
    }
};

} // namespace detail

/// Runs one simulation. Deterministic in params (including the seed); every
/// scheduler sees the same channel, beam and arrival sample paths.
inline MetricsTrace run(const SimParams& params)
{
    params.validate();
    const int k_users = params.users;
    const int m = params.tx_antennas;
    const auto channel_cfg = params.channel_config();
    const auto arrivals_model = params.arrival_model();
    const auto rate = params.rate_map();
    const std::int64_t warmup = params.warmup_slots();

    auto channel_rng = substream(params.seed, detail::channel_stream);
    auto beam_rng = substream(params.seed, detail::beam_stream);
    auto arrival_rng = substream(params.seed, detail::arrival_stream);
    auto feedback_rng = substream(params.seed, detail::feedback_stream);

    std::optional<EtaTable> eta;
    if (params.scheduler == SchedulerKind::proposed) {
        eta.emplace(m, params.rx_antennas, params.power);
    }
    PfsState pfs;
    if (params.scheduler == SchedulerKind::pfs) {
        pfs = PfsState(k_users, params.pfs_window);
    }

    MetricsTrace out;
    out.params = params;
    out.window_start = warmup;
    const auto measured = static_cast<std::size_t>(params.total_slots - warmup);
    out.q_max.reserve(measured);
    out.q_argmax.reserve(measured);
    out.feedback_users.reserve(measured);
    if (params.trace) {
        out.served_packets.reserve(measured * static_cast<std::size_t>(k_users));
        out.arrivals.reserve(measured * static_cast<std::size_t>(k_users));
    }
    out.users.assign(static_cast<std::size_t>(k_users), UserMetrics{});

    std::vector<std::int64_t> queue(static_cast<std::size_t>(k_users), 0);
    std::vector<double> queue_packets(static_cast<std::size_t>(k_users), 0.0);
    std::vector<detail::Fifo> fifo(static_cast<std::size_t>(k_users));
    std::vector<double> queue_sum(static_cast<std::size_t>(k_users), 0.0);
    std::vector<std::int64_t> window_departures(static_cast<std::size_t>(k_users), 0);
    std::vector<double> delay_sum(static_cast<std::size_t>(k_users), 0.0);
    std::vector<std::int64_t> delay_quanta(static_cast<std::size_t>(k_users), 0);
    double feedback_sum = 0.0;
    double policy_sum = 0.0;
    double s_star_sum = 0.0;
    double report_sum = 0.0;
    std::int64_t delivered_window = 0;

    FeedbackPolicy policy;
    int s_star = 0;
    std::optional<ChannelRealization> channel;
    std::optional<BeamSet> beams;
    const std::vector<int> everyone = all_users(k_users);

    for (std::int64_t t = 0; t < params.total_slots; ++t) {
        const bool measuring = t >= warmup;

        if (params.scheduler == SchedulerKind::proposed && t % params.refresh_period == 0) {
            auto r = ffca(std::span<const double>(queue_packets), params.cost_weight, *eta);
            s_star = r.s_star;
            policy = std::move(r.policy);
            policy.valid_from = t;
            policy.valid_until = t + params.refresh_period;
        }

        channel = draw_channel(channel_cfg, channel ? &*channel : nullptr, channel_rng);
        if (!beams || params.beams == BeamRefresh::fresh) {
            beams = draw_beams(m, beam_rng);
        }
        const SinrReport report = build_sinr_report(*channel, *beams, params.power);

        ScheduleAssignment assignment;
        std::size_t feedback_count = 0;
        double reports = 0.0;
        switch (params.scheduler) {
        case SchedulerKind::proposed: {
            const auto set = draw_feedback_set(policy, feedback_rng);
            feedback_count = set.size();
            reports = static_cast<double>(set.size()) * params.rx_antennas;
            assignment = stage2_schedule(report, set, queue_packets, rate);
            break;
        }
        case SchedulerKind::csio:
            feedback_count = static_cast<std::size_t>(k_users);
            reports = static_cast<double>(k_users) * params.rx_antennas;
            assignment = csio_schedule(report, rate);
            break;
        case SchedulerKind::csio_lf:
            feedback_count = lf_feedback_users(report, params.lf_threshold).size();
            reports = lf_report_count(report, params.lf_threshold);
            assignment = csio_lf_schedule(report, params.lf_threshold, rate);
            break;
        case SchedulerKind::pfs: {
            feedback_count = static_cast<std::size_t>(k_users);
            reports = static_cast<double>(k_users) * params.rx_antennas;
            auto [a, next] = pfs_schedule(report, pfs, rate);
            assignment = std::move(a);
            pfs = std::move(next);
            break;
        }
        case SchedulerKind::mwq:
            feedback_count = static_cast<std::size_t>(k_users);
            reports = static_cast<double>(k_users) * params.rx_antennas;
            assignment = mwq_schedule(report, queue_packets, rate);
            break;
        }

        const auto arrival = draw_arrivals(arrivals_model, k_users, arrival_rng);

        double slot_max = -1.0;
        int slot_argmax = 0;
        for (int k = 0; k < k_users; ++k) {
            auto& u = out.users[static_cast<std::size_t>(k)];
            const double service_packets = assignment.user_bits[static_cast<std::size_t>(k)] / params.packet_bits;
            const auto service = static_cast<std::int64_t>(service_packets * static_cast<double>(kQuantaPerPacket));
            std::int64_t& q = queue[static_cast<std::size_t>(k)];
            const std::int64_t departed = std::min(q, service);
            const std::int64_t arrived = arrival[static_cast<std::size_t>(k)] * kQuantaPerPacket;

            const double delay = fifo[static_cast<std::size_t>(k)].pop(t, departed);
            fifo[static_cast<std::size_t>(k)].push(t, arrived);
            q = checked_add(queue_update(q, service, std::int64_t{0}), arrived);
            queue_packets[static_cast<std::size_t>(k)] = quanta_to_packets(q);

            u.arrivals = checked_add(u.arrivals, arrived);
            u.departures = checked_add(u.departures, departed);

            if (measuring) {
                queue_sum[static_cast<std::size_t>(k)] += queue_packets[static_cast<std::size_t>(k)];
                window_departures[static_cast<std::size_t>(k)] =
                    checked_add(window_departures[static_cast<std::size_t>(k)], departed);
                delay_sum[static_cast<std::size_t>(k)] += delay;
                delay_quanta[static_cast<std::size_t>(k)] =
                    checked_add(delay_quanta[static_cast<std::size_t>(k)], departed);
                delivered_window = checked_add(delivered_window, departed);
                if (queue_packets[static_cast<std::size_t>(k)] > slot_max) {
                    slot_max = queue_packets[static_cast<std::size_t>(k)];
                    slot_argmax = k;
                }
                if (params.trace) {
                    out.served_packets.push_back(quanta_to_packets(departed));
                    out.arrivals.push_back(arrival[static_cast<std::size_t>(k)]);
                }
            }
        }

        if (measuring) {
            out.q_max.push_back(slot_max);
            out.q_argmax.push_back(slot_argmax);
            out.feedback_users.push_back(static_cast<int>(feedback_count));
            feedback_sum += static_cast<double>(feedback_count);
            report_sum += reports;
            if (params.scheduler == SchedulerKind::proposed) {
                policy_sum += feedback_cost(policy);
                s_star_sum += s_star;
            }
        }
    }

    const double n = static_cast<double>(measured);
    for (int k = 0; k < k_users; ++k) {
        auto& u = out.users[static_cast<std::size_t>(k)];
        u.final_queue = queue[static_cast<std::size_t>(k)];
        u.mean_queue = queue_sum[static_cast<std::size_t>(k)] / n;
        u.mean_departures = quanta_to_packets(window_departures[static_cast<std::size_t>(k)]) / n;
        if (delay_quanta[static_cast<std::size_t>(k)] > 0) {
            u.mean_delay = delay_sum[static_cast<std::size_t>(k)] /
                           static_cast<double>(delay_quanta[static_cast<std::size_t>(k)]);
        }
    }
    out.mean_feedback = feedback_sum / n;
    out.mean_policy_cost = policy_sum / n;
    out.mean_s_star = s_star_sum / n;
    out.mean_reports = report_sum / n;
    out.throughput = quanta_to_packets(delivered_window) / n;
    return out;
}

/// Pr(Q_max > B) for each B, by exact counting over the measured slots.
inline std::vector<double> overflow_curve(std::span<const double> q_max, std::span<const double> b_grid)
{
    if (q_max.empty()) {
        throw InsufficientDataError("overflow_curve: empty trace");
    }
    std::vector<double> sorted(q_max.begin(), q_max.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(b_grid.size());
    for (double b : b_grid) {
        const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), b);
        out.push_back(static_cast<double>(above) / static_cast<double>(sorted.size()));
    }
    return out;
}

inline std::vector<double> overflow_curve(const MetricsTrace& trace, std::span<const double> b_grid)
{
    return overflow_curve(trace.q_max, b_grid);
}

/// Pr(Q_max > B) with a 95% batch-means interval.
inline numerics::Interval overflow_interval(std::span<const double> q_max, double b, std::size_t batches = 20)
{
    std::vector<double> indicator(q_max.size());
    for (std::size_t i = 0; i < q_max.size(); ++i) {
        indicator[i] = q_max[i] > b ? 1.0 : 0.0;
    }
    return numerics::batch_means_interval(std::span<const double>(indicator), batches);
}

struct DecayFit {
    double rate = 0.0; // slope of -log Pr against B
    double intercept = 0.0;
    double r_squared = 0.0;
    double rate_stderr = 0.0;
    std::size_t points = 0;
    double b_low = 0.0;
    double b_high = 0.0;
};

/// Least-squares slope of -log Pr(Q_max > B) on the points whose probability
/// lies in [band_low, band_high].
inline DecayFit empirical_decay_rate(std::span<const double> b_grid, std::span<const double> probability,
                                     double band_low = 1e-4, double band_high = 1e-1)
{
    if (b_grid.size() != probability.size()) {
        throw ConfigError("empirical_decay_rate: grid and curve differ in length");
    }
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < b_grid.size(); ++i) {
        if (probability[i] >= band_low && probability[i] <= band_high) {
            x.push_back(b_grid[i]);
            y.push_back(-std::log(probability[i]));
        }
    }
    if (x.size() < 4) {
        throw InsufficientDataError("empirical_decay_rate: fewer than 4 curve points in the tail band; run longer "
                                    "or refine the B grid");
    }
    const auto fit = numerics::fit_line(x, y);
    return DecayFit{fit.slope, fit.intercept, fit.r_squared, fit.slope_stderr, fit.points,
                    *std::min_element(x.begin(), x.end()), *std::max_element(x.begin(), x.end())};
}

/// Linear fit of Q_max against slot index over the second half of the trace.
inline numerics::LinearFit q_max_growth(std::span<const double> q_max)
{
    const std::size_t start = q_max.size() / 2;
    std::vector<double> x(q_max.size() - start);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = static_cast<double>(start + i);
    }
    return numerics::fit_line(x, q_max.subspan(start));
}

/// Mean of the last tenth of Q_max over the mean of the whole trace.
inline double last_decile_ratio(std::span<const double> q_max)
{
    if (q_max.size() < 10) {
        throw InsufficientDataError("last_decile_ratio: trace too short");
    }
    const std::size_t start = q_max.size() - q_max.size() / 10;
    double all = 0.0;
    double tail = 0.0;
    for (std::size_t i = 0; i < q_max.size(); ++i) {
        all += q_max[i];
        if (i >= start) {
            tail += q_max[i];
        }
    }
    all /= static_cast<double>(q_max.size());
    tail /= static_cast<double>(q_max.size() - start);
    return all > 0.0 ? tail / all : 1.0;
}

} // namespace mumimo
