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

// Two-timescale queue-aware scheduling: Stage I picks how many users may feed
// back and which ones (the longest queues), Stage II assigns each beam to the
// feedback user with the largest queue-weighted rate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mumimo/channel.hpp"
#include "mumimo/common.hpp"
#include "mumimo/numerics/quadrature.hpp"
#include "mumimo/numerics/special.hpp"

namespace mumimo {

/// Maps a beam SINR to delivered bits in one slot: BW * tau * log2(1 + gamma).
struct RateMap {
    double bandwidth_hz = 10e6;
    double slot_seconds = 1e-3;

    double bits(double gamma) const { return bandwidth_hz * slot_seconds * std::log2(1.0 + gamma); }
};

/// Backlog of every user in packets; entries are never negative.
class QueueVector {
public:
    QueueVector() = default;
    explicit QueueVector(std::size_t users) : q_(users, 0.0) {}
    explicit QueueVector(std::vector<double> q) : q_(std::move(q))
    {
        for (double v : q_) {
            if (!(v >= 0.0)) {
                throw DomainError("QueueVector: queue lengths must be >= 0");
            }
        }
    }

    std::size_t size() const noexcept { return q_.size(); }
    double operator[](std::size_t k) const { return q_[k]; }
    std::span<const double> values() const noexcept { return q_; }

    double max() const { return q_.empty() ? 0.0 : *std::max_element(q_.begin(), q_.end()); }

    /// Index of the longest queue, lowest index on ties.
    int argmax() const
    {
        return q_.empty() ? -1 : static_cast<int>(std::max_element(q_.begin(), q_.end()) - q_.begin());
    }

private:
    std::vector<double> q_;
};

/// Q <- max(0, Q - D) + A. Works for real-valued and fixed-point backlogs.
template <class T>
constexpr T queue_update(T queue, T departure, T arrival)
{
    return std::max(queue - departure, T{0}) + arrival;
}

inline QueueVector queue_update(const QueueVector& queues, std::span<const double> departures,
                                std::span<const double> arrivals)
{
    if (departures.size() != queues.size() || arrivals.size() != queues.size()) {
        throw ConfigError("queue_update: size mismatch");
    }
    std::vector<double> next(queues.size());
    for (std::size_t k = 0; k < next.size(); ++k) {
        if (departures[k] < 0.0 || arrivals[k] < 0.0) {
            throw DomainError("queue_update: departures and arrivals must be >= 0");
        }
        next[k] = queue_update(queues[k], departures[k], arrivals[k]);
    }
    return QueueVector(std::move(next));
}

/// Users sorted by descending queue, ties to the lower index.
inline std::vector<int> queue_order(std::span<const double> queues)
{
    std::vector<int> order(queues.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return queues[a] > queues[b]; });
    return order;
}

/// Heavy-traffic per-user rate (nats per channel use) when S users feed back:
///   M * int_0^inf ln(1+x) N f(x) F(x)^{NS-1} dx
/// which equals (M/S) E[ln(1 + max of NS i.i.d. SINR draws)].
inline double eta_hat(double s, int m, int n, double power)
{
    if (!(s > 0.0)) {
        throw DomainError("eta_hat: S must be positive");
    }
    if (m < 1 || n < 1 || !(power > 0.0)) {
        throw DomainError("eta_hat: need M, N >= 1 and P > 0");
    }
    const double exponent = n * s - 1.0;
    auto integrand = [&](double x) {
        if (x <= 0.0) {
            return 0.0;
        }
        const double power_term = exponent == 0.0 ? 1.0 : std::exp(exponent * sinr_log_cdf(x, m, power));
        return std::log1p(x) * n * sinr_pdf(x, m, power) * power_term;
    };
    numerics::QuadratureOptions opts;
    opts.abs_tol = 1e-14;
    opts.rel_tol = 1e-12;
    const auto r = numerics::integrate_to_infinity(integrand, 0.0, opts, 1e-12, power / 64.0);
    return m * r.value;
}

/// eta_hat memoized over integer S for one (M, N, P). One table per run;
/// not synchronized.
class EtaTable {
public:
    EtaTable(int m, int n, double power) : m_(m), n_(n), power_(power)
    {
        if (m < 1 || n < 1 || !(power > 0.0)) {
            throw ConfigError("EtaTable: need M, N >= 1 and P > 0");
        }
    }

    int tx_antennas() const noexcept { return m_; }
    int rx_antennas() const noexcept { return n_; }
    double power() const noexcept { return power_; }

    double operator()(int s)
    {
        if (s < 1) {
            throw DomainError("EtaTable: S must be >= 1");
        }
        if (static_cast<std::size_t>(s) >= cache_.size()) {
            cache_.resize(static_cast<std::size_t>(s) + 1, std::numeric_limits<double>::quiet_NaN());
        }
        double& slot = cache_[static_cast<std::size_t>(s)];
        if (std::isnan(slot)) {
            slot = eta_hat(s, m_, n_, power_);
        }
        return slot;
    }

private:
    int m_;
    int n_;
    double power_;
    std::vector<double> cache_;
};

/// Piecewise-linear heavy-traffic utility W(S) for S in [1, K]; `sorted_queues`
/// must be in descending order.
inline double w_hat(double s, std::span<const double> sorted_queues, EtaTable& eta)
{
    const auto users = static_cast<double>(sorted_queues.size());
    if (!(s >= 1.0 && s <= users)) {
        throw DomainError("w_hat: S must lie in [1, K]");
    }
    const int floor_s = static_cast<int>(std::floor(s));
    const double frac = s - floor_s;
    double head = 0.0;
    for (int k = 0; k < floor_s; ++k) {
        head += sorted_queues[k];
    }
    double value = head * eta(floor_s) * (1.0 - frac);
    if (frac > 0.0) {
        value += (head + sorted_queues[floor_s]) * eta(floor_s + 1) * frac;
    }
    return value;
}

/// Per-user feedback probabilities broadcast by Stage I.
struct FeedbackPolicy {
    std::vector<double> p;
    double target = 0.0; // S
    std::int64_t valid_from = 0;
    std::int64_t valid_until = 0; // exclusive
};

/// Optimal inner solution for a feedback budget S: probability one for the
/// floor(S) longest queues, S - floor(S) for the next one, zero elsewhere.
inline FeedbackPolicy top_queue_policy(std::span<const double> queues, double s)
{
    const auto users = static_cast<double>(queues.size());
    if (!(s >= 0.0 && s <= users)) {
        throw DomainError("top_queue_policy: S must lie in [0, K]");
    }
    FeedbackPolicy policy;
    policy.p.assign(queues.size(), 0.0);
    policy.target = s;
    const auto order = queue_order(queues);
    const int floor_s = static_cast<int>(std::floor(s));
    for (int k = 0; k < floor_s; ++k) {
        policy.p[order[k]] = 1.0;
    }
    if (floor_s < static_cast<int>(queues.size()) && s > floor_s) {
        policy.p[order[floor_s]] = s - floor_s;
    }
    return policy;
}

struct FfcaResult {
    int s_star = 1;
    FeedbackPolicy policy;
};

/// Heavy-traffic outer objective U(S) = W(S) - V S at integer S, with U(0) = 0.
class FeedbackObjective {
public:
    FeedbackObjective(std::span<const double> queues, double cost_weight, EtaTable& eta)
        : cost_weight_(cost_weight), eta_(eta)
    {
        const auto order = queue_order(queues);
        prefix_.assign(queues.size() + 1, 0.0);
        for (std::size_t k = 0; k < order.size(); ++k) {
            prefix_[k + 1] = prefix_[k] + queues[order[k]];
        }
    }

    int users() const noexcept { return static_cast<int>(prefix_.size()) - 1; }

    double operator()(int s) const
    {
        if (s == 0) {
            return 0.0;
        }
        return prefix_[static_cast<std::size_t>(s)] * eta_(s) - cost_weight_ * s;
    }

private:
    double cost_weight_;
    EtaTable& eta_;
    std::vector<double> prefix_;
};

/// Feedback filtering control: bisection for the integer maximizer S* of
/// U(S) over {1..K}, then the top-queue policy for S*.
inline FfcaResult ffca(std::span<const double> queues, double cost_weight, EtaTable& eta)
{
    const int users = static_cast<int>(queues.size());
    if (users < 1) {
        throw ConfigError("ffca: need at least one user");
    }
    if (!(cost_weight >= 0.0)) {
        throw ConfigError("ffca: V must be >= 0");
    }
    const FeedbackObjective utility(queues, cost_weight, eta);

    int s_min = 1;
    int s_max = users;
    int s = users / 2;
    while (s_max - s_min > 1) {
        if (utility(s) >= utility(s - 1)) {
            s_min = s;
        } else {
            s_max = s;
        }
        s = (s_min + s_max) / 2;
    }
    const int s_star = utility(s_max) >= utility(s_min) ? s_max : s_min;

    FfcaResult result;
    result.s_star = s_star;
    result.policy = top_queue_policy(queues, s_star);
    return result;
}

inline FfcaResult ffca(const QueueVector& queues, double cost_weight, EtaTable& eta)
{
    return ffca(queues.values(), cost_weight, eta);
}

/// min(e^{W(M N q_max / V)} / N, K); K when V = 0.
inline double s_star_upper_bound(double q_max, int m, int n, double cost_weight, int users)
{
    if (!(q_max >= 0.0)) {
        throw DomainError("s_star_upper_bound: q_max must be >= 0");
    }
    if (cost_weight == 0.0) {
        return users;
    }
    if (!(cost_weight > 0.0)) {
        throw DomainError("s_star_upper_bound: V must be >= 0");
    }
    const double c1 = m * n * q_max / cost_weight;
    return std::min(std::exp(numerics::lambert_w(c1)) / n, static_cast<double>(users));
}

/// Independent Bernoulli(p_k) draw per user; returns the feedback set in
/// ascending user order.
inline std::vector<int> draw_feedback_set(const FeedbackPolicy& policy, RandomStream& rng)
{
    std::vector<int> set;
    for (std::size_t k = 0; k < policy.p.size(); ++k) {
        const double p = policy.p[k];
        if (p >= 1.0) {
            set.push_back(static_cast<int>(k));
        } else if (p > 0.0) {
            std::bernoulli_distribution coin(p);
            if (coin(rng)) {
                set.push_back(static_cast<int>(k));
            }
        }
    }
    return set;
}

/// Sum of p_k: expected number of users feeding back.
inline double feedback_cost(const FeedbackPolicy& policy)
{
    return std::accumulate(policy.p.begin(), policy.p.end(), 0.0);
}

/// Beam -> user map for one slot and the bits each user receives.
struct ScheduleAssignment {
    static constexpr int kIdle = -1;

    std::vector<int> beam_user;    // per beam, kIdle when unassigned
    std::vector<double> user_bits; // per user, bits delivered this slot

    int beams_won(int k) const
    {
        return static_cast<int>(std::count(beam_user.begin(), beam_user.end(), k));
    }
};

/// Assigns each beam to the candidate maximizing score(k, gamma_k^i) among
/// candidates with gamma_k^i > 0 and a positive score. Candidates are scanned
/// in ascending order and only a strictly larger score displaces the holder,
/// so ties go to the lowest user index. A user may win several beams.
template <class Score>
ScheduleAssignment assign_beams(const SinrReport& report, std::span<const int> candidates, const RateMap& rate,
                                Score&& score)
{
    const int m = report.beams();
    ScheduleAssignment out;
    out.beam_user.assign(static_cast<std::size_t>(m), ScheduleAssignment::kIdle);
    out.user_bits.assign(static_cast<std::size_t>(report.users()), 0.0);

    std::vector<int> sorted(candidates.begin(), candidates.end());
    if (!std::is_sorted(sorted.begin(), sorted.end())) {
        std::sort(sorted.begin(), sorted.end());
    }

    std::vector<double> best_score(static_cast<std::size_t>(m), 0.0);
    std::vector<double> best_gamma(static_cast<std::size_t>(m), 0.0);
    std::vector<double> gamma(static_cast<std::size_t>(m));
    for (int k : sorted) {
        std::fill(gamma.begin(), gamma.end(), 0.0);
        for (int n = 0; n < report.rx_antennas(); ++n) {
            const auto& e = report.at(k, n);
            gamma[e.best_beam] = std::max(gamma[e.best_beam], e.sinr);
        }
        for (int i = 0; i < m; ++i) {
            if (gamma[i] <= 0.0) {
                continue;
            }
            const double w = score(k, gamma[i]);
            if (w > best_score[i]) {
                best_score[i] = w;
                best_gamma[i] = gamma[i];
                out.beam_user[i] = k;
            }
        }
    }
    for (int i = 0; i < m; ++i) {
        if (out.beam_user[i] != ScheduleAssignment::kIdle) {
            out.user_bits[out.beam_user[i]] += rate.bits(best_gamma[i]);
        }
    }
    return out;
}

/// Stage II: per beam, the feedback user maximizing Q_k ln(1 + gamma_k^i).
/// Beams with no positive weight stay idle.
inline ScheduleAssignment stage2_schedule(const SinrReport& report, std::span<const int> feedback_set,
                                          std::span<const double> queues, const RateMap& rate)
{
    return assign_beams(report, feedback_set, rate,
                        [&](int k, double gamma) { return queues[k] * std::log1p(gamma); });
}

inline ScheduleAssignment stage2_schedule(const SinrReport& report, std::span<const int> feedback_set,
                                          const QueueVector& queues, const RateMap& rate)
{
    return stage2_schedule(report, feedback_set, queues.values(), rate);
}

} // namespace mumimo
