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

// Rayleigh channels, random orthonormal beams and the effective SINR they
// induce, plus the closed-form per-beam SINR law.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mumimo/common.hpp"

namespace mumimo {

enum class Correlation { iid, ar1 };

struct ChannelConfig {
    int users = 1;        // K
    int rx_antennas = 1;  // N
    int tx_antennas = 1;  // M, also the number of beams
    Correlation correlation = Correlation::iid;
    double ar1_coefficient = 0.0;

    void validate() const
    {
        if (users < 1 || rx_antennas < 1 || tx_antennas < 1) {
            throw ConfigError("channel: K, N and M must all be >= 1");
        }
        if (correlation == Correlation::ar1 && !(ar1_coefficient >= 0.0 && ar1_coefficient < 1.0)) {
            throw ConfigError("channel: AR(1) coefficient must lie in [0, 1), got " + std::to_string(ar1_coefficient));
        }
    }
};

/// Gains H_k for every user, laid out [k][n][m].
class ChannelRealization {
public:
    ChannelRealization() = default;
    ChannelRealization(int users, int rx, int tx, std::int64_t slot)
        : users_(users), rx_(rx), tx_(tx), slot_(slot),
          gains_(static_cast<std::size_t>(users) * rx * tx)
    {
    }

    int users() const noexcept { return users_; }
    int rx_antennas() const noexcept { return rx_; }
    int tx_antennas() const noexcept { return tx_; }
    std::int64_t slot_index() const noexcept { return slot_; }

    /// Row H_k^{(n)}, length M.
    std::span<const Complex> row(int k, int n) const
    {
        return {gains_.data() + offset(k, n), static_cast<std::size_t>(tx_)};
    }
    std::span<Complex> row(int k, int n) { return {gains_.data() + offset(k, n), static_cast<std::size_t>(tx_)}; }

    std::span<const Complex> gains() const noexcept { return gains_; }
    std::span<Complex> gains() noexcept { return gains_; }

private:
    std::size_t offset(int k, int n) const { return (static_cast<std::size_t>(k) * rx_ + n) * tx_; }

    int users_ = 0;
    int rx_ = 0;
    int tx_ = 0;
    std::int64_t slot_ = 0;
    std::vector<Complex> gains_;
};

/// M orthonormal beams in C^M, stored beam by beam.
class BeamSet {
public:
    BeamSet() = default;
    explicit BeamSet(int m) : m_(m), entries_(static_cast<std::size_t>(m) * m) {}

    int size() const noexcept { return m_; }
    std::span<const Complex> beam(int i) const { return {entries_.data() + static_cast<std::size_t>(i) * m_, static_cast<std::size_t>(m_)}; }
    std::span<Complex> beam(int i) { return {entries_.data() + static_cast<std::size_t>(i) * m_, static_cast<std::size_t>(m_)}; }

private:
    int m_ = 0;
    std::vector<Complex> entries_;
};

/// CN(0, 1): independent real and imaginary parts of variance 1/2.
inline Complex draw_cn01(RandomStream& rng)
{
    // A fresh distribution per draw: it generates values in pairs, so no
    // cached variate can leak from one stream into another.
    std::normal_distribution<double> normal(0.0, 0.70710678118654752440);
    const double re = normal(rng);
    const double im = normal(rng);
    return {re, im};
}

/// Fresh draw in iid mode; h(t) = a h(t-1) + sqrt(1 - a^2) w(t) in AR(1) mode
/// (a fresh draw when there is no previous realization).
inline ChannelRealization draw_channel(const ChannelConfig& config, const ChannelRealization* prev, RandomStream& rng)
{
    config.validate();
    const std::int64_t slot = prev ? prev->slot_index() + 1 : 0;
    ChannelRealization next(config.users, config.rx_antennas, config.tx_antennas, slot);
    auto out = next.gains();

    const bool correlated = config.correlation == Correlation::ar1 && prev != nullptr;
    if (!correlated) {
        for (auto& h : out) {
            h = draw_cn01(rng);
        }
        return next;
    }
    if (prev->users() != config.users || prev->rx_antennas() != config.rx_antennas ||
        prev->tx_antennas() != config.tx_antennas) {
        throw ConfigError("draw_channel: previous realization has different dimensions");
    }
    const double a = config.ar1_coefficient;
    const double innovation = std::sqrt(1.0 - a * a);
    auto before = prev->gains();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a * before[i] + innovation * draw_cn01(rng);
    }
    return next;
}

inline ChannelRealization draw_channel(const ChannelConfig& config, const std::optional<ChannelRealization>& prev,
                                       RandomStream& rng)
{
    return draw_channel(config, prev ? &*prev : nullptr, rng);
}

/// Isotropic orthonormal beams: modified Gram-Schmidt on the columns of an
/// M x M CN(0,1) matrix, then each beam rotated so its first nonzero entry is
/// real and positive.
inline BeamSet draw_beams(int m, RandomStream& rng)
{
    if (m < 1) {
        throw ConfigError("draw_beams: M must be >= 1");
    }
    BeamSet beams(m);
    for (int i = 0; i < m; ++i) {
        auto v = beams.beam(i);
        for (;;) {
            for (auto& x : v) {
                x = draw_cn01(rng);
            }
            for (int j = 0; j < i; ++j) {
                auto u = beams.beam(j);
                Complex proj{};
                for (int c = 0; c < m; ++c) {
                    proj += std::conj(u[c]) * v[c];
                }
                for (int c = 0; c < m; ++c) {
                    v[c] -= proj * u[c];
                }
            }
            double norm2 = 0.0;
            for (const auto& x : v) {
                norm2 += std::norm(x);
            }
            if (norm2 > 1e-20) { // degenerate draw has probability zero; redraw
                const double inv = 1.0 / std::sqrt(norm2);
                for (auto& x : v) {
                    x *= inv;
                }
                break;
            }
        }
        // Re-orthogonalize once; keeps the Gram identity at machine precision.
        for (int j = 0; j < i; ++j) {
            auto u = beams.beam(j);
            Complex proj{};
            for (int c = 0; c < m; ++c) {
                proj += std::conj(u[c]) * v[c];
            }
            for (int c = 0; c < m; ++c) {
                v[c] -= proj * u[c];
            }
        }
        double norm2 = 0.0;
        for (const auto& x : v) {
            norm2 += std::norm(x);
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& x : v) {
            x *= inv;
        }
        for (const auto& x : v) {
            if (std::abs(x) > 0.0) {
                const Complex phase = std::conj(x) / std::abs(x);
                for (auto& y : v) {
                    y *= phase;
                }
                break;
            }
        }
    }
    return beams;
}

namespace detail {

inline double projection_power(std::span<const Complex> row, std::span<const Complex> beam)
{
    Complex s{};
    for (std::size_t c = 0; c < row.size(); ++c) {
        s += row[c] * beam[c];
    }
    return std::norm(s);
}

} // namespace detail

/// |H_k^{(n)} phi_i|^2 / (sum_{j != i} |H_k^{(n)} phi_j|^2 + 1/P).
inline double effective_sinr(const ChannelRealization& channel, const BeamSet& beams, double power, int k, int n, int i)
{
    if (!(power > 0.0)) {
        throw DomainError("effective_sinr: transmit power must be positive");
    }
    const auto row = channel.row(k, n);
    double signal = 0.0;
    double interference = 0.0;
    for (int j = 0; j < beams.size(); ++j) {
        const double g = detail::projection_power(row, beams.beam(j));
        (j == i ? signal : interference) += g;
    }
    return signal / (interference + 1.0 / power);
}

/// SINR of every (user, antenna, beam), laid out [k][n][i].
class SinrTable {
public:
    SinrTable() = default;
    SinrTable(int users, int rx, int beams)
        : users_(users), rx_(rx), beams_(beams), values_(static_cast<std::size_t>(users) * rx * beams)
    {
    }

    int users() const noexcept { return users_; }
    int rx_antennas() const noexcept { return rx_; }
    int beams() const noexcept { return beams_; }

    double operator()(int k, int n, int i) const { return values_[index(k, n, i)]; }
    double& operator()(int k, int n, int i) { return values_[index(k, n, i)]; }

private:
    std::size_t index(int k, int n, int i) const { return (static_cast<std::size_t>(k) * rx_ + n) * beams_ + i; }

    int users_ = 0;
    int rx_ = 0;
    int beams_ = 0;
    std::vector<double> values_;
};

inline SinrTable compute_sinr_table(const ChannelRealization& channel, const BeamSet& beams, double power)
{
    if (!(power > 0.0)) {
        throw DomainError("compute_sinr_table: transmit power must be positive");
    }
    const int m = beams.size();
    SinrTable table(channel.users(), channel.rx_antennas(), m);
    std::vector<double> g(static_cast<std::size_t>(m));
    const double noise = 1.0 / power;
    for (int k = 0; k < channel.users(); ++k) {
        for (int n = 0; n < channel.rx_antennas(); ++n) {
            const auto row = channel.row(k, n);
            double total = 0.0;
            for (int i = 0; i < m; ++i) {
                g[i] = detail::projection_power(row, beams.beam(i));
                total += g[i];
            }
            for (int i = 0; i < m; ++i) {
                double interference = 0.0;
                for (int j = 0; j < m; ++j) {
                    if (j != i) {
                        interference += g[j];
                    }
                }
                table(k, n, i) = g[i] / (interference + noise);
            }
        }
    }
    return table;
}

/// Per (user, antenna): the strongest beam and its SINR. Beam indices are
/// zero-based.
class SinrReport {
public:
    struct Entry {
        int best_beam = 0;
        double sinr = 0.0;
    };

    SinrReport() = default;
    SinrReport(int users, int rx, int beams)
        : users_(users), rx_(rx), beams_(beams), entries_(static_cast<std::size_t>(users) * rx)
    {
    }

    int users() const noexcept { return users_; }
    int rx_antennas() const noexcept { return rx_; }
    int beams() const noexcept { return beams_; }

    const Entry& at(int k, int n) const { return entries_[static_cast<std::size_t>(k) * rx_ + n]; }
    Entry& at(int k, int n) { return entries_[static_cast<std::size_t>(k) * rx_ + n]; }

    /// gamma_k^i: best SINR user k reported for beam i, 0 when no antenna of
    /// k selected beam i.
    double gamma(int k, int i) const
    {
        double best = 0.0;
        for (int n = 0; n < rx_; ++n) {
            const auto& e = at(k, n);
            if (e.best_beam == i) {
                best = std::max(best, e.sinr);
            }
        }
        return best;
    }

    /// N(k, i): antennas of user k whose strongest beam is i.
    std::vector<int> antennas_reporting(int k, int i) const
    {
        std::vector<int> out;
        for (int n = 0; n < rx_; ++n) {
            if (at(k, n).best_beam == i) {
                out.push_back(n);
            }
        }
        return out;
    }

private:
    int users_ = 0;
    int rx_ = 0;
    int beams_ = 0;
    std::vector<Entry> entries_;
};

/// Strongest beam per (user, antenna); ties go to the lowest beam index.
inline SinrReport build_sinr_report(const SinrTable& table)
{
    SinrReport report(table.users(), table.rx_antennas(), table.beams());
    for (int k = 0; k < table.users(); ++k) {
        for (int n = 0; n < table.rx_antennas(); ++n) {
            int best = 0;
            double value = table(k, n, 0);
            for (int i = 1; i < table.beams(); ++i) {
                if (table(k, n, i) > value) {
                    value = table(k, n, i);
                    best = i;
                }
            }
            report.at(k, n) = {best, value};
        }
    }
    return report;
}

inline SinrReport build_sinr_report(const ChannelRealization& channel, const BeamSet& beams, double power)
{
    return build_sinr_report(compute_sinr_table(channel, beams, power));
}

/// CDF of the per-beam effective SINR: 1 - e^{-x/P} / (1+x)^{M-1}.
inline double sinr_cdf(double x, int m, double power)
{
    if (!(x >= 0.0)) {
        throw DomainError("sinr_cdf: x must be >= 0");
    }
    if (m < 1 || !(power > 0.0)) {
        throw DomainError("sinr_cdf: need M >= 1 and P > 0");
    }
    // -expm1 keeps precision for small x
    const double log_tail = -x / power - (m - 1) * std::log1p(x);
    return -std::expm1(log_tail);
}

/// log F(x), accurate when F is close to 1.
inline double sinr_log_cdf(double x, int m, double power)
{
    if (!(x >= 0.0)) {
        throw DomainError("sinr_log_cdf: x must be >= 0");
    }
    const double log_tail = -x / power - (m - 1) * std::log1p(x);
    return log_tail < -0.7 ? std::log1p(-std::exp(log_tail)) : std::log(-std::expm1(log_tail));
}

/// Density matching sinr_cdf: e^{-x/P} (1+x)^{-M} ((1+x)/P + M - 1).
inline double sinr_pdf(double x, int m, double power)
{
    if (!(x >= 0.0)) {
        throw DomainError("sinr_pdf: x must be >= 0");
    }
    if (m < 1 || !(power > 0.0)) {
        throw DomainError("sinr_pdf: need M >= 1 and P > 0");
    }
    return std::exp(-x / power - m * std::log1p(x)) * ((1.0 + x) / power + (m - 1));
}

/// Inverse of sinr_cdf for u in [0, 1).
inline double sinr_quantile(double u, int m, double power)
{
    if (!(u >= 0.0 && u < 1.0)) {
        throw DomainError("sinr_quantile: u must lie in [0, 1)");
    }
    if (u == 0.0) {
        return 0.0;
    }
    // The tail satisfies -log(1-u) = x/P + (M-1) log(1+x), which is increasing
    // in x; solve it instead of F(x) = u to keep precision as u -> 1.
    const double target = -std::log1p(-u);
    auto g = [&](double x) { return x / power + (m - 1) * std::log1p(x) - target; };
    double hi = 1.0;
    while (g(hi) < 0.0) {
        hi *= 2.0;
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct DominanceCheck {
    bool premise_holds = false; // every beam's best SINR over the set is >= 1
    bool violation = false;     // some (user, antenna) holds the maximum on two beams
};

/// Diagnostic for the single-beam feedback property: when every beam's
/// maximum SINR over `feedback_set` is at least 1, no (user, antenna) may
/// attain the per-beam maximum on two different beams. `violation` is only
/// evaluated when the premise holds.
inline DominanceCheck check_beam_dominance(const SinrTable& table, std::span<const int> feedback_set)
{
    DominanceCheck check;
    if (feedback_set.empty()) {
        return check;
    }
    const int m = table.beams();
    std::vector<std::pair<int, int>> winner(static_cast<std::size_t>(m), {-1, -1});
    std::vector<double> best(static_cast<std::size_t>(m), -1.0);
    for (int i = 0; i < m; ++i) {
        for (int k : feedback_set) {
            for (int n = 0; n < table.rx_antennas(); ++n) {
                if (table(k, n, i) > best[i]) {
                    best[i] = table(k, n, i);
                    winner[i] = {k, n};
                }
            }
        }
    }
    check.premise_holds = std::all_of(best.begin(), best.end(), [](double b) { return b >= 1.0; });
    if (!check.premise_holds) {
        return check;
    }
    for (int i = 0; i < m && !check.violation; ++i) {
        for (int j = i + 1; j < m; ++j) {
            if (winner[i] == winner[j]) {
                check.violation = true;
                break;
            }
        }
    }
    return check;
}

} // namespace mumimo
