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

// Large-deviation decay rates of Pr(max_k Q_k > B) for the max-SINR baseline
// and the feedback-filtered scheduler, plus the building blocks (log moment
// generating functions, positive roots, rate integrals).
//
// Units: the theory is written in nats per channel use. kappa converts to
// packets per slot, kappa = BW * tau / (L ln 2), and every mu/lambda ratio is
// formed in packets per slot with lambda the per-user arrival rate.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mumimo/channel.hpp"
#include "mumimo/common.hpp"
#include "mumimo/numerics/quadrature.hpp"
#include "mumimo/numerics/special.hpp"
#include "mumimo/scheduler.hpp"
#include "mumimo/traffic.hpp"

namespace mumimo {

enum class R0Limit { one, infinity };

struct RateParams {
    int users = 40;
    int tx_antennas = 4;
    int rx_antennas = 2;
    double power = 10.0;
    double arrival_rate_total = 7500.0; // packets/s
    double packet_bits = 8000.0;
    double bandwidth_hz = 10e6;
    double slot_seconds = 1e-3;
    double cost_weight = 1.0; // V
    double buffer_scale = 1.0; // q_max = x * buffer_scale inside the feedback bound
    R0Limit r0_limit = R0Limit::infinity;
    std::optional<double> epsilon; // overrides the crossing-point construction

    /// Packets per slot delivered per nat of rate.
    double kappa() const { return bandwidth_hz * slot_seconds / (packet_bits * kLn2); }

    /// Per-user arrivals in packets per slot.
    double lambda() const { return arrival_rate_total * slot_seconds / users; }

    void validate() const
    {
        if (users < 1 || tx_antennas < 1 || rx_antennas < 1) {
            throw ConfigError("RateParams: K, M, N must be >= 1");
        }
        if (!(power > 0.0) || !(packet_bits > 0.0) || !(bandwidth_hz > 0.0) || !(slot_seconds > 0.0) ||
            !(arrival_rate_total > 0.0)) {
            throw ConfigError("RateParams: P, L, BW, tau and lambda_tot must be > 0");
        }
        if (!(cost_weight > 0.0) || !(buffer_scale > 0.0)) {
            throw ConfigError("RateParams: V and buffer_scale must be > 0");
        }
        if (epsilon && !(*epsilon > 0.0 && *epsilon < 1.0)) {
            throw ConfigError("RateParams: epsilon must lie in (0, 1)");
        }
    }
};

/// g(x, theta) = Lambda_A(theta) + Lambda_D(x, -theta), with
/// departure_lmf(x, s) = log E[e^{s D(x)}].
template <class DepartureLmf>
double local_lmf(double x, double theta, const ArrivalModel& arrival, DepartureLmf&& departure_lmf)
{
    return arrival_lmf(arrival, theta) + departure_lmf(x, -theta);
}

/// Poisson arrivals at rate lambda against Poisson service at rate mu.
inline double poisson_lmf(double theta, double lambda, double mu)
{
    return lambda * std::expm1(theta) + mu * std::expm1(-theta);
}

/// Positive root of a convex g with g(0) = 0 and g'(0) < 0.
template <class G>
double positive_root(G&& g)
{
    double lo = 1e-9;
    if (!(g(lo) < 0.0)) {
        throw DomainError("positive_root: drift is not negative, no positive root");
    }
    double hi = 1e-3;
    for (int i = 0; i < 200 && !(g(hi) > 0.0); ++i) {
        if (g(hi) < 0.0) {
            lo = hi;
        }
        hi *= 2.0;
    }
    if (!(g(hi) > 0.0)) {
        throw DomainError("positive_root: could not bracket the root");
    }
    return numerics::bisect(g, lo, hi, 1e-15);
}

/// I = int_0^1 theta*(x) dx. `breakpoints` are interior points where the
/// integrand has a kink.
template <class ThetaStar>
double rate_integral(ThetaStar&& theta_star, std::span<const double> breakpoints = {})
{
    double failing_x = std::numeric_limits<double>::quiet_NaN();
    auto f = [&](double x) {
        try {
            return theta_star(x);
        } catch (const DomainError&) {
            failing_x = x;
            throw;
        }
    };
    std::vector<double> pts{0.0};
    for (double b : breakpoints) {
        if (b > 0.0 && b < 1.0) {
            pts.push_back(b);
        }
    }
    pts.push_back(1.0);
    numerics::QuadratureOptions opts;
    opts.abs_tol = 1e-10;
    opts.rel_tol = 1e-10;
    try {
        const auto r = numerics::integrate(f, pts, opts);
        if (!r.converged || r.error > 1e-8) {
            throw DomainError("rate_integral: quadrature did not reach 1e-8");
        }
        return r.value;
    } catch (const DomainError& e) {
        if (std::isnan(failing_x)) {
            throw;
        }
        std::ostringstream msg;
        msg << "rate_integral: root finding failed at x = " << failing_x << " (" << e.what() << ")";
        throw DomainError(msg.str());
    }
}

enum class BaselineForm { exact, asymptotic };

/// Per-user service rate of max-SINR scheduling with every user reporting,
/// packets per slot.
inline double mu_baseline(const RateParams& p, BaselineForm form)
{
    if (form == BaselineForm::exact) {
        return p.kappa() * eta_hat(p.users, p.tx_antennas, p.rx_antennas, p.power);
    }
    const double inner = p.power * std::log(static_cast<double>(p.rx_antennas) * p.users);
    if (!(inner > 1.0)) {
        throw DomainError("mu_baseline: P log(NK) must exceed 1 for the asymptotic form");
    }
    return p.kappa() * p.tx_antennas * std::log(inner) / p.users;
}

inline double i_baseline(const RateParams& p, BaselineForm form = BaselineForm::exact)
{
    p.validate();
    const double mu = mu_baseline(p, form);
    const double lambda = p.lambda();
    if (!(mu > lambda)) {
        std::ostringstream msg;
        msg << "i_baseline: needs mu_b > lambda, got mu_b = " << mu << ", lambda = " << lambda << " packets/slot";
        throw HypothesisError(msg.str());
    }
    return std::log(mu / lambda);
}

/// E[log(1 + X)] over [0, 1] or [0, inf) for the per-beam SINR law.
inline double r0(const RateParams& p, R0Limit limit)
{
    auto f = [&](double x) { return std::log1p(x) * sinr_pdf(x, p.tx_antennas, p.power); };
    numerics::QuadratureOptions opts;
    opts.abs_tol = 1e-14;
    opts.rel_tol = 1e-12;
    if (limit == R0Limit::one) {
        return numerics::integrate(f, 0.0, 1.0, opts).value;
    }
    return numerics::integrate_to_infinity(f, 0.0, opts, 1e-14, p.power / 64.0).value;
}

inline double r0(const RateParams& p) { return r0(p, p.r0_limit); }

/// Feedback-bound argument c with W(c x) the Lambert variable at scaled queue x.
inline double lambert_slope(const RateParams& p)
{
    return p.tx_antennas * p.rx_antennas * p.buffer_scale / p.cost_weight;
}

/// Upper bound on the feedback amount when the longest queue is x * buffer_scale.
inline double s_hat(double x, const RateParams& p)
{
    return s_star_upper_bound(x * p.buffer_scale, p.tx_antennas, p.rx_antennas, p.cost_weight, p.users);
}

/// kappa M ln(P ln(N S)) / S at S = s_hat(x); -inf where P ln(N S) <= 0.
inline double mu_p_hat(double x, const RateParams& p)
{
    const double s = s_hat(x, p);
    const double inner = p.power * std::log(p.rx_antennas * s);
    if (!(inner > 0.0)) {
        return -std::numeric_limits<double>::infinity();
    }
    return p.kappa() * p.tx_antennas * std::log(inner) / s;
}

/// Floor of the augmented approximation: kappa M r0 / K.
inline double mu_p_floor(const RateParams& p) { return p.kappa() * p.tx_antennas * r0(p) / p.users; }

inline double mu_p_tilde(double x, const RateParams& p) { return std::max(mu_p_hat(x, p), mu_p_floor(p)); }

/// Crossing point of mu_p_hat with the floor on its increasing branch,
/// clamped to (0, 1]. Returns 1 when mu_p_hat never reaches the floor.
inline double epsilon(const RateParams& p)
{
    if (p.epsilon) {
        return *p.epsilon;
    }
    const double c = lambert_slope(p);
    // In the unclamped region mu_p_hat depends on x through w = W(c x) only,
    // ln(ln(P w)) - w is maximal where w ln(P w) = 1, and x = w e^w / c.
    const double w_peak = numerics::bisect([&](double w) { return w * std::log(p.power * w) - 1.0; },
                                           1.0 / p.power, 1.0 / p.power + 1e3);
    const double w_low = 1.0 / p.power;
    const double x_low = w_low * std::exp(w_low) / c;
    const double x_top = std::min(1.0, w_peak * std::exp(w_peak) / c);
    const double floor = mu_p_floor(p);
    if (x_low >= x_top || !(mu_p_hat(x_top, p) > floor)) {
        return 1.0;
    }
    return numerics::bisect([&](double x) { return mu_p_hat(x, p) - floor; }, x_low, x_top, 1e-15);
}

/// Throws unless lambda < mu_p_hat on the decreasing branch (its smallest
/// value there is at x = 1) and the crossing point lies inside (0, 1).
inline void check_prop_hypothesis(const RateParams& p, double eps)
{
    const double lambda = p.lambda();
    const double mu_one = mu_p_hat(1.0, p);
    if (!(mu_one > lambda)) {
        std::ostringstream msg;
        msg << "i_prop_lb: needs lambda < mu_p(x) on [eps, 1], got mu_p(1) = " << mu_one << ", lambda = " << lambda
            << " packets/slot";
        throw HypothesisError(msg.str());
    }
    if (!(eps < 1.0)) {
        throw HypothesisError("i_prop_lb: mu_p never reaches the r0 floor on [0, 1]");
    }
}

/// (1 - eps) log K + log(kappa M / (K lambda)) + eps log r0 + C,
/// C = int_eps^1 [log(N ln(P W(c x))) - W(c x)] dx.
inline double i_prop_lb(const RateParams& p)
{
    p.validate();
    const double eps = epsilon(p);
    check_prop_hypothesis(p, eps);
    const double c = lambert_slope(p);
    auto integrand = [&](double x) {
        const double w = numerics::lambert_w(c * x);
        return std::log(p.rx_antennas * std::log(p.power * w)) - w;
    };
    numerics::QuadratureOptions opts;
    opts.abs_tol = 1e-12;
    opts.rel_tol = 1e-12;
    const double big_c = numerics::integrate(integrand, eps, 1.0, opts).value;
    const double k = p.users;
    const double total_rate = k * p.lambda();
    return (1.0 - eps) * std::log(k) + std::log(p.kappa() * p.tx_antennas / total_rate) + eps * std::log(r0(p)) +
           big_c;
}

/// The same bound as a direct integral of log(mu_p_tilde(x) / lambda).
inline double i_prop_lb_direct(const RateParams& p)
{
    p.validate();
    const double eps = epsilon(p);
    check_prop_hypothesis(p, eps);
    const double lambda = p.lambda();
    const double floor = mu_p_floor(p);
    const std::vector<double> kinks{eps};
    return rate_integral([&](double x) { return std::log(std::max(mu_p_hat(x, p), floor) / lambda); }, kinks);
}

/// Packets delivered on one beam when the normalized SINR is X:
/// (BW tau / L) log2(1 + P X), X drawn from the per-beam SINR law.
struct BeamDepartureSampler {
    int tx_antennas;
    double power;
    double packets_per_bit_hz; // BW * tau / L

    double operator()(RandomStream& rng) const
    {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double x = sinr_quantile(u(rng), tx_antennas, power);
        return packets_per_bit_hz * std::log2(1.0 + power * x);
    }
};

inline BeamDepartureSampler default_departure_sampler(const RateParams& p)
{
    return BeamDepartureSampler{p.tx_antennas, p.power, p.bandwidth_hz * p.slot_seconds / p.packet_bits};
}

/// Monte-Carlo Pr{sum_{tau=1}^{T-1} (A1 - A2 - d) > 0}. T = 1 is 1 by
/// convention.
template <class DepartureSampler>
double p0T(int t, const ArrivalModel& arrival, std::size_t samples, RandomStream& rng, DepartureSampler&& departure)
{
    if (t < 1) {
        throw ConfigError("p0T: T must be >= 1");
    }
    if (t == 1) {
        return 1.0;
    }
    if (samples < 1000) {
        throw InsufficientDataError("p0T: use at least 1000 samples");
    }
    arrival.validate();
    std::size_t hits = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        double v = 0.0;
        for (int tau = 1; tau < t; ++tau) {
            const auto a1 = draw_arrival(arrival, rng);
            const auto a2 = draw_arrival(arrival, rng);
            v += static_cast<double>(a1 - a2) - departure(rng);
        }
        hits += v > 0.0 ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(samples);
}

inline double p0T(int t, const RateParams& p, std::size_t samples, RandomStream& rng)
{
    return p0T(t, ArrivalModel::poisson(p.lambda()), samples, rng, default_departure_sampler(p));
}

/// log(1 + rho(x)) where rho is the stale-feedback correction with gap
/// delta = mu - lambda; -inf when P0 = 0.
inline double stale_log_factor(double delta, double p0)
{
    if (!(p0 >= 0.0 && p0 <= 1.0)) {
        throw DomainError("stale_log_factor: P0 must lie in [0, 1]");
    }
    if (p0 == 1.0) {
        return 0.0;
    }
    if (p0 == 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    // 1 + rho = -log((1 - P0) + P0 e^{-delta}) / delta, with limit P0 at delta = 0.
    double one_plus_rho = p0;
    if (std::abs(delta) > 1e-12) {
        one_plus_rho = -std::log1p(p0 * std::expm1(-delta)) / delta;
    }
    return one_plus_rho > 0.0 ? std::log(one_plus_rho) : -std::numeric_limits<double>::infinity();
}

/// Lower bound on the decay rate when queue information is T slots stale:
/// I_LB + int_0^1 log(1 + rho(x)) dx. Equals i_prop_lb when P0 = 1.
inline double i_prop_T(const RateParams& p, double p0)
{
    const double base = i_prop_lb(p);
    if (p0 == 1.0) {
        return base;
    }
    if (p0 == 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    const double lambda = p.lambda();
    const double eps = epsilon(p);
    const std::vector<double> kinks{eps};
    const double correction =
        rate_integral([&](double x) { return stale_log_factor(mu_p_tilde(x, p) - lambda, p0); }, kinks);
    return base + correction;
}

inline double i_prop_T(const RateParams& p, int t, std::size_t samples, RandomStream& rng)
{
    return i_prop_T(p, p0T(t, p, samples, rng));
}

} // namespace mumimo
