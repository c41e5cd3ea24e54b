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

// Globally adaptive Gauss-Kronrod (7/15-point) quadrature in the style of
// QUADPACK's QAG, plus a semi-infinite variant that truncates the domain
// where the integrand has decayed below a fraction of its peak.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace mumimo::numerics {

struct QuadratureOptions {
    double abs_tol = 1e-13;
    double rel_tol = 1e-11;
    int max_intervals = 4000;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
    bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for nodes 1, 3, 5 and the centre.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gauss_kronrod_15(F& f, double a, double b)
{
    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr double tiny = std::numeric_limits<double>::min();

    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);

    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    double abs_sum = std::abs(kronrod);

    std::array<double, 7> f1{};
    std::array<double, 7> f2{};
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kKronrodNodes[j];
        f1[j] = f(centre - dx);
        f2[j] = f(centre + dx);
        const double pair = f1[j] + f2[j];
        kronrod += kKronrodWeights[j] * pair;
        abs_sum += kKronrodWeights[j] * (std::abs(f1[j]) + std::abs(f2[j]));
        if (j % 2 == 1) {
            gauss += kGaussWeights[j / 2] * pair;
        }
    }

    const double mean = 0.5 * kronrod;
    double asc = kKronrodWeights[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j) {
        asc += kKronrodWeights[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
    }

    const double scale = std::abs(half);
    double err = std::abs((kronrod - gauss) * half);
    asc *= scale;
    abs_sum *= scale;
    if (asc != 0.0 && err != 0.0) {
        err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    }
    if (abs_sum > tiny / (50.0 * eps)) {
        err = std::max(50.0 * eps * abs_sum, err);
    }
    return Panel{a, b, kronrod * half, err};
}

} // namespace detail

/// Integrates f over the partition given by `breakpoints` (ascending, at least
/// two entries). Panels with the largest error estimate are bisected until
/// the total error meets max(abs_tol, rel_tol * |value|).
template <class F>
QuadratureResult integrate(F&& f, std::span<const double> breakpoints, const QuadratureOptions& opts = {})
{
    QuadratureResult result;
    if (breakpoints.size() < 2) {
        result.converged = true;
        return result;
    }

    std::priority_queue<detail::Panel> heap;
    double total = 0.0;
    double total_error = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (breakpoints[i + 1] == breakpoints[i]) {
            continue;
        }
        auto panel = detail::gauss_kronrod_15(f, breakpoints[i], breakpoints[i + 1]);
        total += panel.value;
        total_error += panel.error;
        heap.push(panel);
    }

    int intervals = static_cast<int>(heap.size());
    while (!heap.empty() && total_error > std::max(opts.abs_tol, opts.rel_tol * std::abs(total))) {
        if (intervals >= opts.max_intervals) {
            break;
        }
        const auto worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            break; // interval cannot be split further in double precision
        }
        heap.pop();
        const auto left = detail::gauss_kronrod_15(f, worst.a, mid);
        const auto right = detail::gauss_kronrod_15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++intervals;
    }

    // Re-sum from the panels to shed the drift of incremental updates.
    double value = 0.0;
    double error = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    result.value = value;
    result.error = error;
    result.intervals = intervals;
    result.converged = error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(value));
    return result;
}

template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opts = {})
{
    const std::array<double, 2> ends{a, b};
    return integrate(f, std::span<const double>(ends), opts);
}

/// Integral of f over [a, inf). The domain is truncated at the first point
/// beyond the integrand's peak where |f| falls below `tail_cutoff` times that
/// peak; the scan grid (geometrically spaced offsets from a) doubles as the
/// initial partition.
template <class F>
QuadratureResult integrate_to_infinity(F&& f, double a, const QuadratureOptions& opts = {},
                                       double tail_cutoff = 1e-12, double first_step = 1.0 / 64.0)
{
    std::vector<double> grid{a};
    double peak = std::abs(f(a));
    double offset = first_step;
    int below = 0;
    for (int j = 0; j < 200; ++j, offset *= 2.0) {
        const double x = a + offset;
        const double fx = std::abs(f(x));
        grid.push_back(x);
        if (fx > peak) {
            peak = fx;
            below = 0;
        } else if (peak > 0.0 && fx <= tail_cutoff * peak) {
            // two consecutive grid points below the cutoff past the peak
            if (++below == 2) {
                break;
            }
        } else {
            below = 0;
        }
        if (!std::isfinite(x)) {
            break;
        }
    }
    if (peak == 0.0) {
        QuadratureResult zero;
        zero.converged = true;
        return zero;
    }
    return integrate(f, std::span<const double>(grid), opts);
}

} // namespace mumimo::numerics
