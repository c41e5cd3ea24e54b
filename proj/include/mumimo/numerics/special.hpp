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
#include <limits>
#include <string>

#include "mumimo/common.hpp"

namespace mumimo::numerics {

/// Root of f on [lo, hi] by bisection. f(lo) and f(hi) must differ in sign
/// (a zero at either end is returned directly).
template <class F>
double bisect(F&& f, double lo, double hi, double x_tol = 1e-14, int max_iter = 500)
{
    double f_lo = f(lo);
    double f_hi = f(hi);
    if (f_lo == 0.0) {
        return lo;
    }
    if (f_hi == 0.0) {
        return hi;
    }
    if (std::signbit(f_lo) == std::signbit(f_hi)) {
        throw DomainError("bisect: no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    for (int i = 0; i < max_iter && hi - lo > x_tol * std::max(1.0, std::abs(lo)); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        const double f_mid = f(mid);
        if (f_mid == 0.0) {
            return mid;
        }
        if (std::signbit(f_mid) == std::signbit(f_lo)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Principal branch W0 of the Lambert W function, W(x) e^{W(x)} = x, x >= -1/e.
///
/// Initial guess: branch-point series in p = sqrt(2(e x + 1)) for x < -0.25,
/// Winitzki's log1p approximation up to x = 3, and the asymptotic
/// L1 - L2 + L2/L1 (L1 = ln x, L2 = ln L1) beyond. Halley's iteration then
/// converges in a handful of steps.
inline double lambert_w(double x)
{
    constexpr double inv_e = 0.36787944117144232160;
    if (std::isnan(x) || x < -inv_e) {
        if (x < -inv_e && x > -inv_e - 1e-15) {
            return -1.0; // rounding of -1/e itself
        }
        throw DomainError("lambert_w: argument below -1/e");
    }
    if (x == 0.0) {
        return 0.0;
    }
    if (x == -inv_e) {
        return -1.0;
    }
    if (std::isinf(x)) {
        return x;
    }

    double w;
    if (x < -0.25) {
        const double p = std::sqrt(2.0 * (std::exp(1.0) * x + 1.0));
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    } else if (x < 3.0) {
        const double l = std::log1p(x);
        w = l * (1.0 - std::log1p(l) / (2.0 + l));
    } else {
        const double l1 = std::log(x);
        const double l2 = std::log(l1);
        w = l1 - l2 + l2 / l1;
    }

    for (int i = 0; i < 64; ++i) {
        const double ew = std::exp(w);
        const double residual = w * ew - x;
        const double wp1 = w + 1.0;
        if (wp1 == 0.0) {
            break;
        }
        const double step = residual / (ew * wp1 - (w + 2.0) * residual / (2.0 * wp1));
        w -= step;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(w))) {
            break;
        }
    }
    return w;
}

} // namespace mumimo::numerics
