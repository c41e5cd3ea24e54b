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

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <span>
#include <vector>

#include "mumimo/common.hpp"

namespace mumimo::numerics {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
    std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2) {
        throw InsufficientDataError("fit_line: need at least two paired points");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw InsufficientDataError("fit_line: abscissae are all equal");
    }
    LinearFit fit;
    fit.points = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double ss_res = std::max(0.0, syy - fit.slope * sxy);
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    if (x.size() > 2) {
        fit.slope_stderr = std::sqrt(ss_res / (n - 2.0) / sxx);
    }
    return fit;
}

/// Two-sided 97.5% Student-t quantile for `dof` degrees of freedom.
inline double student_t_975(std::size_t dof)
{
    static constexpr double table[] = {0.0,    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                       2.201,  2.179,  2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                                       2.080,  2.074,  2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
    if (dof == 0) {
        return std::numeric_limits<double>::infinity();
    }
    if (dof < std::size(table)) {
        return table[dof];
    }
    return 1.959964 + 2.4 / static_cast<double>(dof);
}

struct Interval {
    double estimate = 0.0;
    double low = 0.0;
    double high = 0.0;
};

/// 95% confidence interval for the mean of a (possibly autocorrelated) series
/// by non-overlapping batch means.
template <class T>
Interval batch_means_interval(std::span<const T> series, std::size_t batches = 20)
{
    if (batches < 2 || series.size() < batches) {
        throw InsufficientDataError("batch_means_interval: series shorter than the batch count");
    }
    const std::size_t size = series.size() / batches;
    std::vector<double> means(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * size; i < (b + 1) * size; ++i) {
            s += static_cast<double>(series[i]);
        }
        means[b] = s / static_cast<double>(size);
    }
    double mean = 0.0;
    for (double m : means) {
        mean += m;
    }
    mean /= static_cast<double>(batches);
    double var = 0.0;
    for (double m : means) {
        var += (m - mean) * (m - mean);
    }
    var /= static_cast<double>(batches - 1);
    const double half = student_t_975(batches - 1) * std::sqrt(var / static_cast<double>(batches));
    return Interval{mean, mean - half, mean + half};
}

} // namespace mumimo::numerics
