// Copyright 2026 The levexp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LEVEXP_STATISTICS_HPP
#define LEVEXP_STATISTICS_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace levexp::stats {

double mean(std::span<const double> x);
/// Unbiased (n - 1) sample variance.
double variance(std::span<const double> x);
double stddev(std::span<const double> x);
/// Unbiased sample covariance.
double covariance(std::span<const double> x, std::span<const double> y);

/// Linear-interpolation quantile (Hyndman-Fan type 7), p in [0, 1].
double quantile(std::vector<double> x, double p);

/// Standard error of the sample standard deviation from `resamples`
/// bootstrap draws, reproducible from `seed`.
double bootstrap_stddev_error(std::span<const double> x, int resamples, std::uint64_t seed);

/// D'Agostino-Pearson omnibus normality test. Returns the chi^2(2) p-value
/// of K^2 = Z_skew^2 + Z_kurt^2; NaN for n < 20.
double dagostino_pearson_pvalue(std::span<const double> x);

/// Freedman-Diaconis bin count for x, clamped to [1, max_bins].
int freedman_diaconis_bins(std::span<const double> x, int max_bins = 256);

struct Histogram2D {
    std::vector<double> x_edges;
    std::vector<double> y_edges;
    std::vector<std::vector<std::int64_t>> counts;  // counts[ix][iy]

    std::int64_t total() const;
};

/// 2D histogram with independent Freedman-Diaconis binning per axis. The
/// last edge on each axis is inclusive.
Histogram2D histogram2d(std::span<const double> x, std::span<const double> y);

/// Principal-axis angle of a 2x2 covariance, 0.5 atan2(2 c, a - d).
double principal_angle(double var_x, double cov_xy, double var_y);

/// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

}  // namespace levexp::stats

#endif  // LEVEXP_STATISTICS_HPP
