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

#include "levexp/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "levexp/errors.hpp"
#include "levexp/rng.hpp"

namespace levexp::stats {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double mean(std::span<const double> x) {
    if (x.empty()) return kNaN;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double covariance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("covariance: length mismatch");
    if (x.size() < 2) return kNaN;
    const double mx = mean(x);
    const double my = mean(y);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
    return s / static_cast<double>(x.size() - 1);
}

double variance(std::span<const double> x) { return covariance(x, x); }

double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

double quantile(std::vector<double> x, double p) {
    if (x.empty()) return kNaN;
    std::sort(x.begin(), x.end());
    const double h = p * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double bootstrap_stddev_error(std::span<const double> x, int resamples, std::uint64_t seed) {
    if (x.size() < 2 || resamples < 2) return kNaN;
    PhiloxStream rng(seed, 0xB0075u);
    const auto n = static_cast<std::uint64_t>(x.size());
    std::vector<double> draw(x.size());
    std::vector<double> sigmas;
    sigmas.reserve(static_cast<std::size_t>(resamples));
    for (int r = 0; r < resamples; ++r) {
        for (auto& d : draw) d = x[rng.next_u64() % n];
        sigmas.push_back(stddev(draw));
    }
    return stddev(sigmas);
}

double dagostino_pearson_pvalue(std::span<const double> x) {
    const auto n_int = x.size();
    if (n_int < 20) return kNaN;
    const double n = static_cast<double>(n_int);
    const double mu = mean(x);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - mu;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 <= 0.0) return kNaN;

    // Skewness test.
    const double b1 = m3 / std::pow(m2, 1.5);
    double y = b1 * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
    const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                         ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
    const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
    const double alpha = std::sqrt(2.0 / (w2 - 1.0));
    if (y == 0.0) y = 1.0;
    const double ya = y / alpha;
    const double z_skew = delta * std::log(ya + std::sqrt(ya * ya + 1.0));

    // Kurtosis test (Anscombe-Glynn).
    const double b2 = m4 / (m2 * m2);
    const double e = 3.0 * (n - 1.0) / (n + 1.0);
    const double var_b2 =
        24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
    const double xk = (b2 - e) / std::sqrt(var_b2);
    const double sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                              std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
    const double a = 6.0 + 8.0 / sqrt_beta1 *
                               (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
    const double term1 = 1.0 - 2.0 / (9.0 * a);
    const double denom = 1.0 + xk * std::sqrt(2.0 / (a - 4.0));
    const double term2 =
        denom == 0.0 ? 99.0 : std::cbrt((1.0 - 2.0 / a) / denom);
    const double z_kurt = (term1 - term2) / std::sqrt(2.0 / (9.0 * a));

    const double k2 = z_skew * z_skew + z_kurt * z_kurt;
    return std::exp(-0.5 * k2);
}

int freedman_diaconis_bins(std::span<const double> x, int max_bins) {
    if (x.size() < 2) return 1;
    std::vector<double> v(x.begin(), x.end());
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    const double range = *mx - *mn;
    const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
    const double width = 2.0 * iqr / std::cbrt(static_cast<double>(x.size()));
    if (!(width > 0.0) || !(range > 0.0)) return 1;
    const double bins = std::ceil(range / width);
    return static_cast<int>(std::clamp(bins, 1.0, static_cast<double>(max_bins)));
}

std::int64_t Histogram2D::total() const {
    std::int64_t t = 0;
    for (const auto& col : counts)
        for (auto c : col) t += c;
    return t;
}

Histogram2D histogram2d(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("histogram2d: length mismatch");
    Histogram2D h;
    auto edges = [](std::span<const double> v) {
        const int bins = freedman_diaconis_bins(v);
        double lo = 0.0, hi = 1.0;
        if (!v.empty()) {
            const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
            lo = *mn;
            hi = *mx;
        }
        if (hi <= lo) {
            const double pad = lo == 0.0 ? 0.5 : 0.5 * std::abs(lo);
            lo -= pad;
            hi += pad;
        }
        std::vector<double> e(static_cast<std::size_t>(bins) + 1);
        for (int i = 0; i <= bins; ++i) e[i] = lo + (hi - lo) * i / bins;
        e.back() = hi;
        return e;
    };
    h.x_edges = edges(x);
    h.y_edges = edges(y);
    const std::size_t nx = h.x_edges.size() - 1;
    const std::size_t ny = h.y_edges.size() - 1;
    h.counts.assign(nx, std::vector<std::int64_t>(ny, 0));
    auto locate = [](const std::vector<double>& e, double v) {
        const auto it = std::upper_bound(e.begin(), e.end(), v);
        const auto idx = static_cast<std::ptrdiff_t>(it - e.begin()) - 1;
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
            idx, 0, static_cast<std::ptrdiff_t>(e.size()) - 2));
    };
    for (std::size_t i = 0; i < x.size(); ++i) ++h.counts[locate(h.x_edges, x[i])][locate(h.y_edges, y[i])];
    return h;
}

double principal_angle(double var_x, double cov_xy, double var_y) {
    return 0.5 * std::atan2(2.0 * cov_xy, var_x - var_y);
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
    return covariance(x, y) / variance(x);
}

}  // namespace levexp::stats
