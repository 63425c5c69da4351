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

#include "levexp/analytic_dynamics.hpp"

#include <cmath>

namespace levexp {

namespace {

// sinh(x) - x and x - sin(x) without cancellation near zero.
double sinh_minus_x(double x) {
    if (std::abs(x) < 0.5) {
        const double x2 = x * x;
        double term = x * x2 / 6.0;
        double sum = term;
        for (int k = 5; k < 24; k += 2) {
            term *= x2 / ((k - 1) * k);
            sum += term;
        }
        return sum;
    }
    return std::sinh(x) - x;
}

double x_minus_sin(double x) {
    if (std::abs(x) < 0.5) {
        const double x2 = x * x;
        double term = x * x2 / 6.0;
        double sum = term;
        for (int k = 5; k < 24; k += 2) {
            term *= -x2 / ((k - 1) * k);
            sum += term;
        }
        return sum;
    }
    return x - std::sin(x);
}

void check_common(double t, double sigma0_sq, double trap_frequency, double mass) {
    if (!(std::isfinite(t) && t >= 0.0)) throw DomainError("t must be >= 0");
    if (!(std::isfinite(sigma0_sq) && sigma0_sq >= 0.0))
        throw DomainError("sigma0^2 must be >= 0");
    if (!(trap_frequency > 0.0)) throw DomainError("trap frequency must be positive");
    if (!(mass > 0.0)) throw DomainError("mass must be positive");
}

void check_dark(double dark_frequency, double gamma1, const char* fallback) {
    if (!(std::isfinite(dark_frequency) && dark_frequency > 0.0))
        throw DomainError(std::string("dark frequency must be positive; use ") + fallback);
    if (!(std::isfinite(gamma1) && gamma1 >= 0.0)) throw DomainError("gamma1 must be >= 0");
}

double stiffness_over_mass_for(const AxisParams& axis) {
    const double w2 = axis.dark_frequency * axis.dark_frequency;
    switch (axis.potential) {
        case PotentialKind::inverted: return -w2;
        case PotentialKind::harmonic_jump: return w2;
        case PotentialKind::free: return 0.0;
    }
    return 0.0;
}

}  // namespace

std::string_view to_string(Regime regime) {
    switch (regime) {
        case Regime::inverted: return "inverted";
        case Regime::jump: return "jump";
        case Regime::free: return "free";
    }
    return "?";
}

void ExpansionCurve::validate() const {
    if (times.size() != sigma.size())
        throw ConfigError("times and sigma columns differ in length");
    if (!sigma_err.empty() && sigma_err.size() != sigma.size())
        throw ConfigError("sigma_err column length differs from sigma");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i])) throw ConfigError("non-finite time");
        if (i > 0 && !(times[i] > times[i - 1]))
            throw ConfigError("times must be strictly increasing");
        if (!(std::isfinite(sigma[i]) && sigma[i] >= 0.0))
            throw ConfigError("sigma entries must be finite and >= 0");
    }
}

double variance_inverted(double t, double sigma0_sq, double trap_frequency,
                         double dark_frequency, double gamma1, double mass) {
    check_common(t, sigma0_sq, trap_frequency, mass);
    check_dark(dark_frequency, gamma1, "variance_free");
    const double wt = dark_frequency * t;
    const double ratio = trap_frequency / dark_frequency;
    const double ch = std::cosh(wt);
    const double sh = std::sinh(wt);
    const double coherent = sigma0_sq * (ch * ch + ratio * ratio * sh * sh);
    // -[t - sinh(2wt)/(2w)] = (sinh(2wt) - 2wt) / (2w)
    const double bracket = sinh_minus_x(2.0 * wt) / (2.0 * dark_frequency);
    const double noise = kHbar * trap_frequency * gamma1 /
                         (mass * dark_frequency * dark_frequency) * bracket;
    return coherent + noise;
}

double variance_jump(double t, double sigma0_sq, double trap_frequency, double dark_frequency,
                     double gamma1, double mass) {
    check_common(t, sigma0_sq, trap_frequency, mass);
    check_dark(dark_frequency, gamma1, "variance_free");
    const double wt = dark_frequency * t;
    const double ratio = trap_frequency / dark_frequency;
    const double c = std::cos(wt);
    const double s = std::sin(wt);
    const double coherent = sigma0_sq * (c * c + ratio * ratio * s * s);
    const double bracket = x_minus_sin(2.0 * wt) / (2.0 * dark_frequency);
    const double noise = kHbar * trap_frequency * gamma1 /
                         (mass * dark_frequency * dark_frequency) * bracket;
    return coherent + noise;
}

double variance_free(double t, double sigma0_sq, double trap_frequency, double heating_rate,
                     double mass) {
    check_common(t, sigma0_sq, trap_frequency, mass);
    if (!(std::isfinite(heating_rate) && heating_rate >= 0.0))
        throw DomainError("heating rate must be >= 0");
    const double ot = trap_frequency * t;
    return sigma0_sq * (1.0 + ot * ot) + (2.0 / 3.0) * (heating_rate / mass) * t * t * t;
}

Mat2 flow_map(double t, double stiffness_over_mass, double mass) {
    if (stiffness_over_mass < 0.0) {
        const double w = std::sqrt(-stiffness_over_mass);
        const double ch = std::cosh(w * t);
        const double sh = std::sinh(w * t);
        return {ch, sh / (mass * w), mass * w * sh, ch};
    }
    if (stiffness_over_mass > 0.0) {
        const double w = std::sqrt(stiffness_over_mass);
        const double c = std::cos(w * t);
        const double s = std::sin(w * t);
        return {c, s / (mass * w), -mass * w * s, c};
    }
    return {1.0, t / mass, 0.0, 1.0};
}

Mat2 noise_covariance(double t, double stiffness_over_mass, double mass, double diffusion) {
    double zz = 0.0;
    double zp = 0.0;
    double pp = 0.0;
    if (stiffness_over_mass < 0.0) {
        const double w = std::sqrt(-stiffness_over_mass);
        const double x = 2.0 * w * t;
        const double sh = std::sinh(w * t);
        zz = sinh_minus_x(x) / (4.0 * mass * mass * w * w * w);
        zp = sh * sh / (2.0 * mass * w * w);
        pp = (std::sinh(x) + x) / (4.0 * w);
    } else if (stiffness_over_mass > 0.0) {
        const double w = std::sqrt(stiffness_over_mass);
        const double x = 2.0 * w * t;
        const double s = std::sin(w * t);
        zz = x_minus_sin(x) / (4.0 * mass * mass * w * w * w);
        zp = s * s / (2.0 * mass * w * w);
        pp = (x + std::sin(x)) / (4.0 * w);
    } else {
        zz = t * t * t / (3.0 * mass * mass);
        zp = t * t / (2.0 * mass);
        pp = t;
    }
    return diffusion * Mat2{zz, zp, zp, pp};
}

GaussianState second_moments(double t, const GaussianState& initial, const AxisParams& axis,
                             const NoiseSpec& noise, double mass) {
    if (!(std::isfinite(t) && t >= 0.0)) throw DomainError("t must be >= 0");
    if (!(mass > 0.0)) throw DomainError("mass must be positive");
    axis.validate();
    noise.validate(axis.trap_frequency);
    const double kappa = stiffness_over_mass_for(axis);
    const Mat2 phi = flow_map(t, kappa, mass);
    const Mat2 q = noise_covariance(t, kappa, mass, noise.momentum_diffusion(mass));
    const Mat2 cov = phi * initial.covariance() * phi.transposed() + q;
    return GaussianState::from_moments(phi * initial.mean(), cov);
}

GaussianState second_moments_inverted(double t, const GaussianState& initial,
                                      const AxisParams& axis, const NoiseSpec& noise,
                                      double mass) {
    if (axis.potential != PotentialKind::inverted)
        throw DomainError("second_moments_inverted requires an inverted axis");
    return second_moments(t, initial, axis, noise, mass);
}

ExpansionCurve expansion_curve(std::span<const double> times, double sigma0,
                               const AxisParams& axis, const NoiseSpec& noise, double mass) {
    axis.validate();
    ExpansionCurve curve;
    curve.axis = axis;
    curve.times.assign(times.begin(), times.end());
    curve.sigma.reserve(times.size());
    const double s0sq = sigma0 * sigma0;
    switch (axis.potential) {
        case PotentialKind::inverted:
            curve.regime = Regime::inverted;
            for (double t : times)
                curve.sigma.push_back(std::sqrt(variance_inverted(
                    t, s0sq, axis.trap_frequency, axis.dark_frequency, noise.gamma1, mass)));
            break;
        case PotentialKind::harmonic_jump:
            curve.regime = Regime::jump;
            for (double t : times)
                curve.sigma.push_back(std::sqrt(variance_jump(
                    t, s0sq, axis.trap_frequency, axis.dark_frequency, noise.gamma1, mass)));
            break;
        case PotentialKind::free:
            curve.regime = Regime::free;
            for (double t : times)
                curve.sigma.push_back(std::sqrt(
                    variance_free(t, s0sq, axis.trap_frequency, noise.heating_rate, mass)));
            break;
    }
    curve.validate();
    return curve;
}

}  // namespace levexp
