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

// Closed-form second moments after release from an optical trap of
// frequency Omega into an inverted (-m w^2 z^2/2), harmonic (+m w^2 z^2/2)
// or flat potential. Damping and micromotion are neglected; heating enters
// as white force noise with D_pp = 2 m Edot, Edot = hbar Omega gamma1.

#ifndef LEVEXP_ANALYTIC_DYNAMICS_HPP
#define LEVEXP_ANALYTIC_DYNAMICS_HPP

#include <span>
#include <vector>

#include "levexp/core_model.hpp"

namespace levexp {

enum class Regime { inverted, jump, free };

std::string_view to_string(Regime regime);

/// sigma(t) sampled on a strictly increasing time grid.
struct ExpansionCurve {
    std::vector<double> times;  // s
    std::vector<double> sigma;  // m
    std::vector<double> sigma_err;  // m, empty when unknown
    AxisParams axis;
    Regime regime = Regime::inverted;

    /// Throws ConfigError unless times are strictly increasing, sigma >= 0
    /// and the column lengths agree.
    void validate() const;
};

/// Position variance after time t in the inverted potential:
///   s0^2 [cosh^2(wt) + (O^2/w^2) sinh^2(wt)]
///     - (hbar O g1 / (m w^2)) [t - sinh(2wt)/(2w)].
double variance_inverted(double t, double sigma0_sq, double trap_frequency,
                         double dark_frequency, double gamma1, double mass);

/// Frequency jump O -> w (harmonic dark potential, secular approximation):
///   s0^2 [cos^2(wt) + (O^2/w^2) sin^2(wt)]
///     + (hbar O g1 / (m w^2)) [t - sin(2wt)/(2w)].
double variance_jump(double t, double sigma0_sq, double trap_frequency,
                     double dark_frequency, double gamma1, double mass);

/// Free flight: s0^2 (1 + O^2 t^2) + (2/3)(Edot/m) t^3.
double variance_free(double t, double sigma0_sq, double trap_frequency,
                     double heating_rate, double mass);

/// Full (mean, covariance) after time t in a constant quadratic potential,
/// from the exact flow map and the closed-form noise integral. `initial` may
/// be any Gaussian state. The regime is taken from axis.potential.
GaussianState second_moments(double t, const GaussianState& initial, const AxisParams& axis,
                             const NoiseSpec& noise, double mass);

/// second_moments for an inverted axis; throws DomainError for other kinds.
GaussianState second_moments_inverted(double t, const GaussianState& initial,
                                      const AxisParams& axis, const NoiseSpec& noise,
                                      double mass);

/// Flow map Phi(t) of z' = p/m, p' = -k z for constant k = sign * m w^2,
/// where sign = -1 (inverted), +1 (harmonic), 0 (free).
Mat2 flow_map(double t, double stiffness_over_mass, double mass);

/// Noise covariance accumulated over t starting from a sharp state,
/// Q = D int_0^t Phi(s) e_p e_p^T Phi(s)^T ds, in closed form.
Mat2 noise_covariance(double t, double stiffness_over_mass, double mass, double diffusion);

/// sigma(t) of the given regime on a time grid.
ExpansionCurve expansion_curve(std::span<const double> times, double sigma0,
                               const AxisParams& axis, const NoiseSpec& noise, double mass);

}  // namespace levexp

#endif  // LEVEXP_ANALYTIC_DYNAMICS_HPP
