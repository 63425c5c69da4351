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

// Shared physical quantities and value types for single-axis Gaussian
// motional states of a levitated particle.

#ifndef LEVEXP_CORE_MODEL_HPP
#define LEVEXP_CORE_MODEL_HPP

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "levexp/errors.hpp"
#include "levexp/matrix2.hpp"
#include "levexp/units.hpp"

namespace levexp {

/// Relative slack below (hbar/2)^2 that is clamped instead of rejected.
inline constexpr double kHeisenbergClampTolerance = 1e-9;

enum class AxisLabel { u, v, z, x, y };
enum class PotentialKind { inverted, harmonic_jump, free };

std::string_view to_string(AxisLabel label);
std::string_view to_string(PotentialKind kind);
AxisLabel parse_axis_label(std::string_view text);
PotentialKind parse_potential_kind(std::string_view text);

struct PhysicalParams {
    double mass = 0.0;    // kg
    double radius = 0.0;  // m, informational
    int charge_count = 0;

    void validate() const;
};

struct AxisParams {
    AxisLabel label = AxisLabel::z;
    double trap_frequency = 0.0;  // optical Omega, rad/s
    double dark_frequency = 0.0;  // secular or inverted magnitude omega, rad/s
    PotentialKind potential = PotentialKind::inverted;
    double release_phase = 0.0;  // RF phase at release, rad

    void validate() const;
};

/// Mean and covariance of one motional axis. Immutable by convention; all
/// operations return new values.
struct GaussianState {
    double mean_position = 0.0;  // m
    double mean_momentum = 0.0;  // kg m/s
    double var_position = 0.0;   // m^2
    double var_momentum = 0.0;   // (kg m/s)^2
    double covar = 0.0;          // kg m^2/s, signed

    /// det of the covariance matrix, sigma_z^2 sigma_p^2 - covar^2.
    /// zz pp - zp^2 with one rounding (Kahan's fma form); the two products
    /// nearly cancel for strongly squeezed states.
    double determinant() const {
        const double w = covar * covar;
        return std::fma(var_position, var_momentum, -w) - std::fma(covar, covar, -w);
    }
    Mat2 covariance() const { return {var_position, covar, covar, var_momentum}; }
    Vec2 mean() const { return {mean_position, mean_momentum}; }

    static GaussianState from_moments(Vec2 mean, const Mat2& cov);
};

/// Checks non-negativity and the Heisenberg bound. States within the clamp
/// tolerance below the bound come back with var_momentum raised onto it;
/// larger violations throw InvalidStateError.
GaussianState enforce_heisenberg(const GaussianState& state);

/// Effective noise on one axis. The displacement-noise rate gamma1 and the
/// heating rate are tied by Edot = hbar * Omega * gamma1.
struct NoiseSpec {
    double gamma1 = 0.0;        // 1/s
    double heating_rate = 0.0;  // J/s
    double gas_damping = 0.0;   // 1/s
    double pressure = 0.0;      // Pa, informational

    static NoiseSpec from_heating_rate(double heating_rate, double trap_frequency,
                                       double gas_damping = 0.0, double pressure = 0.0);
    static NoiseSpec from_gamma1(double gamma1, double trap_frequency,
                                 double gas_damping = 0.0, double pressure = 0.0);

    /// White-force momentum diffusion D_pp = 2 m Edot, so free-flight
    /// <p^2> grows as 2 m Edot t.
    double momentum_diffusion(double mass) const { return 2.0 * mass * heating_rate; }

    /// A copy with both gamma1 and Edot multiplied by `factor`.
    NoiseSpec scaled(double factor) const;

    void validate(double trap_frequency) const;
};

struct PaulTrapSpec {
    double rf_frequency = 0.0;    // Omega_RF, rad/s
    double mathieu_q = 0.0;
    double mathieu_a = 0.0;
    double plane_rotation = 0.0;  // theta_t, rad
    double rf_voltage = 0.0;      // V, informational

    /// Lowest-order pseudopotential secular frequency (Omega_RF/2) sqrt(a + q^2/2).
    double pseudopotential_secular_frequency() const;
    /// Checks Floquet stability of (a, q); see floquet_analyze.
    void validate() const;
};

struct ProtocolSpec {
    double feedback_off_lead = 0.0;  // t_FB, s
    std::vector<double> release_times;
    double measure_window = 0.0;  // t_m, s
    int shots_per_release = 1;
    std::map<AxisLabel, double> measurement_broadening;  // delta sigma per axis, m

    // Simulated detection chain.
    double sample_rate = 0.0;          // Hz; 0 selects 20x the trap frequency
    bool retrap_heating = true;        // apply the axis noise during t_m
    double detector_noise_psd = 0.0;   // one-sided, m^2/Hz

    double broadening(AxisLabel axis) const;
    void validate() const;
};

/// Zero-point motion sqrt(hbar / (2 m Omega)).
double zero_point_motion(double trap_frequency, double mass);

/// Thermal state in a harmonic trap with occupation nbar.
GaussianState thermal_state(double nbar, double trap_frequency, double mass);

/// Bose occupation 1 / (exp(hbar Omega / k_B T) - 1).
double occupation_from_temperature(double temperature, double trap_frequency);
/// Inverse of occupation_from_temperature.
double temperature_from_occupation(double nbar, double trap_frequency);

/// tr(rho^2) = hbar / (2 sqrt(det Sigma)).
double purity(const GaussianState& state);

/// sqrt(8) * purity * sigma.
double coherence_length(const GaussianState& state);

/// 20 log10(eta), i.e. -10 log10(eta^-2).
double squeezing_db(double expansion_ratio);

/// Result of comparing an independently supplied sigma(0) against the
/// thermal width implied by nbar. Reported, never enforced.
struct InitialStateConsistency {
    double sigma_from_nbar = 0.0;   // m
    double nbar_from_sigma = 0.0;
    double relative_mismatch = 0.0; // sigma0 / sigma_from_nbar - 1
};

InitialStateConsistency check_initial_consistency(double sigma0, double nbar,
                                                  double trap_frequency, double mass);

/// State released from the optical trap: variance sigma0^2 with the
/// equipartition momentum spread (m Omega sigma0)^2, zero mean, no covariance.
/// This is the initial condition the closed-form expansion laws assume.
GaussianState released_state(double sigma0, double trap_frequency, double mass);

/// Like released_state but with the momentum spread chosen so that the
/// purity equals 1/(2 nbar + 1).
GaussianState state_with_purity(double sigma0, double nbar);

}  // namespace levexp

#endif  // LEVEXP_CORE_MODEL_HPP
