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

#include "levexp/core_model.hpp"

#include <cmath>
#include <sstream>

#include "levexp/moment_propagator.hpp"

namespace levexp {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw DomainError(what);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

std::string_view to_string(AxisLabel label) {
    switch (label) {
        case AxisLabel::u: return "u";
        case AxisLabel::v: return "v";
        case AxisLabel::z: return "z";
        case AxisLabel::x: return "x";
        case AxisLabel::y: return "y";
    }
    return "?";
}

std::string_view to_string(PotentialKind kind) {
    switch (kind) {
        case PotentialKind::inverted: return "inverted";
        case PotentialKind::harmonic_jump: return "harmonic_jump";
        case PotentialKind::free: return "free";
    }
    return "?";
}

AxisLabel parse_axis_label(std::string_view text) {
    if (text == "u") return AxisLabel::u;
    if (text == "v") return AxisLabel::v;
    if (text == "z") return AxisLabel::z;
    if (text == "x") return AxisLabel::x;
    if (text == "y") return AxisLabel::y;
    throw ConfigError("unknown axis label '" + std::string(text) + "' (expected u, v, z, x or y)");
}

PotentialKind parse_potential_kind(std::string_view text) {
    if (text == "inverted") return PotentialKind::inverted;
    if (text == "harmonic_jump" || text == "jump") return PotentialKind::harmonic_jump;
    if (text == "free") return PotentialKind::free;
    throw ConfigError("unknown potential kind '" + std::string(text) +
                      "' (expected inverted, harmonic_jump or free)");
}

void PhysicalParams::validate() const {
    if (!(std::isfinite(mass) && mass > 0.0)) throw DomainError("mass must be positive");
    if (!finite_nonneg(radius)) throw DomainError("radius must be non-negative");
}

void AxisParams::validate() const {
    if (!(std::isfinite(trap_frequency) && trap_frequency > 0.0))
        throw DomainError("trap_frequency must be positive");
    if (!finite_nonneg(dark_frequency)) throw DomainError("dark_frequency must be non-negative");
    if (dark_frequency == 0.0 && potential != PotentialKind::free)
        throw DomainError("dark_frequency = 0 is only valid for a free potential");
    if (!std::isfinite(release_phase)) throw DomainError("release_phase must be finite");
}

GaussianState GaussianState::from_moments(Vec2 mean, const Mat2& cov) {
    return {mean.x, mean.y, cov.a, cov.d, 0.5 * (cov.b + cov.c)};
}

GaussianState enforce_heisenberg(const GaussianState& state) {
    if (!(finite_nonneg(state.var_position) && finite_nonneg(state.var_momentum)) ||
        !std::isfinite(state.covar)) {
        throw InvalidStateError("variances must be finite and non-negative");
    }
    const double bound = 0.25 * kHbar * kHbar;
    const double det = state.determinant();
    if (det >= bound) return state;
    if ((bound - det) <= kHeisenbergClampTolerance * bound && state.var_position > 0.0) {
        GaussianState clamped = state;
        clamped.var_momentum = (bound + state.covar * state.covar) / state.var_position;
        return clamped;
    }
    std::ostringstream msg;
    msg << "covariance determinant " << det << " is below the Heisenberg bound " << bound;
    throw InvalidStateError(msg.str());
}

NoiseSpec NoiseSpec::from_heating_rate(double heating_rate, double trap_frequency,
                                       double gas_damping, double pressure) {
    require(trap_frequency > 0.0, "trap_frequency must be positive");
    NoiseSpec n{heating_rate / (kHbar * trap_frequency), heating_rate, gas_damping, pressure};
    n.validate(trap_frequency);
    return n;
}

NoiseSpec NoiseSpec::from_gamma1(double gamma1, double trap_frequency, double gas_damping,
                                 double pressure) {
    require(trap_frequency > 0.0, "trap_frequency must be positive");
    NoiseSpec n{gamma1, kHbar * trap_frequency * gamma1, gas_damping, pressure};
    n.validate(trap_frequency);
    return n;
}

NoiseSpec NoiseSpec::scaled(double factor) const {
    require(std::isfinite(factor) && factor >= 0.0, "noise scale factor must be non-negative");
    NoiseSpec n = *this;
    n.gamma1 *= factor;
    n.heating_rate *= factor;
    return n;
}

void NoiseSpec::validate(double trap_frequency) const {
    if (!finite_nonneg(gamma1) || !finite_nonneg(heating_rate) || !finite_nonneg(gas_damping) ||
        !finite_nonneg(pressure)) {
        throw DomainError("noise rates must be finite and non-negative");
    }
    const double implied = kHbar * trap_frequency * gamma1;
    const double scale = std::max(std::abs(implied), std::abs(heating_rate));
    if (scale > 0.0 && std::abs(implied - heating_rate) > 1e-9 * scale) {
        throw DomainError("heating_rate must equal hbar * Omega * gamma1");
    }
}

double PaulTrapSpec::pseudopotential_secular_frequency() const {
    const double arg = mathieu_a + 0.5 * mathieu_q * mathieu_q;
    if (arg < 0.0) throw DomainError("a + q^2/2 < 0: no real pseudopotential frequency");
    return 0.5 * rf_frequency * std::sqrt(arg);
}

void PaulTrapSpec::validate() const {
    if (!(std::isfinite(rf_frequency) && rf_frequency > 0.0))
        throw DomainError("rf_frequency must be positive");
    if (!std::isfinite(mathieu_a) || !std::isfinite(mathieu_q) || !std::isfinite(plane_rotation))
        throw DomainError("Mathieu parameters must be finite");
    if (!floquet_analyze(mathieu_a, mathieu_q, rf_frequency).stable)
        throw DomainError("(a, q) lies outside the first Mathieu stability region");
}

double ProtocolSpec::broadening(AxisLabel axis) const {
    const auto it = measurement_broadening.find(axis);
    return it == measurement_broadening.end() ? 0.0 : it->second;
}

void ProtocolSpec::validate() const {
    if (!finite_nonneg(feedback_off_lead)) throw DomainError("feedback_off_lead must be >= 0");
    if (!finite_nonneg(measure_window)) throw DomainError("measure_window must be >= 0");
    for (double t : release_times)
        if (!finite_nonneg(t)) throw DomainError("release times must be >= 0");
    if (shots_per_release < 1) throw DomainError("shots_per_release must be >= 1");
    for (const auto& [axis, d] : measurement_broadening)
        if (!finite_nonneg(d)) throw DomainError("measurement broadening must be >= 0");
    if (!finite_nonneg(sample_rate)) throw DomainError("sample_rate must be >= 0");
    if (!finite_nonneg(detector_noise_psd)) throw DomainError("detector_noise_psd must be >= 0");
}

double zero_point_motion(double trap_frequency, double mass) {
    require(trap_frequency > 0.0, "trap_frequency must be positive");
    require(mass > 0.0, "mass must be positive");
    return std::sqrt(kHbar / (2.0 * mass * trap_frequency));
}

GaussianState thermal_state(double nbar, double trap_frequency, double mass) {
    require(trap_frequency > 0.0, "trap_frequency must be positive");
    require(mass > 0.0, "mass must be positive");
    require(std::isfinite(nbar) && nbar >= 0.0, "nbar must be non-negative");
    const double factor = 2.0 * nbar + 1.0;
    GaussianState s;
    s.var_position = kHbar / (2.0 * mass * trap_frequency) * factor;
    s.var_momentum = 0.5 * kHbar * mass * trap_frequency * factor;
    return s;
}

double occupation_from_temperature(double temperature, double trap_frequency) {
    require(temperature > 0.0, "temperature must be positive");
    require(trap_frequency > 0.0, "trap_frequency must be positive");
    return 1.0 / std::expm1(kHbar * trap_frequency / (kBoltzmann * temperature));
}

double temperature_from_occupation(double nbar, double trap_frequency) {
    require(nbar > 0.0, "nbar must be positive");
    require(trap_frequency > 0.0, "trap_frequency must be positive");
    return kHbar * trap_frequency / (kBoltzmann * std::log1p(1.0 / nbar));
}

double purity(const GaussianState& state) {
    const GaussianState s = enforce_heisenberg(state);
    const double p = kHbar / (2.0 * std::sqrt(s.determinant()));
    return std::min(p, 1.0);
}

double coherence_length(const GaussianState& state) {
    return std::sqrt(8.0) * purity(state) * std::sqrt(state.var_position);
}

double squeezing_db(double expansion_ratio) {
    require(expansion_ratio > 0.0, "expansion ratio must be positive");
    return 20.0 * std::log10(expansion_ratio);
}

InitialStateConsistency check_initial_consistency(double sigma0, double nbar,
                                                  double trap_frequency, double mass) {
    require(sigma0 > 0.0, "sigma0 must be positive");
    const double zpm = zero_point_motion(trap_frequency, mass);
    InitialStateConsistency c;
    c.sigma_from_nbar = zpm * std::sqrt(2.0 * nbar + 1.0);
    c.nbar_from_sigma = 0.5 * ((sigma0 * sigma0) / (zpm * zpm) - 1.0);
    c.relative_mismatch = sigma0 / c.sigma_from_nbar - 1.0;
    return c;
}

GaussianState released_state(double sigma0, double trap_frequency, double mass) {
    require(std::isfinite(sigma0) && sigma0 >= 0.0, "sigma0 must be non-negative");
    require(trap_frequency > 0.0, "trap_frequency must be positive");
    require(mass > 0.0, "mass must be positive");
    GaussianState s;
    s.var_position = sigma0 * sigma0;
    const double sp = mass * trap_frequency * sigma0;
    s.var_momentum = sp * sp;
    return s;
}

GaussianState state_with_purity(double sigma0, double nbar) {
    require(sigma0 > 0.0, "sigma0 must be positive");
    require(std::isfinite(nbar) && nbar >= 0.0, "nbar must be non-negative");
    const double half_area = 0.5 * kHbar * (2.0 * nbar + 1.0);
    GaussianState s;
    s.var_position = sigma0 * sigma0;
    s.var_momentum = half_area * half_area / s.var_position;
    return s;
}

}  // namespace levexp
