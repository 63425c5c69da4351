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

// Physical constants and boundary unit conversions.
//
// Everything inside the library is strict SI: m, kg, s, rad/s, J/s, Pa.
// Configuration files use convenience units and convert here.
//
//   key suffix   meaning                       SI factor
//   _khz         f = frequency / 2pi in kHz    2pi * 1e3   -> rad/s
//   _pm, _nm     lengths                       1e-12, 1e-9 -> m
//   _us          times                         1e-6        -> s
//   _fg          mass in femtograms            1e-18       -> kg
//   _k_per_s     heating rate as Edot / k_B    k_B         -> J/s
//   _mbar        pressure                      100         -> Pa
//   _deg         angles                        pi / 180    -> rad

#ifndef LEVEXP_UNITS_HPP
#define LEVEXP_UNITS_HPP

#include <numbers>

namespace levexp {

/// CODATA 2018 reduced Planck constant [J s].
inline constexpr double kHbar = 1.054571817e-34;
/// Boltzmann constant, exact in the 2019 SI [J/K].
inline constexpr double kBoltzmann = 1.380649e-23;

namespace units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double khz_to_rad_per_s(double khz) { return kTwoPi * 1e3 * khz; }
constexpr double rad_per_s_to_khz(double w) { return w / (kTwoPi * 1e3); }
constexpr double pm_to_m(double pm) { return pm * 1e-12; }
constexpr double nm_to_m(double nm) { return nm * 1e-9; }
constexpr double us_to_s(double us) { return us * 1e-6; }
constexpr double fg_to_kg(double fg) { return fg * 1e-18; }
constexpr double kelvin_per_s_to_watt(double k_per_s) { return k_per_s * kBoltzmann; }
constexpr double watt_to_kelvin_per_s(double w) { return w / kBoltzmann; }
constexpr double mbar_to_pa(double mbar) { return mbar * 100.0; }
constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace units
}  // namespace levexp

#endif  // LEVEXP_UNITS_HPP
