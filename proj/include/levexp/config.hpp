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

// Run configuration: a flat "key = value" text file, '#' starts a comment.
// The unit lives in the key name and is converted to SI on load; see the
// table in units.hpp and configs/paper_nominal.cfg for every key.
//
// Axis keys carry the axis letter: omega_z_khz, sigma0_z_pm, ... The
// simulated axes are listed in `axes`. A u or v axis without its own
// sigma0/omega keys takes its initial state from rotating the x and y
// states by plane_rotation_deg.

#ifndef LEVEXP_CONFIG_HPP
#define LEVEXP_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "levexp/core_model.hpp"
#include "levexp/moment_propagator.hpp"
#include "levexp/trajectory_ensemble.hpp"

namespace levexp {

struct AxisConfig {
    AxisParams params;
    GaussianState initial;  // released state at feedback-off
    double sigma0 = 0.0;    // m
    double nbar = 0.0;      // initial occupation, for purity / coherence
    NoiseSpec noise;
    double delta_sigma = 0.0;  // measurement broadening, m
};

struct RunConfig {
    PhysicalParams physical;
    std::vector<AxisConfig> axes;
    std::optional<PaulTrapSpec> paul_trap;
    ProtocolSpec protocol;
    std::uint64_t seed_base = 1;
    std::string output_dir;  // empty when not set
    std::string source;      // file name, for messages
    /// Non-fatal observations made while loading, e.g. sigma0 / nbar
    /// mismatches beyond 5%.
    std::vector<std::string> notes;

    /// Throws ConfigError when the axis is not configured.
    const AxisConfig& axis(AxisLabel label) const;
    bool has_axis(AxisLabel label) const;

    /// Dark schedule on [0, t_end] for the axis (Mathieu when a Paul trap is
    /// configured and the axis is harmonic_jump).
    StiffnessSchedule dark_schedule(AxisLabel label, double t_end) const;
    /// Everything run_ensemble needs for releases up to t_end.
    ShotConfig shot_config(AxisLabel label, double t_end) const;
};

/// Parses configuration text. Errors carry "source:line: key: reason".
RunConfig parse_config(std::string_view text, std::string_view source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Parses "260us", "0.26 ms", "2.6e-4" (seconds) into seconds.
double parse_duration(std::string_view text);

}  // namespace levexp

#endif  // LEVEXP_CONFIG_HPP
