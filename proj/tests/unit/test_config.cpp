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

#include "levexp/config.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gtest/gtest.h"
#include "levexp/errors.hpp"
#include "levexp/units.hpp"

namespace levexp {
namespace {

const std::string kNominal = std::string(LEVEXP_SOURCE_DIR) + "/configs/paper_nominal.cfg";

const char* kMinimal = R"(mass_fg = 1.95
axes = z
potential_z = inverted
omega_z_khz = 43.5
omega_dark_z_khz = 1.4
sigma0_z_pm = 45.6
nbar_z = 10
heating_z_k_per_s = 5.91
)";

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "t.cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

TEST(Config, LoadsNominalFile) {
    const auto c = load_config(kNominal);
    EXPECT_DOUBLE_EQ(c.physical.mass, 1.95e-18);
    ASSERT_EQ(c.axes.size(), 3u);
    EXPECT_TRUE(c.has_axis(AxisLabel::u));
    EXPECT_FALSE(c.has_axis(AxisLabel::x));
    const auto& z = c.axis(AxisLabel::z);
    EXPECT_EQ(z.params.potential, PotentialKind::inverted);
    EXPECT_NEAR(z.params.trap_frequency, 2 * std::numbers::pi * 43.5e3, 1e-6);
    EXPECT_NEAR(z.sigma0, 45.6e-12, 1e-24);
    EXPECT_NEAR(z.noise.heating_rate, units::kelvin_per_s_to_watt(5.91), 1e-30);
    EXPECT_NEAR(z.delta_sigma, 321e-12, 1e-22);
    EXPECT_NEAR(c.protocol.broadening(AxisLabel::z), 321e-12, 1e-22);
    ASSERT_TRUE(c.paul_trap.has_value());
    EXPECT_NEAR(c.paul_trap->plane_rotation, std::numbers::pi / 4, 1e-15);
    EXPECT_EQ(c.protocol.release_times.size(), 14u);
    EXPECT_NEAR(c.protocol.release_times.back(), 260e-6, 1e-18);
    EXPECT_NEAR(c.protocol.measure_window, 500e-6, 1e-18);
    EXPECT_EQ(c.protocol.shots_per_release, 400);
    EXPECT_TRUE(c.protocol.retrap_heating);
    EXPECT_EQ(c.seed_base, 1u);
    // The measured sigma0 and nbar agree, so nothing is flagged.
    EXPECT_TRUE(c.notes.empty());
}

TEST(Config, PlaneAxesComeFromRotatedXYStates) {
    const auto c = load_config(kNominal);
    const auto& u = c.axis(AxisLabel::u);
    const auto& v = c.axis(AxisLabel::v);
    // 45 degrees: equal shares of the x and y position variances.
    const double expect = std::sqrt(0.5 * (183e-12 * 183e-12 + 435e-12 * 435e-12));
    EXPECT_NEAR(u.sigma0, expect, 1e-6 * expect);
    EXPECT_NEAR(v.sigma0, expect, 1e-6 * expect);
    EXPECT_NEAR(u.params.trap_frequency / (2e3 * std::numbers::pi), 173.18, 0.05);
    EXPECT_NEAR(u.nbar, 2240, 5);
    EXPECT_NEAR(u.params.dark_frequency, 2 * std::numbers::pi * 2.7e3, 1e-6);
    EXPECT_EQ(u.params.potential, PotentialKind::harmonic_jump);
}

TEST(Config, ShotConfigAndDarkSchedule) {
    const auto c = load_config(kNominal);
    const auto sc = c.shot_config(AxisLabel::z, 300e-6);
    EXPECT_EQ(sc.axis.label, AxisLabel::z);
    EXPECT_DOUBLE_EQ(sc.mass, 1.95e-18);
    EXPECT_GE(sc.dark.t_end(), 300e-6);
    // The plane axes are released into the Mathieu potential.
    const auto s = c.dark_schedule(AxisLabel::u, 100e-6);
    const double m = c.physical.mass;
    EXPECT_NE(s.stiffness(1e-6, m), s.stiffness(11e-6, m));
    EXPECT_THROW(c.axis(AxisLabel::x), ConfigError);
}

TEST(Config, MinimalConfigUsesDefaults) {
    const auto c = parse_config(kMinimal, "t.cfg");
    EXPECT_FALSE(c.paul_trap.has_value());
    EXPECT_NEAR(c.protocol.measure_window, 500e-6, 1e-18);
    EXPECT_TRUE(c.output_dir.empty());
    EXPECT_EQ(c.source, "t.cfg");
}

TEST(Config, ErrorsNameLineAndKey) {
    // Line 4 carries the bad value.
    std::string text = kMinimal;
    text.replace(text.find("omega_z_khz = 43.5"), 18, "omega_z_khz = -43.5");
    const auto e = error_of(text);
    EXPECT_NE(e.find("t.cfg:4"), std::string::npos) << e;
    EXPECT_NE(e.find("omega_z_khz"), std::string::npos) << e;

    EXPECT_NE(error_of(std::string(kMinimal) + "omgea_z_khz = 3\n").find("t.cfg:9"),
              std::string::npos);
    EXPECT_NE(error_of(std::string(kMinimal) + "nbar_z = 11\n").find("nbar_z"), std::string::npos);
    EXPECT_NE(error_of(std::string(kMinimal) + "this line has no equals\n").find("t.cfg:9"),
              std::string::npos);
}

TEST(Config, RejectsInvalidPhysics) {
    const std::string base = kMinimal;
    auto with = [&](const std::string& from, const std::string& to) {
        std::string t = base;
        t.replace(t.find(from), from.size(), to);
        return t;
    };
    EXPECT_THROW(parse_config(with("mass_fg = 1.95", "mass_fg = 0"), "t"), ConfigError);
    EXPECT_THROW(parse_config(with("mass_fg = 1.95\n", ""), "t"), ConfigError);
    // Below the zero-point motion (about 9.9 pm at 43.5 kHz).
    EXPECT_THROW(parse_config(with("sigma0_z_pm = 45.6", "sigma0_z_pm = 5"), "t"), ConfigError);
    EXPECT_THROW(parse_config(with("inverted", "quartic"), "t"), ConfigError);
    EXPECT_THROW(parse_config(with("axes = z", "axes = z, w"), "t"), ConfigError);
    EXPECT_THROW(parse_config(with("axes = z", "axes = z, x"), "t"), ConfigError);
    EXPECT_THROW(parse_config(base + "shots_per_release = 0\n", "t"), ConfigError);
    // Heating and Gamma1 given together must agree.
    EXPECT_THROW(parse_config(base + "gamma1_z_per_s = 1\n", "t"), ConfigError);
    EXPECT_NO_THROW(parse_config(base + "gamma1_z_per_s = 2830906.19\n", "t"));
}

TEST(Config, PaulTrapValidation) {
    std::string text = std::string(kMinimal) +
                       "rf_frequency_khz = 25\nmathieu_a = 0\nmathieu_q = 1.5\n";
    EXPECT_THROW(parse_config(text, "t"), ConfigError);
    // A plane axis cannot oscillate faster than half the RF drive.
    std::string fast = R"(mass_fg = 1.95
axes = u
rf_frequency_khz = 25
potential_u = harmonic_jump
omega_u_khz = 173
omega_dark_u_khz = 20
sigma0_u_pm = 330
nbar_u = 2000
heating_u_k_per_s = 8
)";
    EXPECT_THROW(parse_config(fast, "t"), ConfigError);
}

TEST(Config, MismatchedSigmaAndNbarIsNotedNotRejected) {
    std::string text = kMinimal;
    text.replace(text.find("nbar_z = 10"), 11, "nbar_z = 30");
    const auto c = parse_config(text, "t");
    ASSERT_EQ(c.notes.size(), 1u);
    EXPECT_NE(c.notes[0].find("z"), std::string::npos);
}

TEST(Config, ParseDuration) {
    EXPECT_DOUBLE_EQ(parse_duration("260us"), 260e-6);
    EXPECT_DOUBLE_EQ(parse_duration("0.26 ms"), 0.26e-3);
    EXPECT_DOUBLE_EQ(parse_duration("2.6e-4"), 2.6e-4);
    EXPECT_DOUBLE_EQ(parse_duration("15ns"), 15e-9);
    EXPECT_DOUBLE_EQ(parse_duration("1s"), 1.0);
    EXPECT_THROW(parse_duration("-1us"), ConfigError);
    EXPECT_THROW(parse_duration("3 parsecs"), ConfigError);
    EXPECT_THROW(parse_duration(""), ConfigError);
}

}  // namespace
}  // namespace levexp
