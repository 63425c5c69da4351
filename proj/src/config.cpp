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

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "levexp/errors.hpp"
#include "levexp/io.hpp"
#include "levexp/units.hpp"

namespace levexp {

namespace {

constexpr std::string_view kAxisLetters = "xyzuv";

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

struct Entry {
    std::string value;
    int line = 0;
};

// Key/value store that remembers where each key came from.
class Keys {
  public:
    Keys(std::string_view text, std::string source) : source_(std::move(source)) {
        int line_no = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            const auto end = text.find('\n', start);
            std::string_view line = text.substr(
                start, end == std::string_view::npos ? text.size() - start : end - start);
            start = end == std::string_view::npos ? text.size() + 1 : end + 1;
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string_view::npos)
                line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError(where(line_no) + "expected 'key = value', got '" +
                                  std::string(line) + "'");
            const std::string key(trim(line.substr(0, eq)));
            const std::string value(trim(line.substr(eq + 1)));
            if (key.empty()) throw ConfigError(where(line_no) + "empty key");
            if (value.empty()) throw ConfigError(where(line_no) + key + ": empty value");
            if (const auto it = map_.find(key); it != map_.end())
                throw ConfigError(where(line_no) + key + ": duplicate key (first set on line " +
                                  std::to_string(it->second.line) + ")");
            map_[key] = Entry{value, line_no};
        }
    }

    bool has(const std::string& key) const { return map_.count(key) != 0; }

    std::string where(int line) const { return source_ + ":" + std::to_string(line) + ": "; }

    [[noreturn]] void fail(const std::string& key, const std::string& why) const {
        const auto it = map_.find(key);
        if (it == map_.end()) throw ConfigError(source_ + ": " + key + ": " + why);
        throw ConfigError(where(it->second.line) + key + ": " + why);
    }

    const std::string& raw(const std::string& key) {
        auto it = map_.find(key);
        if (it == map_.end()) throw ConfigError(source_ + ": missing required key '" + key + "'");
        return it->second.value;
    }

    double number(const std::string& key) {
        const std::string& v = raw(key);
        try {
            const double x = io::parse_double(v, key);
            if (!std::isfinite(x)) fail(key, "must be finite");
            return x;
        } catch (const ConfigError&) {
            fail(key, "'" + v + "' is not a number");
        }
    }

    double number_or(const std::string& key, double fallback) {
        return has(key) ? number(key) : fallback;
    }

    long long integer(const std::string& key) {
        const std::string& v = raw(key);
        try {
            return io::parse_integer(v, key);
        } catch (const ConfigError&) {
            fail(key, "'" + v + "' is not an integer");
        }
    }

    bool boolean(const std::string& key) {
        std::string v = raw(key);
        std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
        if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
        if (v == "false" || v == "no" || v == "off" || v == "0") return false;
        fail(key, "'" + v + "' is not a boolean (true/false)");
    }

    std::vector<std::string> list(const std::string& key) {
        std::vector<std::string> out;
        std::string_view v = raw(key);
        std::size_t start = 0;
        while (start <= v.size()) {
            const auto comma = v.find(',', start);
            const auto item =
                trim(v.substr(start, comma == std::string_view::npos ? v.size() - start : comma - start));
            if (item.empty()) fail(key, "empty list element");
            out.emplace_back(item);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        return out;
    }

    void reject_unknown(const std::set<std::string>& known) const {
        for (const auto& [key, e] : map_)
            if (!known.count(key)) throw ConfigError(where(e.line) + "unknown key '" + key + "'");
    }

    const std::string& source() const { return source_; }

  private:
    std::string source_;
    std::map<std::string, Entry> map_;
};

std::string axis_key(std::string_view prefix, char axis, std::string_view suffix) {
    std::string k(prefix);
    k += '_';
    k += axis;
    if (!suffix.empty()) {
        k += '_';
        k += suffix;
    }
    return k;
}

struct RawAxis {
    bool has_state = false;
    double trap_frequency = 0.0;
    double sigma0 = 0.0;
    double nbar = -1.0;
};

// Optical-trap state of a source axis (x or y) for the plane rotation.
RawAxis read_state(Keys& k, char a, double mass) {
    RawAxis r;
    const std::string om = axis_key("omega", a, "khz");
    const std::string s0 = axis_key("sigma0", a, "pm");
    if (!k.has(om) || !k.has(s0)) return r;
    r.trap_frequency = units::khz_to_rad_per_s(k.number(om));
    if (!(r.trap_frequency > 0.0)) k.fail(om, "must be positive");
    r.sigma0 = units::pm_to_m(k.number(s0));
    if (!(r.sigma0 > 0.0)) k.fail(s0, "must be positive");
    if (r.sigma0 < zero_point_motion(r.trap_frequency, mass) * (1.0 - 1e-9))
        k.fail(s0, "below the zero-point motion of the optical trap (Heisenberg bound)");
    const std::string nb = axis_key("nbar", a, "");
    if (k.has(nb)) {
        r.nbar = k.number(nb);
        if (!(r.nbar >= 0.0)) k.fail(nb, "must be >= 0");
    }
    r.has_state = true;
    return r;
}

std::set<std::string> known_keys() {
    std::set<std::string> keys = {
        "mass_fg", "radius_nm", "charge_count", "seed_base", "output_dir", "axes",
        "pressure_mbar", "rf_frequency_khz", "rf_voltage_v", "plane_rotation_deg",
        "mathieu_a", "mathieu_q", "feedback_off_lead_us", "release_times_us",
        "measure_window_us", "shots_per_release", "sample_rate_khz", "retrap_heating",
        "detector_noise_psd_m2_per_hz"};
    // Keys of axes that are not simulated are still legal; they document the
    // experiment (and x/y feed the u/v rotation).
    for (char a : kAxisLetters) {
        for (const auto& key :
             {axis_key("omega", a, "khz"), axis_key("omega_dark", a, "khz"),
              axis_key("potential", a, ""), axis_key("release_phase", a, "deg"),
              axis_key("sigma0", a, "pm"), axis_key("nbar", a, ""),
              axis_key("heating", a, "k_per_s"), axis_key("gamma1", a, "per_s"),
              axis_key("gas_damping", a, "per_s"), axis_key("delta_sigma", a, "pm")})
            keys.insert(key);
    }
    return keys;
}

}  // namespace

const AxisConfig& RunConfig::axis(AxisLabel label) const {
    for (const auto& a : axes)
        if (a.params.label == label) return a;
    throw ConfigError((source.empty() ? std::string("config") : source) + ": axis '" +
                      std::string(to_string(label)) + "' is not configured (see 'axes')");
}

bool RunConfig::has_axis(AxisLabel label) const {
    return std::any_of(axes.begin(), axes.end(),
                       [&](const AxisConfig& a) { return a.params.label == label; });
}

StiffnessSchedule RunConfig::dark_schedule(AxisLabel label, double t_end) const {
    const AxisConfig& a = axis(label);
    return make_dark_schedule(a.params, physical.mass, 0.0, std::max(t_end, 0.0), paul_trap);
}

ShotConfig RunConfig::shot_config(AxisLabel label, double t_end) const {
    const AxisConfig& a = axis(label);
    ShotConfig c;
    c.axis = a.params;
    c.mass = physical.mass;
    c.initial = a.initial;
    c.dark = dark_schedule(label, t_end);
    c.noise = a.noise;
    c.protocol = protocol;
    return c;
}

RunConfig parse_config(std::string_view text, std::string_view source) {
    Keys k(text, std::string(source));
    k.reject_unknown(known_keys());
    RunConfig cfg;
    cfg.source = std::string(source);

    // Physical.
    cfg.physical.mass = units::fg_to_kg(k.number("mass_fg"));
    if (!(cfg.physical.mass > 0.0)) k.fail("mass_fg", "must be positive");
    cfg.physical.radius = units::nm_to_m(k.number_or("radius_nm", 0.0));
    if (cfg.physical.radius < 0.0) k.fail("radius_nm", "must be >= 0");
    if (k.has("charge_count")) cfg.physical.charge_count = static_cast<int>(k.integer("charge_count"));
    const double mass = cfg.physical.mass;

    if (k.has("seed_base")) {
        const long long s = k.integer("seed_base");
        if (s < 0) k.fail("seed_base", "must be >= 0");
        cfg.seed_base = static_cast<std::uint64_t>(s);
    }
    if (k.has("output_dir")) cfg.output_dir = k.raw("output_dir");
    const double pressure = units::mbar_to_pa(k.number_or("pressure_mbar", 0.0));
    if (pressure < 0.0) k.fail("pressure_mbar", "must be >= 0");

    // Paul trap.
    double plane_rotation = units::deg_to_rad(k.number_or("plane_rotation_deg", 0.0));
    if (k.has("rf_frequency_khz")) {
        PaulTrapSpec pt;
        pt.rf_frequency = units::khz_to_rad_per_s(k.number("rf_frequency_khz"));
        if (!(pt.rf_frequency > 0.0)) k.fail("rf_frequency_khz", "must be positive");
        pt.mathieu_a = k.number_or("mathieu_a", 0.0);
        pt.rf_voltage = k.number_or("rf_voltage_v", 0.0);
        pt.plane_rotation = plane_rotation;
        if (k.has("mathieu_q")) {
            pt.mathieu_q = k.number("mathieu_q");
            try {
                pt.validate();
            } catch (const Error& e) {
                k.fail("mathieu_q", e.what());
            }
        }
        cfg.paul_trap = pt;
    } else {
        for (const char* key : {"mathieu_a", "mathieu_q", "rf_voltage_v"})
            if (k.has(key)) k.fail(key, "needs rf_frequency_khz");
    }

    // Protocol.
    ProtocolSpec& pr = cfg.protocol;
    pr.feedback_off_lead = units::us_to_s(k.number_or("feedback_off_lead_us", 0.0));
    if (pr.feedback_off_lead < 0.0) k.fail("feedback_off_lead_us", "must be >= 0");
    if (k.has("release_times_us")) {
        for (const auto& item : k.list("release_times_us")) {
            double t = 0.0;
            try {
                t = io::parse_double(item, "release_times_us");
            } catch (const ConfigError&) {
                k.fail("release_times_us", "'" + item + "' is not a number");
            }
            if (!(std::isfinite(t) && t >= 0.0)) k.fail("release_times_us", "times must be >= 0");
            pr.release_times.push_back(units::us_to_s(t));
        }
    }
    pr.measure_window = units::us_to_s(k.number_or("measure_window_us", 500.0));
    if (!(pr.measure_window > 0.0)) k.fail("measure_window_us", "must be positive");
    if (k.has("shots_per_release")) {
        const long long n = k.integer("shots_per_release");
        if (n < 1) k.fail("shots_per_release", "must be >= 1");
        pr.shots_per_release = static_cast<int>(n);
    }
    pr.sample_rate = 1e3 * k.number_or("sample_rate_khz", 0.0);
    if (pr.sample_rate < 0.0) k.fail("sample_rate_khz", "must be >= 0 (0 selects 20x the trap frequency)");
    if (k.has("retrap_heating")) pr.retrap_heating = k.boolean("retrap_heating");
    pr.detector_noise_psd = k.number_or("detector_noise_psd_m2_per_hz", 0.0);
    if (pr.detector_noise_psd < 0.0) k.fail("detector_noise_psd_m2_per_hz", "must be >= 0");

    // Source states of the optical x/y modes for rotated axes.
    RawAxis source_state[2];
    for (int i = 0; i < 2; ++i) source_state[i] = read_state(k, "xy"[i], mass);

    // Axes.
    std::set<char> seen;
    for (const auto& name : k.list("axes")) {
        if (name.size() != 1 || kAxisLetters.find(name[0]) == std::string_view::npos)
            k.fail("axes", "unknown axis '" + name + "' (expected x, y, z, u or v)");
        const char a = name[0];
        if (!seen.insert(a).second) k.fail("axes", "axis '" + name + "' listed twice");

        AxisConfig ax;
        ax.params.label = parse_axis_label(name);
        const bool rotated = (a == 'u' || a == 'v');

        const std::string pot = axis_key("potential", a, "");
        try {
            ax.params.potential = parse_potential_kind(k.raw(pot));
        } catch (const ConfigError& e) {
            if (!k.has(pot)) throw;
            k.fail(pot, e.what());
        }
        const std::string dark = axis_key("omega_dark", a, "khz");
        ax.params.dark_frequency = units::khz_to_rad_per_s(k.number_or(dark, 0.0));
        if (ax.params.dark_frequency < 0.0) k.fail(dark, "must be >= 0");
        if (ax.params.dark_frequency == 0.0 && ax.params.potential != PotentialKind::free)
            k.fail(k.has(dark) ? dark : pot, "dark frequency 0 is only allowed with potential free");
        const std::string phase = axis_key("release_phase", a, "deg");
        ax.params.release_phase = units::deg_to_rad(k.number_or(phase, 0.0));

        const std::string om = axis_key("omega", a, "khz");
        const std::string s0 = axis_key("sigma0", a, "pm");
        const std::string nb = axis_key("nbar", a, "");
        if (rotated && !k.has(s0)) {
            if (!cfg.paul_trap && !k.has("plane_rotation_deg"))
                k.fail("axes", "axis '" + name + "' needs " + s0 + " or plane_rotation_deg with x/y states");
            if (!source_state[0].has_state || !source_state[1].has_state)
                k.fail("axes", "axis '" + name +
                                   "' is derived from x and y: set omega_x_khz, sigma0_x_pm, "
                                   "omega_y_khz, sigma0_y_pm");
            const auto sx = released_state(source_state[0].sigma0, source_state[0].trap_frequency, mass);
            const auto sy = released_state(source_state[1].sigma0, source_state[1].trap_frequency, mass);
            const auto [su, sv] = rotate_plane(sx, sy, plane_rotation);
            ax.initial = a == 'u' ? su : sv;
            ax.sigma0 = std::sqrt(ax.initial.var_position);
            ax.params.trap_frequency =
                k.has(om) ? units::khz_to_rad_per_s(k.number(om))
                          : std::sqrt(ax.initial.var_momentum / ax.initial.var_position) / mass;
            ax.nbar = k.has(nb) ? k.number(nb) : 0.5 * (1.0 / purity(ax.initial) - 1.0);
        } else {
            ax.params.trap_frequency = units::khz_to_rad_per_s(k.number(om));
            if (!(ax.params.trap_frequency > 0.0)) k.fail(om, "must be positive");
            ax.sigma0 = units::pm_to_m(k.number(s0));
            if (!(ax.sigma0 > 0.0)) k.fail(s0, "must be positive");
            if (ax.sigma0 < zero_point_motion(ax.params.trap_frequency, mass) * (1.0 - 1e-9))
                k.fail(s0, "below the zero-point motion (Heisenberg bound)");
            ax.initial = released_state(ax.sigma0, ax.params.trap_frequency, mass);
            if (k.has(nb)) {
                ax.nbar = k.number(nb);
                if (!(ax.nbar >= 0.0)) k.fail(nb, "must be >= 0");
                const auto chk = check_initial_consistency(ax.sigma0, ax.nbar,
                                                           ax.params.trap_frequency, mass);
                if (std::abs(chk.relative_mismatch) > 0.05) {
                    std::ostringstream os;
                    os << "axis " << name << ": sigma0 differs from the thermal value for nbar by "
                       << 100.0 * chk.relative_mismatch << "% (both kept)";
                    cfg.notes.push_back(os.str());
                }
            } else {
                ax.nbar = 0.5 * (1.0 / purity(ax.initial) - 1.0);
            }
        }
        if (!(ax.params.trap_frequency > 0.0)) k.fail(om, "must be positive");

        // Noise: heating rate and/or gamma1.
        const std::string heat = axis_key("heating", a, "k_per_s");
        const std::string g1 = axis_key("gamma1", a, "per_s");
        const std::string damp = axis_key("gas_damping", a, "per_s");
        const double gamma = k.number_or(damp, 0.0);
        if (gamma < 0.0) k.fail(damp, "must be >= 0");
        if (k.has(heat)) {
            const double h = units::kelvin_per_s_to_watt(k.number(heat));
            if (h < 0.0) k.fail(heat, "must be >= 0");
            ax.noise = NoiseSpec::from_heating_rate(h, ax.params.trap_frequency, gamma, pressure);
            if (k.has(g1)) {
                const double g = k.number(g1);
                if (std::abs(g - ax.noise.gamma1) > 1e-6 * std::max(g, ax.noise.gamma1))
                    k.fail(g1, "inconsistent with " + heat + " (Edot = hbar Omega gamma1 gives " +
                                   io::format_double(ax.noise.gamma1) + " 1/s)");
            }
        } else if (k.has(g1)) {
            const double g = k.number(g1);
            if (g < 0.0) k.fail(g1, "must be >= 0");
            ax.noise = NoiseSpec::from_gamma1(g, ax.params.trap_frequency, gamma, pressure);
        } else {
            ax.noise.gas_damping = gamma;
            ax.noise.pressure = pressure;
        }

        const std::string ds = axis_key("delta_sigma", a, "pm");
        ax.delta_sigma = units::pm_to_m(k.number_or(ds, 0.0));
        if (ax.delta_sigma < 0.0) k.fail(ds, "must be >= 0");
        pr.measurement_broadening[ax.params.label] = ax.delta_sigma;

        try {
            ax.params.validate();
        } catch (const Error& e) {
            k.fail(pot, e.what());
        }
        if (ax.params.potential == PotentialKind::harmonic_jump && cfg.paul_trap) {
            if (!(ax.params.dark_frequency < 0.5 * cfg.paul_trap->rf_frequency))
                k.fail(dark, "secular frequency must be below half the RF frequency");
            try {
                calibrate_mathieu_from_secular(ax.params.dark_frequency,
                                               cfg.paul_trap->rf_frequency,
                                               cfg.paul_trap->mathieu_a);
            } catch (const Error& e) {
                k.fail(dark, e.what());
            }
        }
        cfg.axes.push_back(ax);
    }

    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(io::read_file(path), path.filename().string());
}

double parse_duration(std::string_view text) {
    text = trim(text);
    struct Unit {
        std::string_view suffix;
        double factor;
    };
    static constexpr Unit kUnits[] = {{"ns", 1e-9}, {"us", 1e-6}, {"ms", 1e-3}, {"s", 1.0}};
    double factor = 1.0;
    for (const auto& u : kUnits) {
        if (text.size() > u.suffix.size() && text.ends_with(u.suffix)) {
            text.remove_suffix(u.suffix.size());
            factor = u.factor;
            break;
        }
    }
    const double v = io::parse_double(trim(text), "duration");
    if (!(v >= 0.0)) throw ConfigError("duration must be >= 0");
    return v * factor;
}

}  // namespace levexp
