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

#include "levexp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "CLI11.hpp"
#include "levexp/analytic_dynamics.hpp"
#include "levexp/config.hpp"
#include "levexp/errors.hpp"
#include "levexp/estimation.hpp"
#include "levexp/io.hpp"
#include "levexp/moment_propagator.hpp"
#include "levexp/svg.hpp"
#include "levexp/trajectory_ensemble.hpp"
#include "levexp/units.hpp"

namespace fs = std::filesystem;

namespace levexp::cli {

namespace {

// Raised for bad flags found after CLI11 has parsed them.
struct UsageError : Error {
    using Error::Error;
};

// Raised by simulation stages so the exit code does not depend on which
// library error type came out.
struct SimulationFailure : Error {
    using Error::Error;
};

fs::path output_dir(const std::string& flag, const RunConfig* cfg) {
    fs::path dir;
    if (!flag.empty()) {
        dir = flag;
    } else if (const char* env = std::getenv("LEVEXP_OUTPUT_DIR"); env && *env) {
        dir = env;
    } else if (cfg && !cfg->output_dir.empty()) {
        dir = cfg->output_dir;  // relative to the working directory
    } else {
        dir = ".";
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw ConfigError("output directory '" + dir.string() + "' cannot be created");
    const fs::path probe = dir / (".levexp_probe." + std::to_string(::getpid()));
    {
        std::ofstream f(probe);
        if (!f) throw ConfigError("output directory '" + dir.string() + "' is not writable");
    }
    fs::remove(probe, ec);
    return dir;
}

std::string us_tag(double t) {
    // 2.6e-4 -> "260us"; keeps file names stable and short.
    std::ostringstream os;
    os << std::setprecision(6) << t * 1e6 << "us";
    return os.str();
}

double duration_flag(const std::string& text, const char* flag) {
    try {
        const double t = parse_duration(text);
        if (!(t >= 0.0)) throw ConfigError("must be >= 0");
        return t;
    } catch (const ConfigError& e) {
        throw UsageError(std::string(flag) + ": " + e.what() + " (e.g. 260us, 0.26ms)");
    }
}

int default_workers() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(std::min(n, 64u));
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    if (n > 1) v.back() = b;
    return v;
}

void write(const fs::path& path, const std::string& content, std::ostream& out,
           std::vector<fs::path>& written) {
    io::write_file_atomic(path, content);
    written.push_back(path);
    (void)out;
}

void list_written(const std::vector<fs::path>& written, std::ostream& out) {
    for (const auto& p : written) out << "wrote " << p.string() << '\n';
}

std::string nm(double meters) {
    std::ostringstream os;
    os << std::setprecision(4) << meters * 1e9 << " nm";
    return os.str();
}

std::string pm(double meters) {
    std::ostringstream os;
    os << std::setprecision(4) << meters * 1e12 << " pm";
    return os.str();
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string config;
    std::string axis = "z";
    std::string t_r = "260us";
    int shots = 0;
    std::optional<std::uint64_t> seed;
    int workers = 0;
    std::string output_dir;
    bool no_svg = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    const RunConfig cfg = load_config(a.config);
    const AxisLabel label = parse_axis_label(a.axis);
    const AxisConfig& ax = cfg.axis(label);
    const double t_r = duration_flag(a.t_r, "--t-r");
    if (a.shots != 0 && a.shots < 2) throw UsageError("--shots: at least 2 shots are needed");
    if (a.workers < 0) throw UsageError("--workers: must be >= 0");
    for (const auto& n : cfg.notes) out << "note: " << n << '\n';
    const fs::path dir = output_dir(a.output_dir, &cfg);

    EnsembleOptions opt;
    opt.seed_base = a.seed.value_or(cfg.seed_base);
    opt.workers = a.workers > 0 ? a.workers : default_workers();
    opt.shots = a.shots > 0 ? a.shots : cfg.protocol.shots_per_release;
    if (opt.shots < 2) throw UsageError("--shots: at least 2 shots are needed");

    EnsembleResult res;
    try {
        res = run_ensemble(cfg.shot_config(label, t_r), t_r, opt);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw SimulationFailure(e.what());
    }

    const std::string prefix = "simulate_" + std::string(to_string(label)) + "_" + us_tag(t_r);
    std::vector<fs::path> written;
    write(dir / (prefix + "_shots.csv"), io::shots_to_csv(res.shots), out, written);
    write(dir / (prefix + "_histogram.csv"), io::histogram_to_csv(res.histogram2d), out, written);
    if (!a.no_svg) {
        svg::HistogramPanel panel;
        const double m_omega = cfg.physical.mass * ax.params.trap_frequency;
        panel.title = "axis " + std::string(to_string(label)) + ", t_r = " + us_tag(t_r) + ", " +
                      std::to_string(res.shots.size() - res.invalid_count) + " shots";
        panel.x_label = "position along major axis (nm)";
        panel.y_label = "p / (m Omega) (nm)";
        panel.hist = res.histogram2d;
        panel.x_scale = 1e9;
        panel.y_scale = 1e9 / m_omega;
        panel.sigma_x = res.major_sigma * 1e9;
        panel.sigma_y = res.minor_sigma * 1e9;
        // Overlay centred on the histogram mean.
        double sx = 0, sy = 0, n = 0;
        const auto& h = res.histogram2d;
        for (std::size_t i = 0; i + 1 < h.x_edges.size(); ++i)
            for (std::size_t j = 0; j + 1 < h.y_edges.size(); ++j) {
                const double c = static_cast<double>(h.counts[i][j]);
                sx += c * 0.5 * (h.x_edges[i] + h.x_edges[i + 1]);
                sy += c * 0.5 * (h.y_edges[j] + h.y_edges[j + 1]);
                n += c;
            }
        if (n > 0) {
            panel.mean_x = sx / n * panel.x_scale;
            panel.mean_y = sy / n * panel.y_scale;
        }
        write(dir / (prefix + "_histogram.svg"), svg::render(panel), out, written);
    }

    const double broadened = apply_measurement_broadening(res.sample_sigma, ax.delta_sigma);
    out << "axis " << to_string(label) << ", t_r = " << us_tag(t_r) << ": sigma = "
        << nm(res.sample_sigma) << " +- " << nm(res.sample_sigma_err) << " ("
        << res.shots.size() - res.invalid_count << " valid shots, " << res.invalid_count
        << " invalid)\n";
    if (ax.delta_sigma > 0.0)
        out << "  with measurement broadening " << pm(ax.delta_sigma) << ": " << nm(broadened)
            << '\n';
    out << "  principal axes: " << nm(res.major_sigma) << " x " << nm(res.minor_sigma)
        << (res.minor_axis_low_confidence ? " (minor axis at lock-in resolution)" : "")
        << ", rotation " << std::setprecision(4) << res.rotation_angle * 180.0 / std::numbers::pi
        << " deg\n";
    out << "  gaussianity p-value (min over marginals): " << std::setprecision(3)
        << res.gaussianity_pvalue << '\n';
    list_written(written, out);
    return kExitOk;
}

// -------------------------------------------------------------------- scan

struct ScanArgs {
    std::string config;
    std::string axis = "z";
    std::string t_r_min = "0us";
    std::string t_r_max = "260us";
    int points = 100;
    std::string engine = "analytic";
    int shots = 0;
    std::optional<std::uint64_t> seed;
    int workers = 0;
    std::string output_dir;
    bool trace = false;
    bool with_broadening = false;
    bool no_svg = false;
};

int cmd_scan(const ScanArgs& a, std::ostream& out) {
    const RunConfig cfg = load_config(a.config);
    const AxisLabel label = parse_axis_label(a.axis);
    const AxisConfig& ax = cfg.axis(label);
    const double t0 = duration_flag(a.t_r_min, "--t-r-min");
    const double t1 = duration_flag(a.t_r_max, "--t-r-max");
    if (!(t1 > t0)) throw UsageError("--t-r-max must exceed --t-r-min");
    if (a.points < 2) throw UsageError("--points: at least 2 points are needed");
    if (a.engine != "analytic" && a.engine != "moments" && a.engine != "ensemble")
        throw UsageError("--engine: expected analytic, moments or ensemble");
    if (a.shots != 0 && a.shots < 2) throw UsageError("--shots: at least 2 shots are needed");
    for (const auto& n : cfg.notes) out << "note: " << n << '\n';
    const fs::path dir = output_dir(a.output_dir, &cfg);

    const double mass = cfg.physical.mass;
    const auto times = linspace(t0, t1, a.points);
    ExpansionCurve curve;
    curve.times = times;
    curve.axis = ax.params;
    curve.regime = ax.params.potential == PotentialKind::inverted ? Regime::inverted
                   : ax.params.potential == PotentialKind::free   ? Regime::free
                                                                  : Regime::jump;
    std::vector<GaussianState> states;
    std::vector<Shot> all_shots;
    const std::string tag = "scan_" + std::string(to_string(label)) + "_" + a.engine;
    std::vector<fs::path> written;

    try {
        if (a.engine == "analytic") {
            curve = expansion_curve(times, ax.sigma0, ax.params, ax.noise, mass);
            if (a.trace)
                for (double t : times)
                    states.push_back(second_moments(t, ax.initial, ax.params, ax.noise, mass));
        } else if (a.engine == "moments") {
            const StiffnessSchedule sched = cfg.dark_schedule(label, std::max(t1, 1e-12));
            states = propagate_moments_trace(ax.initial, sched, ax.noise, mass, times,
                                             default_dt_max(sched, mass));
            for (const auto& s : states) curve.sigma.push_back(std::sqrt(s.var_position));
        } else {
            EnsembleOptions opt;
            opt.seed_base = a.seed.value_or(cfg.seed_base);
            opt.workers = a.workers > 0 ? a.workers : default_workers();
            opt.shots = a.shots > 0 ? a.shots : cfg.protocol.shots_per_release;
            if (opt.shots < 2) throw UsageError("--shots: at least 2 shots are needed");
            const ShotConfig sc = cfg.shot_config(label, t1);
            for (std::size_t i = 0; i < times.size(); ++i) {
                // Disjoint seed blocks per release time.
                EnsembleOptions o = opt;
                o.seed_base = opt.seed_base + i * static_cast<std::uint64_t>(opt.shots);
                const auto res = run_ensemble(sc, times[i], o);
                curve.sigma.push_back(res.sample_sigma);
                curve.sigma_err.push_back(res.sample_sigma_err);
                if (a.trace) all_shots.insert(all_shots.end(), res.shots.begin(), res.shots.end());
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const UsageError&) {
        throw;
    } catch (const Error& e) {
        throw SimulationFailure(e.what());
    }

    if (a.with_broadening) {
        for (std::size_t i = 0; i < curve.sigma.size(); ++i) {
            curve.sigma[i] = apply_measurement_broadening(curve.sigma[i], ax.delta_sigma);
        }
    }
    write(dir / (tag + ".csv"), io::curve_to_csv(curve), out, written);

    svg::LinePlot plot;
    plot.title = "axis " + std::string(to_string(label)) + ", " + a.engine + " engine";
    plot.x_label = "release time t_r (us)";
    plot.y_label = "sigma (nm)";
    plot.log_y = true;
    auto to_series = [](const ExpansionCurve& c, std::string label, std::string color) {
        svg::Series s;
        s.label = std::move(label);
        s.color = std::move(color);
        for (std::size_t i = 0; i < c.times.size(); ++i) {
            s.x.push_back(c.times[i] * 1e6);
            s.y.push_back(c.sigma[i] * 1e9);
        }
        return s;
    };
    auto main_series = to_series(curve, a.engine, "#1f77b4");
    main_series.markers = a.engine == "ensemble";
    plot.series.push_back(main_series);

    if (a.engine == "analytic") {
        AxisParams free_axis = ax.params;
        free_axis.potential = PotentialKind::free;
        free_axis.dark_frequency = 0.0;
        ExpansionCurve free = expansion_curve(times, ax.sigma0, free_axis, ax.noise, mass);
        if (a.with_broadening)
            for (auto& s : free.sigma) s = apply_measurement_broadening(s, ax.delta_sigma);
        write(dir / ("scan_" + std::string(to_string(label)) + "_free.csv"), io::curve_to_csv(free),
              out, written);
        auto fs_ = to_series(free, "free expansion", "#555555");
        fs_.dashed = true;
        plot.series.push_back(fs_);
    }
    if (a.trace) {
        if (a.engine == "ensemble")
            write(dir / (tag + "_shots.csv"), io::shots_to_csv(all_shots), out, written);
        else
            write(dir / (tag + "_moments.csv"), io::moments_to_csv(times, states), out, written);
    }
    if (!a.no_svg) write(dir / (tag + ".svg"), svg::render(plot), out, written);

    out << "axis " << to_string(label) << ", " << a.engine << ": sigma(" << us_tag(times.front())
        << ") = " << nm(curve.sigma.front()) << ", sigma(" << us_tag(times.back())
        << ") = " << nm(curve.sigma.back()) << ", expansion ratio "
        << std::setprecision(5) << expansion_ratio(curve.sigma.back(), curve.sigma.front()) << '\n';
    list_written(written, out);
    return kExitOk;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
    std::string data;
    std::string model = "inverted";
    bool report = false;
    std::string config;
    std::string axis = "z";
    std::optional<double> mass_fg;
    std::optional<double> nbar0;
    std::optional<double> broadening_pm;
    std::optional<double> rf_khz;
    std::optional<double> mathieu_a;
    std::string guess = "data";
    std::vector<std::string> fix;
    std::string output_dir;
    std::string output;
    bool no_svg = false;
};

int fit_param_from_name(const std::string& name) {
    for (int i = 0; i < kNumFitParams; ++i)
        if (fit_param_name(i) == name) return i;
    std::string all;
    for (int i = 0; i < kNumFitParams; ++i) all += (i ? ", " : "") + std::string(fit_param_name(i));
    throw UsageError("--fix: unknown parameter '" + name + "' (one of " + all + ")");
}

std::string fit_report(const io::FitRecord& rec, double sigma_model_tmax, double t_max) {
    const FitResult& f = rec.fit;
    std::ostringstream os;
    os << std::setprecision(6);
    os << "model " << to_string(f.model) << ", axis " << to_string(rec.axis) << ", "
       << f.n_points << " points, " << f.iterations << " iterations\n";
    const auto p = f.params.to_array();
    struct Row {
        const char* unit;
        double scale;
    };
    const Row rows[kNumFitParams] = {{"1/s", 1.0},
                                     {"kHz (/2pi)", 1.0 / (units::kTwoPi * 1e3)},
                                     {"kHz (/2pi)", 1.0 / (units::kTwoPi * 1e3)},
                                     {"pm^2", 1e24},
                                     {"rad", 1.0}};
    for (int i = 0; i < kNumFitParams; ++i) {
        if (f.model == FitModel::inverted && i == kReleasePhase) continue;
        os << "  " << std::left << std::setw(16) << fit_param_name(i) << std::right
           << std::setw(14) << p[i] * rows[i].scale;
        if (f.fixed[i])
            os << "   (fixed)";
        else
            os << " +- " << std::setw(12) << f.stderr_of(i) * rows[i].scale;
        os << "  " << rows[i].unit << '\n';
    }
    const double edot = kHbar * f.params.trap_frequency * f.params.gamma1;
    os << "  heating rate    " << std::setw(14) << units::watt_to_kelvin_per_s(edot)
       << "  K/s (k_B units)\n";
    os << "residual rms " << f.residual_rms << " m, reduced chi2 " << f.residual_variance << '\n';
    const double eta = expansion_ratio(sigma_model_tmax, std::sqrt(f.params.sigma0_sq));
    os << "expansion ratio eta(" << us_tag(t_max) << ") = " << eta << ", squeezing "
       << squeezing_db(eta) << " dB\n";
    os << "correlations:\n";
    for (int i = 0; i < kNumFitParams; ++i) {
        if (f.fixed[i]) continue;
        os << "  " << std::left << std::setw(16) << fit_param_name(i) << std::right;
        for (int j = 0; j < kNumFitParams; ++j) {
            if (f.fixed[j]) continue;
            os << std::setw(9) << std::fixed << std::setprecision(4) << f.correlation(i, j);
        }
        os << std::defaultfloat << std::setprecision(6) << '\n';
    }
    return os.str();
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
    const FitModel model = parse_fit_model(a.model);
    const ExpansionCurve data =
        io::curve_from_csv(io::read_file(a.data), fs::path(a.data).filename().string());

    std::optional<RunConfig> cfg;
    if (!a.config.empty()) cfg = load_config(a.config);
    const AxisLabel label = parse_axis_label(a.axis);

    FitContext ctx;
    double nbar0 = 0.0;
    std::optional<FitParams> config_guess;
    if (cfg) {
        const AxisConfig& ax = cfg->axis(label);
        ctx.mass = cfg->physical.mass;
        ctx.measurement_broadening = ax.delta_sigma;
        if (cfg->paul_trap) {
            ctx.rf_frequency = cfg->paul_trap->rf_frequency;
            ctx.mathieu_a = cfg->paul_trap->mathieu_a;
        }
        nbar0 = ax.nbar;
        config_guess = FitParams{ax.noise.gamma1, ax.params.trap_frequency,
                                 ax.params.dark_frequency, ax.sigma0 * ax.sigma0,
                                 ax.params.release_phase};
    }
    if (a.mass_fg) ctx.mass = units::fg_to_kg(*a.mass_fg);
    if (a.broadening_pm) ctx.measurement_broadening = units::pm_to_m(*a.broadening_pm);
    if (a.rf_khz) ctx.rf_frequency = units::khz_to_rad_per_s(*a.rf_khz);
    if (a.mathieu_a) ctx.mathieu_a = *a.mathieu_a;
    if (a.nbar0) nbar0 = *a.nbar0;
    if (!(ctx.mass > 0.0)) throw UsageError("fit needs the particle mass: --mass-fg or --config");
    if (ctx.measurement_broadening < 0.0) throw UsageError("--broadening-pm: must be >= 0");
    if (nbar0 < 0.0) throw UsageError("--nbar0: must be >= 0");
    if (model == FitModel::jump_micromotion && !(ctx.rf_frequency > 0.0))
        throw UsageError("jump model needs the RF frequency: --rf-khz or a config with rf_frequency_khz");

    FitOptions opt;
    for (const auto& name : a.fix) opt.fixed[fit_param_from_name(name)] = true;

    FitParams guess;
    if (a.guess == "config") {
        if (!config_guess) throw UsageError("--guess config needs --config");
        guess = *config_guess;
    } else if (a.guess == "data") {
        try {
            guess = initial_guess(data, model, ctx);
        } catch (const FitError&) {
            throw;
        } catch (const Error& e) {
            throw FitError(std::string("initial guess failed: ") + e.what());
        }
        // Fixed parameters keep their configured value when there is one.
        if (config_guess) {
            auto g = guess.to_array();
            const auto c = config_guess->to_array();
            for (int i = 0; i < kNumFitParams; ++i)
                if (opt.fixed[i]) g[i] = c[i];
            guess = FitParams::from_array(g);
        }
    } else {
        throw UsageError("--guess: expected data or config");
    }

    io::FitRecord rec;
    rec.axis = label;
    rec.nbar0 = nbar0;
    try {
        rec.fit = fit_expansion(data, model, guess, FitBounds{}, ctx, opt);
    } catch (const FitError&) {
        throw;
    } catch (const Error& e) {
        throw FitError(e.what());
    }

    const fs::path dir = output_dir(a.output_dir, cfg ? &*cfg : nullptr);
    const std::string base = a.output.empty()
                                 ? "fit_" + std::string(to_string(label)) + "_" + std::string(to_string(model))
                                 : a.output;
    std::vector<fs::path> written;
    write(dir / (base + ".json"), io::fit_to_json(rec), out, written);

    // Residual table: data, model and residual per point, in file order.
    const FitResult& f = rec.fit;
    const auto model_at = model_sigma(model, f.params, ctx, f.times);
    {
        std::string csv = "t_s,sigma_data_m,sigma_model_m,residual_m\n";
        for (std::size_t i = 0; i < f.times.size(); ++i) {
            csv += io::format_double(f.times[i]) + ',' +
                   io::format_double(model_at[i] - f.residuals[i]) + ',' +
                   io::format_double(model_at[i]) + ',' + io::format_double(f.residuals[i]) + '\n';
        }
        write(dir / (base + "_residuals.csv"), csv, out, written);
    }

    const double t_max = *std::max_element(f.times.begin(), f.times.end());
    const std::array<double, 1> tmax_arr{t_max};
    const double sigma_tmax = model_sigma(model, f.params, ctx, tmax_arr)[0];
    const std::string report = fit_report(rec, sigma_tmax, t_max);
    if (a.report) write(dir / (base + "_report.txt"), report, out, written);

    if (!a.no_svg) {
        svg::LinePlot plot;
        plot.title = "fit: " + std::string(to_string(model)) + " model, axis " +
                     std::string(to_string(label));
        plot.x_label = "release time t_r (us)";
        plot.y_label = "sigma (nm)";
        plot.log_y = true;
        svg::Series d, m;
        d.label = "data";
        d.markers = true;
        m.label = "fit";
        m.color = "#d62728";
        for (std::size_t i = 0; i < f.times.size(); ++i) {
            d.x.push_back(f.times[i] * 1e6);
            d.y.push_back((model_at[i] - f.residuals[i]) * 1e9);
        }
        const double tmin = *std::min_element(f.times.begin(), f.times.end());
        const auto grid = linspace(tmin, t_max, 200);
        const auto smooth = model_sigma(model, f.params, ctx, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            m.x.push_back(grid[i] * 1e6);
            m.y.push_back(smooth[i] * 1e9);
        }
        plot.series = {d, m};
        write(dir / (base + ".svg"), svg::render(plot), out, written);
    }

    out << (a.report ? report : report.substr(0, report.find("correlations:")));
    list_written(written, out);
    return kExitOk;
}

// --------------------------------------------------------------- coherence

struct CoherenceArgs {
    std::string fit_file;
    double heating_scale = 1e-3;
    std::string t_max;
    int points = 101;
    std::optional<double> nbar0;
    std::string output_dir;
    bool no_svg = false;
};

int cmd_coherence(const CoherenceArgs& a, std::ostream& out) {
    const io::FitRecord rec =
        io::fit_from_json(io::read_file(a.fit_file), fs::path(a.fit_file).filename().string());
    if (!(a.heating_scale > 0.0) || !std::isfinite(a.heating_scale))
        throw UsageError("--heating-scale: must be > 0");
    if (a.points < 1) throw UsageError("--points: must be >= 1");
    double t_max = 0.0;
    if (!a.t_max.empty()) {
        t_max = duration_flag(a.t_max, "--t-max");
    } else if (!rec.fit.times.empty()) {
        t_max = *std::max_element(rec.fit.times.begin(), rec.fit.times.end());
    }
    const double nbar0 = a.nbar0.value_or(rec.nbar0);
    if (nbar0 < 0.0) throw UsageError("--nbar0: must be >= 0");
    const fs::path dir = output_dir(a.output_dir, nullptr);

    const auto times = t_max > 0.0 ? linspace(0.0, t_max, a.points) : std::vector<double>{0.0};
    CoherenceCurve curve;
    try {
        curve = coherence_curve(rec.fit, rec.fit.context.mass, nbar0, times, a.heating_scale);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw SimulationFailure(e.what());
    }

    const std::string base = "coherence_" + std::string(to_string(rec.axis));
    std::vector<fs::path> written;
    write(dir / (base + ".csv"), io::coherence_to_csv(curve), out, written);
    if (!a.no_svg) {
        svg::LinePlot plot;
        plot.title = "coherence length, axis " + std::string(to_string(rec.axis));
        plot.x_label = "release time t_r (us)";
        plot.y_label = "xi (pm)";
        svg::Series s1, s2;
        s1.label = "fitted heating";
        std::ostringstream lbl;
        lbl << "heating x " << a.heating_scale;
        s2.label = lbl.str();
        s2.color = "#2ca02c";
        for (std::size_t i = 0; i < curve.times.size(); ++i) {
            s1.x.push_back(curve.times[i] * 1e6);
            s1.y.push_back(curve.xi[i] * 1e12);
            s2.x.push_back(curve.times[i] * 1e6);
            s2.y.push_back(curve.xi_improved[i] * 1e12);
        }
        plot.series = {s1, s2};
        plot.hline = curve.xi_zpm_threshold * 1e12;
        plot.hline_label = "ground state";
        write(dir / (base + ".svg"), svg::render(plot), out, written);
    }
    out << "axis " << to_string(rec.axis) << ": xi(0) = " << pm(curve.xi.front()) << ", xi("
        << us_tag(curve.times.back()) << ") = " << pm(curve.xi.back()) << "; heating x "
        << a.heating_scale << ": " << pm(curve.xi_improved.back()) << "; ground-state threshold "
        << pm(curve.xi_zpm_threshold) << '\n';
    list_written(written, out);
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"levexp: expansion of levitated-particle motional states"};
    app.name("levexp");
    app.require_subcommand(1);
    app.set_version_flag("--version", "levexp 0.1.0");

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Monte-Carlo release/retrap ensemble at one release time");
    s->add_option("config", sim.config, "configuration file")->required()->check(CLI::ExistingFile);
    s->add_option("--axis", sim.axis, "axis to simulate (x, y, z, u, v)")->capture_default_str();
    s->add_option("--t-r", sim.t_r, "release time, e.g. 260us")->capture_default_str();
    s->add_option("--shots", sim.shots, "number of shots (>= 2; default shots_per_release)");
    s->add_option("--seed", sim.seed, "seed of the first shot (default seed_base)");
    s->add_option("--workers", sim.workers, "worker threads (default: all cores)");
    s->add_option("--output-dir", sim.output_dir, "directory for output files");
    s->add_flag("--no-svg", sim.no_svg, "skip the SVG histogram panel");

    ScanArgs scan;
    auto* sc = app.add_subcommand("scan", "sigma(t_r) curve over a range of release times");
    sc->add_option("config", scan.config, "configuration file")->required()->check(CLI::ExistingFile);
    sc->add_option("--axis", scan.axis, "axis (x, y, z, u, v)")->capture_default_str();
    sc->add_option("--t-r-min", scan.t_r_min, "first release time")->capture_default_str();
    sc->add_option("--t-r-max", scan.t_r_max, "last release time")->capture_default_str();
    sc->add_option("--points", scan.points, "number of release times (>= 2)")->capture_default_str();
    sc->add_option("--engine", scan.engine, "analytic, moments or ensemble")->capture_default_str();
    sc->add_option("--shots", scan.shots, "shots per release time (ensemble engine)");
    sc->add_option("--seed", scan.seed, "seed of the first shot (ensemble engine)");
    sc->add_option("--workers", scan.workers, "worker threads (ensemble engine)");
    sc->add_option("--output-dir", scan.output_dir, "directory for output files");
    sc->add_flag("--trace", scan.trace,
                 "also write the full moments (analytic/moments) or all shots (ensemble)");
    sc->add_flag("--with-broadening", scan.with_broadening,
                 "add the axis measurement broadening in quadrature");
    sc->add_flag("--no-svg", scan.no_svg, "skip the SVG plot");

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "fit the expansion model to a sigma(t_r) curve");
    f->add_option("data", fit.data, "curve CSV (t_s,sigma_m[,sigma_err_m])")
        ->required()
        ->check(CLI::ExistingFile);
    f->add_option("--model", fit.model, "inverted or jump")->capture_default_str();
    f->add_flag("--report", fit.report, "write a text report with correlations");
    f->add_option("--config", fit.config, "configuration supplying mass, broadening, RF, nbar")
        ->check(CLI::ExistingFile);
    f->add_option("--axis", fit.axis, "axis the data belong to")->capture_default_str();
    f->add_option("--mass-fg", fit.mass_fg, "particle mass in fg (overrides the config)");
    f->add_option("--nbar0", fit.nbar0, "initial occupation stored for the coherence step");
    f->add_option("--broadening-pm", fit.broadening_pm, "measurement broadening in pm");
    f->add_option("--rf-khz", fit.rf_khz, "RF frequency / 2pi in kHz (jump model)");
    f->add_option("--mathieu-a", fit.mathieu_a, "Mathieu a parameter (jump model)");
    f->add_option("--guess", fit.guess, "starting point: data or config")->capture_default_str();
    f->add_option("--fix", fit.fix, "parameters held fixed (gamma1, trap_frequency, ...)")
        ->delimiter(',');
    f->add_option("--output", fit.output, "base name of the output files");
    f->add_option("--output-dir", fit.output_dir, "directory for output files");
    f->add_flag("--no-svg", fit.no_svg, "skip the SVG plot");

    CoherenceArgs coh;
    auto* c = app.add_subcommand("coherence", "coherence length along a fitted trajectory");
    c->add_option("fit_file", coh.fit_file, "fit JSON written by 'levexp fit'")
        ->required()
        ->check(CLI::ExistingFile);
    c->add_option("--heating-scale", coh.heating_scale, "factor applied to the fitted heating")
        ->capture_default_str();
    c->add_option("--t-max", coh.t_max, "last time (default: last fitted time)");
    c->add_option("--points", coh.points, "number of times")->capture_default_str();
    c->add_option("--nbar0", coh.nbar0, "initial occupation (default: from the fit file)");
    c->add_option("--output-dir", coh.output_dir, "directory for output files");
    c->add_flag("--no-svg", coh.no_svg, "skip the SVG plot");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(std::move(rev));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitInput;
    }

    try {
        if (s->parsed()) return cmd_simulate(sim, out);
        if (sc->parsed()) return cmd_scan(scan, out);
        if (f->parsed()) return cmd_fit(fit, out);
        if (c->parsed()) return cmd_coherence(coh, out);
    } catch (const SimulationFailure& e) {
        err << "levexp: simulation failed: " << e.what() << '\n';
        return kExitSimulation;
    } catch (const DegeneracyError& e) {
        err << "levexp: fit failed: " << e.what() << "\n  unidentified direction: "
            << e.direction() << '\n';
        return kExitFit;
    } catch (const FitError& e) {
        err << "levexp: fit failed: " << e.what() << '\n';
        return kExitFit;
    } catch (const ConfigError& e) {
        err << "levexp: " << e.what() << '\n';
        return kExitInput;
    } catch (const UsageError& e) {
        err << "levexp: " << e.what() << '\n';
        return kExitInput;
    } catch (const Error& e) {
        // Validation errors from the model (DomainError, InvalidStateError,
        // CalibrationError) surface while setting up from user input.
        err << "levexp: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        err << "levexp: internal error: " << e.what() << '\n';
        return kExitSimulation;
    }
    return kExitInput;
}

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace levexp::cli
