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

// End-to-end acceptance checks. One PASS/FAIL line per criterion; the exit
// status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "levexp/analytic_dynamics.hpp"
#include "levexp/cli.hpp"
#include "levexp/config.hpp"
#include "levexp/core_model.hpp"
#include "levexp/errors.hpp"
#include "levexp/estimation.hpp"
#include "levexp/io.hpp"
#include "levexp/moment_propagator.hpp"
#include "levexp/rng.hpp"
#include "levexp/statistics.hpp"
#include "levexp/trajectory_ensemble.hpp"
#include "levexp/units.hpp"

namespace {

using namespace levexp;
namespace fs = std::filesystem;

const std::string kNominal = std::string(LEVEXP_SOURCE_DIR) + "/configs/paper_nominal.cfg";

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Smallest det(Sigma) / (hbar^2 / 4) seen by any check below.
double g_min_heisenberg_ratio = INFINITY;

void track(const GaussianState& s) {
    g_min_heisenberg_ratio =
        std::min(g_min_heisenberg_ratio, s.determinant() / (0.25 * kHbar * kHbar));
}

int hardware_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// -------------------------------------------------------------------- 1, 2, 3, 4

Outcome squeezing_identity() {
    const double s = squeezing_db(952.3);
    return {std::abs(s - 59.6) <= 0.05, fmt("squeezing_db(952.3) = %.4f dB (target 59.6 +- 0.05)", s)};
}

Outcome purity_and_coherence() {
    const RunConfig cfg = load_config(kNominal);
    const auto& z = cfg.axis(AxisLabel::z);
    const double p = purity(thermal_state(10.0, z.params.trap_frequency, cfg.physical.mass));
    const double xi = coherence_length(state_with_purity(z.sigma0, z.nbar));
    const bool ok = std::abs(p - 0.04762) <= 1e-5 && std::abs(xi / 6.5e-12 - 1.0) <= 0.10;
    return {ok, fmt("purity(nbar=10) = %.6f (0.04762 +- 1e-5); xi_z(0) = %.3f pm (6.5 pm +- 10%%)", p,
                    xi * 1e12)};
}

Outcome inverted_magnitude() {
    const RunConfig cfg = load_config(kNominal);
    const auto& z = cfg.axis(AxisLabel::z);
    const double var = variance_inverted(260e-6, z.sigma0 * z.sigma0, z.params.trap_frequency,
                                         z.params.dark_frequency, z.noise.gamma1,
                                         cfg.physical.mass);
    const double sigma = std::sqrt(var);
    return {sigma >= 30e-9 && sigma <= 56e-9,
            fmt("sigma_z(260 us) = %.2f nm (window [30, 56] nm; paper 43.4 nm)", sigma * 1e9)};
}

Outcome jump_bounds() {
    const RunConfig cfg = load_config(kNominal);
    const double m = cfg.physical.mass;
    double worst_peak = 0.0, worst_return = 0.0;
    for (AxisLabel label : {AxisLabel::u, AxisLabel::v}) {
        const auto& ax = cfg.axis(label);
        const double big = ax.params.trap_frequency, w = ax.params.dark_frequency;
        const double s0 = ax.sigma0 * ax.sigma0;
        const double period = 2 * std::numbers::pi / w;
        const double peak = std::sqrt(variance_jump(period / 4, s0, big, w, 0.0, m) / s0);
        const double back = std::sqrt(variance_jump(period / 2, s0, big, w, 0.0, m) / s0);
        worst_peak = std::max(worst_peak, std::abs(peak / (big / w) - 1.0));
        worst_return = std::max(worst_return, std::abs(back - 1.0));
    }
    return {worst_peak <= 1e-10 && worst_return <= 1e-10,
            fmt("u, v: max |sigma(T/4)/sigma(0) / (Omega/omega) - 1| = %.2e, "
                "max |sigma(T/2)/sigma(0) - 1| = %.2e (tol 1e-10)",
                worst_peak, worst_return)};
}

// -------------------------------------------------------------------- 5

Outcome closed_form_equivalence() {
    constexpr double kMass = 1.95e-18;
    std::mt19937_64 gen(20260415);
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen);
    };
    auto log_uni = [&](double lo, double hi) { return std::exp(uni(std::log(lo), std::log(hi))); };
    double worst = 0.0;
    int draws[3] = {0, 0, 0};
    for (int d = 0; d < 100; ++d) {
        const int kind = d % 3;
        ++draws[kind];
        const double big = units::khz_to_rad_per_s(log_uni(10.0, 200.0));
        const double w = units::khz_to_rad_per_s(log_uni(0.5, 5.0));
        const double sigma0 = log_uni(20e-12, 500e-12);
        const double s0 = sigma0 * sigma0;
        const auto noise = NoiseSpec::from_heating_rate(
            units::kelvin_per_s_to_watt(log_uni(0.1, 20.0)), big);
        // Up to omega t = 3 (inverted) or two oscillation periods (jump).
        const double t_max = kind == 0 ? uni(0.5, 3.0) / w
                             : kind == 1 ? uni(0.3, 2.0) * 2 * std::numbers::pi / w
                                         : uni(10e-6, 300e-6);
        const double k = kind == 0 ? -kMass * w * w : kind == 1 ? kMass * w * w : 0.0;
        const auto sched = StiffnessSchedule::constant(k, t_max);
        std::vector<double> times(50);
        for (int i = 0; i < 50; ++i) times[i] = t_max * (i + 1) / 50.0;
        times.back() = t_max;
        const auto trace = propagate_moments_trace(released_state(sigma0, big, kMass), sched, noise,
                                                   kMass, times, default_dt_max(sched, kMass));
        for (int i = 0; i < 50; ++i) {
            const double t = times[i];
            const double ref = kind == 0   ? variance_inverted(t, s0, big, w, noise.gamma1, kMass)
                               : kind == 1 ? variance_jump(t, s0, big, w, noise.gamma1, kMass)
                                           : variance_free(t, s0, big, noise.heating_rate, kMass);
            worst = std::max(worst, std::abs(trace[i].var_position / ref - 1.0));
            track(trace[i]);
        }
    }
    return {worst <= 1e-8, fmt("100 draws (%d inverted, %d jump, %d free) x 50 times: max rel. "
                               "deviation %.2e (tol 1e-8)",
                               draws[0], draws[1], draws[2], worst)};
}

// -------------------------------------------------------------------- 6

ShotConfig ensemble_config(PotentialKind kind, double t_end) {
    constexpr double kMass = 1.95e-18;
    ShotConfig c;
    c.mass = kMass;
    c.protocol.feedback_off_lead = 5e-6;
    c.protocol.measure_window = 500e-6;
    c.protocol.retrap_heating = false;  // the reconstruction is then the state at t_r
    if (kind == PotentialKind::harmonic_jump) {
        const double big = units::khz_to_rad_per_s(173.18);
        c.axis = {AxisLabel::u, big, units::khz_to_rad_per_s(2.7), kind, 0.9};
        c.initial = released_state(333.7e-12, big, kMass);
        c.noise = NoiseSpec::from_heating_rate(units::kelvin_per_s_to_watt(8.47), big);
        c.dark = make_dark_schedule(
            c.axis, kMass, 0.0, t_end,
            PaulTrapSpec{units::khz_to_rad_per_s(25.0), 0.0, 0.0, std::numbers::pi / 4, 800.0});
    } else {
        const double big = units::khz_to_rad_per_s(43.5);
        const double w = kind == PotentialKind::inverted ? units::khz_to_rad_per_s(1.4) : 0.0;
        c.axis = {AxisLabel::z, big, w, kind, 0.0};
        c.initial = state_with_purity(45.6e-12, 10.0);
        c.noise = NoiseSpec::from_heating_rate(units::kelvin_per_s_to_watt(5.91), big);
        c.dark = make_dark_schedule(c.axis, kMass, 0.0, t_end, std::nullopt);
    }
    return c;
}

GaussianState exact_state(const ShotConfig& c, double t_r) {
    const auto sched = protocol_schedule(c, t_r);
    const auto s = propagate_moments(c.initial, sched, c.noise, c.mass, sched.t_end(),
                                     default_dt_max(sched, c.mass));
    track(s);
    return s;
}

Outcome ensemble_equivalence() {
    struct Case {
        const char* name;
        PotentialKind kind;
        double t_r;
    };
    const Case cases[] = {{"inverted", PotentialKind::inverted, 200e-6},
                          {"jump+Mathieu", PotentialKind::harmonic_jump, 60e-6},
                          {"free", PotentialKind::free, 100e-6}};
    bool ok = true;
    std::ostringstream detail;
    for (const auto& cs : cases) {
        const auto cfg = ensemble_config(cs.kind, cs.t_r);
        const auto ref = exact_state(cfg, cs.t_r);
        EnsembleOptions opt;
        opt.shots = 10000;
        opt.workers = hardware_workers();
        opt.seed_base = 1;
        const auto r = run_ensemble(cfg, cs.t_r, opt);
        const double n = static_cast<double>(r.shots.size() - r.invalid_count);
        const auto& m = r.sample_moments;
        const double z_zz = (m.var_position - ref.var_position) /
                            (ref.var_position * std::sqrt(2.0 / (n - 1)));
        const double z_pp = (m.var_momentum - ref.var_momentum) /
                            (ref.var_momentum * std::sqrt(2.0 / (n - 1)));
        const double z_zp =
            (m.covar - ref.covar) /
            std::sqrt((ref.var_position * ref.var_momentum + ref.covar * ref.covar) / (n - 1));
        const double worst = std::max({std::abs(z_zz), std::abs(z_pp), std::abs(z_zp)});
        ok = ok && worst <= 5.0 && r.invalid_count == 0;
        detail << cs.name << " max |dev| " << fmt("%.2f", worst) << " SE; ";
    }

    // Convergence of the position-variance error with the number of shots,
    // RMS over independent replicate ensembles.
    const auto cfg = ensemble_config(PotentialKind::inverted, 100e-6);
    const auto ref = exact_state(cfg, 100e-6);
    const std::vector<int> sizes{100, 400, 1600, 6400};
    constexpr int kReplicates = 64;
    std::vector<double> log_n, log_err;
    std::uint64_t seed = 1'000'000;
    for (int n : sizes) {
        double sq = 0.0;
        for (int rep = 0; rep < kReplicates; ++rep) {
            EnsembleOptions opt;
            opt.shots = n;
            opt.workers = hardware_workers();
            opt.seed_base = seed;
            opt.bootstrap_resamples = 0;
            seed += static_cast<std::uint64_t>(n);
            const auto r = run_ensemble(cfg, 100e-6, opt);
            const double e = r.sample_moments.var_position / ref.var_position - 1.0;
            sq += e * e;
        }
        log_n.push_back(std::log(n));
        log_err.push_back(0.5 * std::log(sq / kReplicates));
    }
    const double slope = stats::fit_slope(log_n, log_err);
    ok = ok && std::abs(slope + 0.5) <= 0.1;
    detail << fmt("convergence slope %.3f (target -0.5 +- 0.1)", slope);
    return {ok, "10^4 shots: " + detail.str()};
}

// -------------------------------------------------------------------- 7

Outcome mathieu_secular_consistency() {
    constexpr double kMass = 1.95e-18;
    const double rf = units::khz_to_rad_per_s(25.0);
    const double t_rf = 2 * std::numbers::pi / rf;
    const double big = units::khz_to_rad_per_s(173.18);
    const double sigma0 = 333.7e-12;
    const auto initial = released_state(sigma0, big, kMass);
    constexpr int kPerPeriod = 64;

    int points = 0, freq_fail = 0, env_fail = 0;
    double worst_freq = 0.0, worst_env = 0.0;
    std::string freq_where, env_where;
    std::ostringstream failing;
    for (double a : {0.0, 0.02, 0.05}) {
        for (int iq = 1; iq <= 8; ++iq) {
            const double q = 0.05 * iq;
            ++points;
            const auto fl = floquet_analyze(a, q, rf);
            const double pseudo = 0.5 * rf * std::sqrt(a + 0.5 * q * q);
            const double freq_err = std::abs(fl.secular_frequency / pseudo - 1.0);
            if (freq_err > 0.01) ++freq_fail;
            if (freq_err > worst_freq) {
                worst_freq = freq_err;
                freq_where = fmt("a=%.2f q=%.2f", a, q);
            }

            // RF-period averages of sigma^2(t) over one recompression cycle,
            // Mathieu propagation against the secular closed form.
            const double w = fl.secular_frequency;
            const int n_periods = static_cast<int>(std::ceil((std::numbers::pi / w) / t_rf)) + 1;
            const int n_samples = n_periods * kPerPeriod + 1;
            std::vector<double> times(n_samples);
            for (int i = 0; i < n_samples; ++i) times[i] = i * t_rf / kPerPeriod;
            StiffnessSchedule sched;
            sched.then_mathieu(times.back(), MathieuStiffness{a, q, rf, std::numbers::pi / 2, 0.0});
            const auto trace = propagate_moments_trace(initial, sched, NoiseSpec{}, kMass, times,
                                                       default_dt_max(sched, kMass));
            std::vector<double> secular(n_samples);
            for (int i = 0; i < n_samples; ++i) {
                secular[i] = variance_jump(times[i], sigma0 * sigma0, big, w, 0.0, kMass);
                track(trace[i]);
            }
            double peak = 0.0, dev = 0.0;
            for (int p = 0; p < n_periods; ++p) {
                double am = 0.0, aj = 0.0;
                for (int j = 0; j <= kPerPeriod; ++j) {
                    const double wgt = (j == 0 || j == kPerPeriod) ? 0.5 : 1.0;
                    am += wgt * trace[p * kPerPeriod + j].var_position;
                    aj += wgt * secular[p * kPerPeriod + j];
                }
                peak = std::max(peak, aj / kPerPeriod);
                dev = std::max(dev, std::abs(am - aj) / kPerPeriod);
            }
            const double env_err = dev / peak;
            if (env_err > 0.05) {
                ++env_fail;
                failing << fmt(" (%.2f,%.2f):%.1f%%", a, q, 100 * env_err);
            }
            if (env_err > worst_env) {
                worst_env = env_err;
                env_where = fmt("a=%.2f q=%.2f", a, q);
            }
        }
    }
    return {freq_fail == 0 && env_fail == 0,
            fmt("%d grid points (q 0.05..0.40, a 0/0.02/0.05, phase pi/2): secular frequency "
                "off by >1%% at %d (worst %.2f%% at %s); envelope off by >5%% of peak at %d (worst "
                "%.1f%% at %s); envelope failures (a,q):",
                points, freq_fail, 100 * worst_freq, freq_where.c_str(), env_fail,
                100 * worst_env, env_where.c_str()) +
                failing.str()};
}

// -------------------------------------------------------------------- 8

Outcome fit_round_trip() {
    const RunConfig cfg = load_config(kNominal);
    const double m = cfg.physical.mass;
    const auto& z = cfg.axis(AxisLabel::z);
    const FitParams zt{z.noise.gamma1, z.params.trap_frequency, z.params.dark_frequency,
                       z.sigma0 * z.sigma0, 0.0};
    const FitContext zc{m, 0.0, 0.0, 0.0};
    std::vector<double> t(40);
    for (int i = 0; i < 40; ++i) t[i] = 260e-6 * i / 39.0;
    ExpansionCurve clean = expansion_curve(t, z.sigma0, z.params, z.noise, m);

    auto rel_err = [](const FitParams& got, const FitParams& want) {
        const auto g = got.to_array(), w = want.to_array();
        double e = 0.0;
        for (int j = 0; j < kNumFitParams; ++j)
            if (w[j] != 0.0) e = std::max(e, std::abs(g[j] / w[j] - 1.0));
        return e;
    };

    FitParams guess = zt;
    guess.gamma1 *= 2;
    guess.trap_frequency *= 2;
    guess.dark_frequency *= 2;
    guess.sigma0_sq *= 2;
    const double inv_err = rel_err(fit_expansion(clean, FitModel::inverted, guess, {}, zc).params, zt);

    // Micromotion model on the u axis.
    const auto& u = cfg.axis(AxisLabel::u);
    const FitParams ut{u.noise.gamma1, u.params.trap_frequency, u.params.dark_frequency,
                       u.sigma0 * u.sigma0, 0.9};
    const FitContext uc{m, 0.0, cfg.paul_trap->rf_frequency, cfg.paul_trap->mathieu_a};
    std::vector<double> tu(30);
    for (int i = 0; i < 30; ++i) tu[i] = 200e-6 * i / 29.0;
    ExpansionCurve ju;
    ju.times = tu;
    ju.sigma = model_sigma(FitModel::jump_micromotion, ut, uc, tu);
    const double jump_err = rel_err(
        fit_expansion(ju, FitModel::jump_micromotion, initial_guess(ju, FitModel::jump_micromotion, uc),
                      {}, uc)
            .params,
        ut);

    int inside = 0;
    for (int r = 0; r < 50; ++r) {
        ExpansionCurve data = clean;
        PhiloxStream rng(5000 + r, 0);
        for (auto& s : data.sigma) s *= 1.0 + 0.03 * rng.normal();
        const auto fit = fit_expansion(data, FitModel::inverted,
                                       initial_guess(data, FitModel::inverted, zc), {}, zc);
        inside += in_confidence_region(fit, zt, 0.95);
    }
    return {inv_err <= 1e-6 && jump_err <= 1e-6 && inside >= 45,
            fmt("noiseless max rel. error: inverted %.1e, jump_micromotion %.1e (tol 1e-6); "
                "coverage %d/50 inside the 95%% region at 3%% noise (need >= 45)",
                inv_err, jump_err, inside)};
}

// -------------------------------------------------------------------- 9

Outcome coherence_behaviour() {
    const RunConfig cfg = load_config(kNominal);
    const auto& z = cfg.axis(AxisLabel::z);
    FitResult fit;
    fit.params = {z.noise.gamma1, z.params.trap_frequency, z.params.dark_frequency,
                  z.sigma0 * z.sigma0, 0.0};
    fit.model = FitModel::inverted;
    fit.context = {cfg.physical.mass, 0.0, 0.0, 0.0};
    std::vector<double> t;
    for (int i = 0; i <= 520; ++i) t.push_back(0.5e-6 * i);
    const auto c = coherence_curve(fit, cfg.physical.mass, z.nbar, t, 1e-3);
    auto slope_at = [&](double at) {
        const auto i = static_cast<std::size_t>(std::lround(at / 0.5e-6));
        return (c.xi[i + 1] - c.xi[i - 1]) / (t[i + 1] - t[i - 1]);
    };
    const double d20 = slope_at(20e-6), d250 = slope_at(250e-6);
    bool dominates = true;
    for (std::size_t i = 1; i < t.size(); ++i) dominates = dominates && c.xi_improved[i] >= c.xi[i];
    const bool ok = std::abs(d250) < 0.1 * std::abs(d20) && dominates;
    return {ok, fmt("|dxi/dt|(250 us) / |dxi/dt|(20 us) = %.3f (< 0.1); xi %.2f pm -> %.2f pm; "
                    "reduced heating dominates pointwise: %s",
                    std::abs(d250 / d20), c.xi.front() * 1e12, c.xi.back() * 1e12,
                    dominates ? "yes" : "no")};
}

// -------------------------------------------------------------------- 10

Outcome symplectic_suite() {
    constexpr double kMass = 1.95e-18;
    const double rf = units::khz_to_rad_per_s(25.0);
    std::mt19937_64 gen(77);
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen);
    };
    // det Sigma = zz pp - zp^2 cancels: its rounding floor is about
    // eps * zz pp / det. Draws squeezed beyond kMaxSqueeze cannot resolve
    // 1e-8 in double precision and are counted separately.
    constexpr double kMaxSqueeze = 1e6;
    double worst = 0.0, worst_floor_ratio = 0.0;
    int used = 0, excluded = 0;
    while (used < 100) {
        StiffnessSchedule sched;
        const int segments = 1 + static_cast<int>(uni(0.0, 4.0));
        double inverted_wt = 0.0;
        for (int k = 0; k < segments; ++k) {
            const int kind = static_cast<int>(uni(0.0, 4.0));
            if (kind == 0 && inverted_wt < 1.0) {
                const double w = units::khz_to_rad_per_s(uni(0.5, 5.0));
                const double wt = uni(0.05, 1.0 - inverted_wt);
                inverted_wt += wt;
                sched.then_constant(wt / w, -kMass * w * w);
            } else if (kind <= 1) {
                const double w = units::khz_to_rad_per_s(uni(1.0, 200.0));
                sched.then_constant(uni(1e-6, 100e-6), kMass * w * w);
            } else if (kind == 2) {
                sched.then_constant(uni(1e-6, 50e-6), 0.0);
            } else {
                sched.then_mathieu(uni(10e-6, 200e-6),
                                   MathieuStiffness{uni(0.0, 0.05), uni(0.0, 0.6), rf,
                                                    uni(0.0, 2 * std::numbers::pi), 0.0});
            }
        }
        const double big = units::khz_to_rad_per_s(uni(20.0, 200.0));
        const auto s0 = thermal_state(uni(0.0, 1000.0), big, kMass);
        const auto s1 = propagate_moments(s0, sched, NoiseSpec{}, kMass, sched.t_end(),
                                          default_dt_max(sched, kMass));
        const double squeeze = s1.var_position * s1.var_momentum / s1.determinant();
        const double change = std::abs(s1.determinant() / s0.determinant() - 1.0);
        if (!(squeeze <= kMaxSqueeze)) {
            worst_floor_ratio = std::max(worst_floor_ratio, change / (squeeze * 0x1p-52));
            ++excluded;
            continue;
        }
        ++used;
        track(s1);
        worst = std::max(worst, change);
    }
    const double clamp = 1.0 - kHeisenbergClampTolerance;
    const bool ok = worst <= 1e-8 && g_min_heisenberg_ratio >= clamp;
    return {ok, fmt("100 random noiseless schedules (squeeze zz*pp/det <= 1e6; %d more squeezed "
                    "draws skipped, their det error stays within %.1f x the rounding floor): max "
                    "|det change| %.2e (tol 1e-8); min det/(hbar^2/4) over all propagated states "
                    "%.6f (>= 1 - %.0e)",
                    excluded, worst_floor_ratio, worst, g_min_heisenberg_ratio,
                    kHeisenbergClampTolerance)};
}

// -------------------------------------------------------------------- 11

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "levexp_acceptance_determinism";
    fs::remove_all(dir);
    std::vector<std::string> outputs;
    int status = 0;
    for (const char* workers : {"1", "4", "1", "4"}) {
        const fs::path d = dir / (std::string("w") + workers + "_" + std::to_string(outputs.size()));
        std::ostringstream out, err;
        status |= cli::run({"simulate", kNominal, "--axis", "z", "--t-r", "260us", "--shots", "400",
                            "--seed", "12345", "--workers", workers, "--output-dir", d.string(),
                            "--no-svg"},
                           out, err);
        outputs.push_back(io::read_file(d / "simulate_z_260us_shots.csv"));
    }
    fs::remove_all(dir);
    const bool same = std::all_of(outputs.begin(), outputs.end(),
                                  [&](const std::string& s) { return s == outputs.front(); });
    return {status == 0 && same,
            fmt("4 runs (workers 1, 4, 1, 4), seed 12345: shot CSVs %s (%zu bytes)",
                same ? "byte-identical" : "DIFFER", outputs.front().size())};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "squeezing identity", squeezing_identity},
        {2, "purity and coherence numbers", purity_and_coherence},
        {3, "inverted-expansion magnitude", inverted_magnitude},
        {4, "frequency-jump bounds", jump_bounds},
        {5, "moments vs closed forms", closed_form_equivalence},
        {6, "ensemble vs moments", ensemble_equivalence},
        {7, "Mathieu vs secular approximation", mathieu_secular_consistency},
        {8, "fit round trip and coverage", fit_round_trip},
        {9, "coherence-length behaviour", coherence_behaviour},
        {10, "symplectic and Heisenberg invariants", symplectic_suite},
        {11, "determinism", determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << ": "
                  << o.detail << fmt("  (%.1f s)", secs) << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria pass"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
