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

#include "levexp/trajectory_ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include "levexp/analytic_dynamics.hpp"
#include "levexp/rng.hpp"

namespace levexp {

namespace {

constexpr double kPi = std::numbers::pi;

Mat2 drift_matrix(double k, double mass, double gamma) { return {0.0, 1.0 / mass, -k, -gamma}; }

// Increment covariance int_0^h Phi(h - s) D e_p e_p^T Phi(h - s)^T ds for a
// constant drift, by 5-point Gauss-Legendre quadrature.
Mat2 quadrature_noise(const Mat2& drift, double h, double diffusion) {
    static constexpr double kNodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                         0.5384693101056831, 0.9061798459386640};
    static constexpr double kWeights[5] = {0.2369268850561891, 0.4786286704993665,
                                           0.5688888888888889, 0.4786286704993665,
                                           0.2369268850561891};
    Mat2 q{};
    for (int i = 0; i < 5; ++i) {
        const double s = 0.5 * h * (kNodes[i] + 1.0);
        const Mat2 phi = expm(s * drift);
        // Phi e_p e_p^T Phi^T = column 2 outer product.
        const double cz = phi.b;
        const double cp = phi.d;
        q = q + (0.5 * h * kWeights[i] * diffusion) * Mat2{cz * cz, cz * cp, cz * cp, cp * cp};
    }
    return q;
}

struct RawStep {
    Mat2 flow;
    Mat2 noise;
};

// Exact transition over [0, h] for constant stiffness k.
RawStep constant_step(double k, double h, double mass, double gamma, double diffusion) {
    const Mat2 drift = drift_matrix(k, mass, gamma);
    RawStep s;
    s.flow = expm(h * drift);
    if (diffusion == 0.0) return s;
    if (gamma == 0.0) {
        s.noise = noise_covariance(h, k / mass, mass, diffusion);
    } else {
        s.noise = quadrature_noise(drift, h, diffusion);
    }
    return s;
}

void append_constant_span(std::vector<ShotSimulator::Step>& out, double k, double duration,
                          double mass, double gamma, double diffusion) {
    if (duration <= 0.0) return;
    // Closed-form flow and noise are exact for any length without damping;
    // with damping the quadrature wants substeps short against 1/rate.
    long n = 1;
    if (gamma > 0.0 && diffusion > 0.0) {
        const double rate = std::max(std::sqrt(std::abs(k) / mass), gamma);
        n = std::max(1L, static_cast<long>(std::ceil(duration * rate * 20.0)));
    }
    const RawStep s = constant_step(k, duration / static_cast<double>(n), mass, gamma, diffusion);
    const ShotSimulator::Step step{s.flow, cholesky_psd(s.noise)};
    out.insert(out.end(), static_cast<std::size_t>(n), step);
}

void append_mathieu_span(std::vector<ShotSimulator::Step>& out, const ScheduleSegment& seg,
                         double t0, double t1, double mass, double gamma, double diffusion) {
    const auto& m = std::get<MathieuStiffness>(seg.params);
    const double rf_period = 2.0 * kPi / m.rf_frequency;
    const double duration = t1 - t0;
    if (duration <= 0.0) return;
    const long n = std::max(1L, static_cast<long>(std::ceil(duration / (rf_period / 400.0))));
    const double h = duration / static_cast<double>(n);
    const double g = std::sqrt(3.0) / 6.0;
    auto drift_at = [&](double t) {
        return drift_matrix(segment_stiffness(seg, t, mass), mass, gamma);
    };
    for (long i = 0; i < n; ++i) {
        const double ta = t0 + static_cast<double>(i) * h;
        // Fourth-order Magnus: h/2 (A1 + A2) + sqrt(3)/12 h^2 [A2, A1].
        const Mat2 a1 = drift_at(ta + (0.5 - g) * h);
        const Mat2 a2 = drift_at(ta + (0.5 + g) * h);
        const Mat2 comm = a2 * a1 - a1 * a2;
        const Mat2 omega = (0.5 * h) * (a1 + a2) + (std::sqrt(3.0) / 12.0 * h * h) * comm;
        Mat2 noise{};
        if (diffusion > 0.0) {
            // Three-point Gauss-Legendre over the substep; the flow from each
            // node to the end uses the drift frozen at the midpoint.
            static constexpr double kNodes[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
            static constexpr double kWeights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
            for (int j = 0; j < 3; ++j) {
                const double s = ta + 0.5 * h * (kNodes[j] + 1.0);
                const double rest = ta + h - s;
                const Mat2 phi = expm(rest * drift_at(s + 0.5 * rest));
                noise = noise + (0.5 * h * kWeights[j] * diffusion) *
                                    Mat2{phi.b * phi.b, phi.b * phi.d, phi.b * phi.d, phi.d * phi.d};
            }
        }
        out.push_back({expm(omega), cholesky_psd(noise)});
    }
}

Vec2 apply(const ShotSimulator::Step& step, Vec2 x, PhiloxStream& rng) {
    Vec2 y = step.flow * x;
    const Mat2& l = step.noise_factor;
    if (l.a != 0.0 || l.c != 0.0 || l.d != 0.0) {
        const double n1 = rng.normal();
        const double n2 = rng.normal();
        y.x += l.a * n1;
        y.y += l.c * n1 + l.d * n2;
    }
    return y;
}

}  // namespace

double LockinResult::position() const { return amplitude * std::cos(phase); }

double LockinResult::momentum(double mass, double trap_frequency) const {
    return -mass * trap_frequency * amplitude * std::sin(phase);
}

LockinResult lockin_reconstruct(std::span<const double> trace, double trap_frequency,
                                double measure_window, double sample_rate) {
    if (!(trap_frequency > 0.0)) throw ReconstructionError("trap frequency must be positive");
    if (!(sample_rate > 0.0)) throw ReconstructionError("sample rate must be positive");
    const double f = trap_frequency / (2.0 * kPi);
    if (sample_rate <= 2.0 * f)
        throw ReconstructionError("sample rate does not resolve the trap frequency");
    const double per_period = sample_rate / f;
    const double window_samples =
        std::min(static_cast<double>(trace.size()), std::floor(measure_window * sample_rate + 1e-9));
    const int periods = static_cast<int>(std::floor(window_samples / per_period + 1e-9));
    if (periods < 1) {
        std::ostringstream msg;
        msg << "trace covers " << window_samples / per_period
            << " oscillation periods; at least one is required";
        throw ReconstructionError(msg.str());
    }
    const auto n = std::min(trace.size(),
                            static_cast<std::size_t>(std::llround(periods * per_period)));
    double scc = 0.0, sss = 0.0, scs = 0.0, szc = 0.0, szs = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double arg = trap_frequency * static_cast<double>(k) / sample_rate;
        const double c = std::cos(arg);
        const double s = std::sin(arg);
        scc += c * c;
        sss += s * s;
        scs += c * s;
        szc += trace[k] * c;
        szs += trace[k] * s;
    }
    const double det = scc * sss - scs * scs;
    if (!(det > 0.0)) throw ReconstructionError("degenerate demodulation basis");
    const double in_phase = (sss * szc - scs * szs) / det;
    const double quadrature = (scc * szs - scs * szc) / det;
    LockinResult r;
    r.amplitude = std::hypot(in_phase, quadrature);
    r.phase = std::atan2(-quadrature, in_phase);
    r.periods_used = periods;
    return r;
}

double apply_measurement_broadening(double sigma_true, double delta_sigma) {
    if (!(sigma_true >= 0.0 && delta_sigma >= 0.0))
        throw DomainError("sigma and broadening must be >= 0");
    return std::hypot(sigma_true, delta_sigma);
}

StiffnessSchedule protocol_schedule(const ShotConfig& config, double release_time) {
    const double lead = config.protocol.feedback_off_lead;
    const double omega = config.axis.trap_frequency;
    config.dark.check_covers(0.0, release_time);
    std::vector<ScheduleSegment> segs;
    segs.push_back({0.0, lead, ConstantStiffness{config.mass * omega * omega}});
    for (const auto& seg : config.dark.segments()) {
        if (seg.t_end <= 0.0 && seg.t_start < 0.0) continue;
        const double a = std::max(seg.t_start, 0.0);
        const double b = std::min(seg.t_end, release_time);
        if (b < a) continue;
        ScheduleSegment s = seg;
        s.t_start = a + lead;
        s.t_end = b + lead;
        if (auto* m = std::get_if<MathieuStiffness>(&s.params)) m->t_ref += lead;
        segs.push_back(s);
        if (b >= release_time) break;
    }
    return StiffnessSchedule(std::move(segs));
}

ShotSimulator::ShotSimulator(ShotConfig config, double release_time)
    : config_(std::move(config)), release_time_(release_time) {
    const double mass = config_.mass;
    if (!(mass > 0.0)) throw DomainError("mass must be positive");
    config_.axis.validate();
    config_.protocol.validate();
    config_.noise.validate(config_.axis.trap_frequency);
    if (!(std::isfinite(release_time) && release_time >= 0.0))
        throw DomainError("release time must be >= 0");
    config_.dark.check_covers(0.0, release_time);
    const GaussianState init = enforce_heisenberg(config_.initial);
    initial_factor_ = cholesky_psd(init.covariance());

    const double omega = config_.axis.trap_frequency;
    const double k_optical = mass * omega * omega;
    const double gamma = config_.noise.gas_damping;
    const double diffusion = config_.noise.momentum_diffusion(mass);

    append_constant_span(steps_, k_optical, config_.protocol.feedback_off_lead, mass, gamma,
                         diffusion);
    for (const auto& seg : config_.dark.segments()) {
        const double a = std::max(seg.t_start, 0.0);
        const double b = std::min(seg.t_end, release_time);
        if (b <= a) continue;
        if (const auto* c = std::get_if<ConstantStiffness>(&seg.params)) {
            append_constant_span(steps_, c->k, b - a, mass, gamma, diffusion);
        } else {
            append_mathieu_span(steps_, seg, a, b, mass, gamma, diffusion);
        }
    }

    sample_rate_ = config_.protocol.sample_rate > 0.0 ? config_.protocol.sample_rate
                                                       : 20.0 * omega / (2.0 * kPi);
    trace_samples_ = static_cast<std::size_t>(
        std::floor(config_.protocol.measure_window * sample_rate_ + 1e-9));
    const RawStep sample = constant_step(k_optical, 1.0 / sample_rate_, mass, gamma,
                                         config_.protocol.retrap_heating ? diffusion : 0.0);
    sample_step_ = {sample.flow, cholesky_psd(sample.noise)};
    detector_sigma_ = std::sqrt(0.5 * config_.protocol.detector_noise_psd * sample_rate_);

    // Fail early on a window the lock-in cannot use.
    const std::vector<double> probe(trace_samples_, 0.0);
    lockin_reconstruct(probe, omega, config_.protocol.measure_window, sample_rate_);
}

std::vector<double> ShotSimulator::retrap_trace(double z, double p) const {
    std::vector<double> trace(trace_samples_);
    Vec2 x{z, p};
    for (std::size_t k = 0; k < trace_samples_; ++k) {
        trace[k] = x.x;
        x = sample_step_.flow * x;
    }
    return trace;
}

Shot ShotSimulator::simulate(std::uint64_t seed) const {
    Shot shot;
    shot.release_time = release_time_;
    shot.axis = config_.axis.label;
    shot.seed = seed;

    PhiloxStream rng(seed, 0u);
    const GaussianState& init = config_.initial;
    Vec2 x{init.mean_position, init.mean_momentum};
    {
        const double n1 = rng.normal();
        const double n2 = rng.normal();
        x.x += initial_factor_.a * n1;
        x.y += initial_factor_.c * n1 + initial_factor_.d * n2;
    }
    for (const auto& step : steps_) x = apply(step, x, rng);
    shot.true_position = x.x;
    shot.true_momentum = x.y;

    // Detector noise draws come from their own substream so toggling it
    // leaves the dynamics of a seed unchanged.
    PhiloxStream detector(seed, 1u);
    std::vector<double> trace(trace_samples_);
    for (std::size_t k = 0; k < trace_samples_; ++k) {
        trace[k] = x.x + (detector_sigma_ > 0.0 ? detector_sigma_ * detector.normal() : 0.0);
        x = apply(sample_step_, x, rng);
    }
    try {
        const LockinResult r = lockin_reconstruct(trace, config_.axis.trap_frequency,
                                                  config_.protocol.measure_window, sample_rate_);
        shot.reconstructed_position = r.position();
        shot.reconstructed_momentum = r.momentum(config_.mass, config_.axis.trap_frequency);
    } catch (const ReconstructionError&) {
        shot.valid = false;
    }
    shot.valid = shot.valid && std::isfinite(shot.reconstructed_position) &&
                 std::isfinite(shot.reconstructed_momentum);
    return shot;
}

Shot simulate_shot(const ShotConfig& config, double release_time, std::uint64_t seed) {
    return ShotSimulator(config, release_time).simulate(seed);
}

EnsembleResult run_ensemble(const ShotConfig& config, double release_time,
                            const EnsembleOptions& options) {
    const int n = options.shots > 0 ? options.shots : config.protocol.shots_per_release;
    if (n < 2) throw EnsembleError("an ensemble needs at least 2 shots");
    const ShotSimulator sim(config, release_time);

    EnsembleResult result;
    result.shots.resize(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            const std::uint64_t seed = options.seed_base + static_cast<std::uint64_t>(i);
            try {
                result.shots[static_cast<std::size_t>(i)] = sim.simulate(seed);
            } catch (const Error&) {
                Shot bad;
                bad.release_time = release_time;
                bad.axis = config.axis.label;
                bad.seed = seed;
                bad.valid = false;
                result.shots[static_cast<std::size_t>(i)] = bad;
            }
        }
    };
    const int workers = std::clamp(options.workers, 1, n);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    std::vector<double> zs, ps;
    zs.reserve(result.shots.size());
    ps.reserve(result.shots.size());
    for (const auto& s : result.shots) {
        if (!s.valid) {
            ++result.invalid_count;
            continue;
        }
        zs.push_back(s.reconstructed_position);
        ps.push_back(s.reconstructed_momentum);
    }
    if (static_cast<double>(result.invalid_count) > 0.01 * n) {
        std::ostringstream msg;
        msg << result.invalid_count << " of " << n << " shots are invalid (limit 1%)";
        throw EnsembleError(msg.str());
    }
    if (zs.size() < 2) throw EnsembleError("fewer than 2 valid shots");

    result.sample_sigma = stats::stddev(zs);
    result.sample_sigma_err = stats::bootstrap_stddev_error(
        zs, options.bootstrap_resamples, options.seed_base ^ 0x9E3779B97F4A7C15ull);
    result.sample_moments.mean_position = stats::mean(zs);
    result.sample_moments.mean_momentum = stats::mean(ps);
    result.sample_moments.var_position = stats::variance(zs);
    result.sample_moments.var_momentum = stats::variance(ps);
    result.sample_moments.covar = stats::covariance(zs, ps);

    // Rotate in (z, w = p / (m Omega)) so both coordinates are lengths.
    const double scale = config.mass * config.axis.trap_frequency;
    std::vector<double> ws(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) ws[i] = ps[i] / scale;
    const double angle = options.align_major_axis
                             ? stats::principal_angle(stats::variance(zs), stats::covariance(zs, ws),
                                                      stats::variance(ws))
                             : 0.0;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    std::vector<double> major(zs.size()), minor(zs.size()), minor_p(zs.size());
    for (std::size_t i = 0; i < zs.size(); ++i) {
        major[i] = c * zs[i] + s * ws[i];
        minor[i] = -s * zs[i] + c * ws[i];
        minor_p[i] = minor[i] * scale;
    }
    result.rotation_angle = angle;
    result.major_sigma = stats::stddev(major);
    result.minor_sigma = stats::stddev(minor);
    result.histogram2d = stats::histogram2d(major, minor_p);
    const double p1 = stats::dagostino_pearson_pvalue(major);
    const double p2 = stats::dagostino_pearson_pvalue(minor);
    result.gaussianity_pvalue = std::min(p1, p2);
    if (std::isnan(p1) || std::isnan(p2)) result.gaussianity_pvalue = std::nan("");
    return result;
}

}  // namespace levexp
