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

#include "levexp/moment_propagator.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/tools/roots.hpp>

namespace levexp {

namespace {

constexpr double kPi = std::numbers::pi;

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
Vec<N> axpy(const Vec<N>& y, double h, const Vec<N>& k) {
    Vec<N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + h * k[i];
    return out;
}

template <std::size_t N, class Rhs>
Vec<N> rk4(Vec<N> y, double t0, double t1, long n, const Rhs& f) {
    const double h = (t1 - t0) / static_cast<double>(n);
    for (long i = 0; i < n; ++i) {
        const double t = t0 + static_cast<double>(i) * h;
        const Vec<N> k1 = f(t, y);
        const Vec<N> k2 = f(t + 0.5 * h, axpy(y, 0.5 * h, k1));
        const Vec<N> k3 = f(t + 0.5 * h, axpy(y, 0.5 * h, k2));
        const Vec<N> k4 = f(t + h, axpy(y, h, k3));
        for (std::size_t j = 0; j < N; ++j)
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    return y;
}

// Step doubling until |y_2n - y_n| / 15 < tol (measured by `err`), then the
// Richardson-extrapolated (16 y_2n - y_n) / 15.
template <std::size_t N, class Rhs, class ErrNorm>
Vec<N> integrate_interval(const Vec<N>& y0, double t0, double t1, double h0, const Rhs& f,
                          const ErrNorm& err, const PropagationOptions& opt) {
    if (t1 <= t0) return y0;
    long n = std::max(1L, static_cast<long>(std::ceil((t1 - t0) / h0)));
    Vec<N> coarse = rk4(y0, t0, t1, n, f);
    while (true) {
        if (2 * n > opt.max_steps_per_interval) {
            std::ostringstream msg;
            msg << "step underflow on [" << t0 << ", " << t1 << "] after " << n
                << " RK4 steps; tolerance " << opt.relative_tolerance << " not reached";
            throw IntegrationError(msg.str());
        }
        const Vec<N> fine = rk4(y0, t0, t1, 2 * n, f);
        Vec<N> diff;
        for (std::size_t i = 0; i < N; ++i) diff[i] = (fine[i] - coarse[i]) / 15.0;
        const double e = err(fine, diff);
        if (!std::isfinite(e)) throw IntegrationError("non-finite state during integration");
        if (e <= opt.relative_tolerance) {
            Vec<N> out;
            for (std::size_t i = 0; i < N; ++i) out[i] = fine[i] + diff[i];
            return out;
        }
        coarse = fine;
        n *= 2;
    }
}

double max_rate_squared(const ScheduleSegment& seg, double mass) {
    if (const auto* c = std::get_if<ConstantStiffness>(&seg.params)) return std::abs(c->k) / mass;
    const auto& m = std::get<MathieuStiffness>(seg.params);
    const double half = 0.5 * m.rf_frequency;
    return half * half * (std::abs(m.a) + 2.0 * std::abs(m.q));
}

// Physics-based step bound for one segment.
double segment_step(const ScheduleSegment& seg, double mass, double gas_damping, double dt_max) {
    double h = dt_max;
    const double rate2 = max_rate_squared(seg, mass);
    if (rate2 > 0.0) h = std::min(h, 1.0 / (50.0 * std::sqrt(rate2)));
    if (const auto* m = std::get_if<MathieuStiffness>(&seg.params))
        h = std::min(h, 2.0 * kPi / m->rf_frequency / 200.0);
    if (gas_damping > 0.0) h = std::min(h, 1.0 / (50.0 * gas_damping));
    return h;
}

using Moments = Vec<5>;  // mean z, mean p, Szz, Szp, Spp

Moments to_vec(const GaussianState& s) {
    return {s.mean_position, s.mean_momentum, s.var_position, s.covar, s.var_momentum};
}

GaussianState from_vec(const Moments& y) {
    GaussianState s;
    s.mean_position = y[0];
    s.mean_momentum = y[1];
    s.var_position = y[2];
    s.covar = y[3];
    s.var_momentum = y[4];
    return s;
}

std::vector<double> breakpoints(const StiffnessSchedule& schedule, double t0, double t1,
                                std::span<const double> extra) {
    std::vector<double> pts{t0, t1};
    for (const auto& seg : schedule.segments()) {
        if (seg.t_start > t0 && seg.t_start < t1) pts.push_back(seg.t_start);
    }
    for (double t : extra)
        if (t > t0 && t < t1) pts.push_back(t);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

const ScheduleSegment& segment_for_interval(const StiffnessSchedule& schedule, double a,
                                            double b) {
    const double mid = 0.5 * (a + b);
    for (const auto& seg : schedule.segments())
        if (mid >= seg.t_start && mid <= seg.t_end) return seg;
    throw ConfigError("schedule gap inside propagation interval");
}

// Flow map Phi and accumulated noise Q of one interval, in the scaled
// coordinates (z, w = p / (m s)) so all entries are O(1). Phi is projected
// onto its exact determinant exp(-gamma (b - a)) (Liouville), which keeps
// det Sigma invariant to rounding in the noiseless case.
struct IntervalMap {
    Mat2 phi;
    double q_zz = 0.0, q_zp = 0.0, q_pp = 0.0;
};

IntervalMap interval_map(const ScheduleSegment& seg, double a, double b, double mass,
                         double gamma, double diffusion, double dt_max,
                         const PropagationOptions& opt) {
    const double rate2 = max_rate_squared(seg, mass);
    const double s = rate2 > 0.0 ? std::sqrt(rate2) : 1.0 / std::max(b - a, 1e-300);
    const double ms = mass * s;
    const double d = diffusion / (ms * ms);  // w-diffusion

    using State = Vec<7>;  // Phi column-major [z1, w1, z2, w2], Q [zz, zw, ww]
    auto rhs = [&](double t, const State& f) -> State {
        const double k_over_m = segment_stiffness(seg, t, mass) / mass;
        const double c = k_over_m / s;
        return {s * f[1],
                -c * f[0] - gamma * f[1],
                s * f[3],
                -c * f[2] - gamma * f[3],
                2.0 * s * f[5],
                s * f[6] - c * f[4] - gamma * f[5],
                -2.0 * c * f[5] - 2.0 * gamma * f[6] + d};
    };
    auto err = [](const State& ref, const State& diff) {
        double scale = 1.0;
        for (int i = 0; i < 4; ++i) scale = std::max(scale, std::abs(ref[i]));
        double e = 0.0;
        for (int i = 0; i < 4; ++i) e = std::max(e, std::abs(diff[i]) / scale);
        const double tiny = std::numeric_limits<double>::min();
        const double dz = std::max(std::sqrt(std::max(ref[4], 0.0)), tiny);
        const double dw = std::max(std::sqrt(std::max(ref[6], 0.0)), tiny);
        return std::max({e, std::abs(diff[4]) / (dz * dz), std::abs(diff[5]) / (dz * dw),
                         std::abs(diff[6]) / (dw * dw)});
    };
    const State y0{1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0};
    const double h0 = segment_step(seg, mass, gamma, dt_max);
    const State y = integrate_interval<7>(y0, a, b, h0, rhs, err, opt);

    Mat2 phi{y[0], y[2], y[1], y[3]};  // scaled, row-major
    const double w = phi.b * phi.c;
    const double det = std::fma(phi.a, phi.d, -w) - std::fma(phi.b, phi.c, -w);
    const double target = std::exp(-gamma * (b - a));
    if (det > 0.0) {
        const double c = std::sqrt(target / det);
        phi = {phi.a * c, phi.b * c, phi.c * c, phi.d * c};
    }
    // Undo the scaling: Phi = S Phi~ S^-1 with S = diag(1, m s).
    IntervalMap out;
    out.phi = {phi.a, phi.b / ms, phi.c * ms, phi.d};
    out.q_zz = y[4];
    out.q_zp = y[5] * ms;
    out.q_pp = y[6] * ms * ms;
    return out;
}

Moments advance_moments(const Moments& y, const ScheduleSegment& seg, double a, double b,
                        double mass, double gamma, double diffusion, double dt_max,
                        const PropagationOptions& opt) {
    if (b <= a) return y;
    const IntervalMap m = interval_map(seg, a, b, mass, gamma, diffusion, dt_max, opt);
    const Mat2& f = m.phi;
    // Sigma' = Phi Sigma Phi^T + Q
    const double szz = y[2], szp = y[3], spp = y[4];
    const double t_zz = f.a * szz + f.b * szp, t_zp = f.a * szp + f.b * spp;
    const double t_pz = f.c * szz + f.d * szp, t_pp = f.c * szp + f.d * spp;
    return {f.a * y[0] + f.b * y[1],
            f.c * y[0] + f.d * y[1],
            t_zz * f.a + t_zp * f.b + m.q_zz,
            t_zz * f.c + t_zp * f.d + m.q_zp,
            t_pz * f.c + t_pp * f.d + m.q_pp};
}

void check_propagation_inputs(const StiffnessSchedule& schedule, const NoiseSpec& noise,
                              double mass, double dt_max) {
    if (!(mass > 0.0)) throw DomainError("mass must be positive");
    if (!(dt_max > 0.0)) throw DomainError("dt_max must be positive");
    if (schedule.empty()) throw ConfigError("empty stiffness schedule");
    if (!(noise.heating_rate >= 0.0 && noise.gas_damping >= 0.0))
        throw DomainError("noise rates must be >= 0");
}

}  // namespace

double segment_stiffness(const ScheduleSegment& seg, double t, double mass) {
    if (const auto* c = std::get_if<ConstantStiffness>(&seg.params)) return c->k;
    const auto& m = std::get<MathieuStiffness>(seg.params);
    const double half = 0.5 * m.rf_frequency;
    return mass * half * half *
           (m.a - 2.0 * m.q * std::cos(m.rf_frequency * (t - m.t_ref) + m.rf_phase));
}

StiffnessSchedule::StiffnessSchedule(std::vector<ScheduleSegment> segments)
    : segments_(std::move(segments)) {
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& s = segments_[i];
        if (!(std::isfinite(s.t_start) && std::isfinite(s.t_end) && s.t_end >= s.t_start)) {
            throw ConfigError("schedule segment " + std::to_string(i) +
                              " has an invalid time span");
        }
        if (const auto* m = std::get_if<MathieuStiffness>(&s.params)) {
            if (!(m->rf_frequency > 0.0))
                throw ConfigError("Mathieu segment " + std::to_string(i) +
                                  " needs a positive RF frequency");
        }
        if (i > 0 && s.t_start != segments_[i - 1].t_end) {
            std::ostringstream msg;
            msg << "schedule gap or overlap between segment " << i - 1 << " (ends "
                << segments_[i - 1].t_end << " s) and segment " << i << " (starts " << s.t_start
                << " s)";
            throw ConfigError(msg.str());
        }
    }
}

StiffnessSchedule StiffnessSchedule::constant(double k, double t_end, double t_start) {
    return StiffnessSchedule({ScheduleSegment{t_start, t_end, ConstantStiffness{k}}});
}

StiffnessSchedule& StiffnessSchedule::then_constant(double duration, double k) {
    const double start = empty() ? 0.0 : t_end();
    if (!(duration >= 0.0)) throw ConfigError("segment duration must be >= 0");
    segments_.push_back({start, start + duration, ConstantStiffness{k}});
    return *this;
}

StiffnessSchedule& StiffnessSchedule::then_mathieu(double duration, MathieuStiffness params) {
    const double start = empty() ? 0.0 : t_end();
    if (!(duration >= 0.0)) throw ConfigError("segment duration must be >= 0");
    if (!(params.rf_frequency > 0.0)) throw ConfigError("Mathieu segment needs rf_frequency > 0");
    segments_.push_back({start, start + duration, params});
    return *this;
}

double StiffnessSchedule::t_start() const {
    if (empty()) throw ConfigError("empty stiffness schedule");
    return segments_.front().t_start;
}

double StiffnessSchedule::t_end() const {
    if (empty()) throw ConfigError("empty stiffness schedule");
    return segments_.back().t_end;
}

const ScheduleSegment& StiffnessSchedule::segment_at(double t) const {
    if (empty() || t < t_start() || t > t_end()) {
        std::ostringstream msg;
        msg << "time " << t << " s is outside the stiffness schedule";
        throw ConfigError(msg.str());
    }
    for (std::size_t i = segments_.size(); i-- > 0;)
        if (t >= segments_[i].t_start) return segments_[i];
    return segments_.front();
}

double StiffnessSchedule::stiffness(double t, double mass) const {
    return segment_stiffness(segment_at(t), t, mass);
}

void StiffnessSchedule::check_covers(double t0, double t1) const {
    if (empty()) throw ConfigError("empty stiffness schedule");
    if (t0 < t_start() || t1 > t_end()) {
        std::ostringstream msg;
        msg << "schedule [" << t_start() << ", " << t_end() << "] s does not cover [" << t0
            << ", " << t1 << "] s";
        throw ConfigError(msg.str());
    }
}

std::vector<GaussianState> propagate_moments_trace(const GaussianState& initial,
                                                   const StiffnessSchedule& schedule,
                                                   const NoiseSpec& noise, double mass,
                                                   std::span<const double> times, double dt_max,
                                                   const PropagationOptions& options) {
    check_propagation_inputs(schedule, noise, mass, dt_max);
    const GaussianState start = enforce_heisenberg(initial);
    if (times.empty()) return {};
    if (!std::is_sorted(times.begin(), times.end()))
        throw DomainError("trace times must be non-decreasing");
    const double t0 = schedule.t_start();
    schedule.check_covers(t0, times.back());
    if (times.front() < t0) throw DomainError("trace time precedes schedule start");

    const double diffusion = noise.momentum_diffusion(mass);
    const std::vector<double> pts = breakpoints(schedule, t0, times.back(), times);

    std::vector<GaussianState> out;
    out.reserve(times.size());
    Moments y = to_vec(start);
    std::size_t next = 0;
    auto emit = [&](double t) {
        while (next < times.size() && times[next] == t) {
            out.push_back(enforce_heisenberg(from_vec(y)));
            ++next;
        }
    };
    emit(pts.front());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const auto& seg = segment_for_interval(schedule, pts[i], pts[i + 1]);
        y = advance_moments(y, seg, pts[i], pts[i + 1], mass, noise.gas_damping, diffusion,
                            dt_max, options);
        emit(pts[i + 1]);
    }
    return out;
}

GaussianState propagate_moments(const GaussianState& initial, const StiffnessSchedule& schedule,
                                const NoiseSpec& noise, double mass, double t_final,
                                double dt_max, const PropagationOptions& options) {
    const double t[] = {t_final};
    return propagate_moments_trace(initial, schedule, noise, mass, t, dt_max, options).front();
}

Mat2 propagate_flow(const StiffnessSchedule& schedule, double mass, double gas_damping,
                    double t0, double t1, double dt_max, const PropagationOptions& options) {
    if (!(mass > 0.0)) throw DomainError("mass must be positive");
    if (!(dt_max > 0.0)) throw DomainError("dt_max must be positive");
    if (t1 < t0) throw DomainError("propagate_flow requires t1 >= t0");
    schedule.check_covers(t0, t1);

    // Work in z and w = p / (m s) so both columns are O(1).
    double rate2 = 0.0;
    for (const auto& seg : schedule.segments()) rate2 = std::max(rate2, max_rate_squared(seg, mass));
    const double s = rate2 > 0.0 ? std::sqrt(rate2) : 1.0 / std::max(t1 - t0, 1e-300);

    using Flow = Vec<4>;  // column-major [z1, w1, z2, w2]
    Flow y{1.0, 0.0, 0.0, 1.0};
    auto flow_err = [](const Flow& ref, const Flow& diff) {
        double scale = 1.0;
        for (double v : ref) scale = std::max(scale, std::abs(v));
        double e = 0.0;
        for (double v : diff) e = std::max(e, std::abs(v));
        return e / scale;
    };
    const auto pts = breakpoints(schedule, t0, t1, {});
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const auto& seg = segment_for_interval(schedule, pts[i], pts[i + 1]);
        auto rhs = [&](double t, const Flow& f) -> Flow {
            const double k_over_m = segment_stiffness(seg, t, mass) / mass;
            // z' = s w, w' = -(k/m)/s z - gamma w
            return {s * f[1], -k_over_m / s * f[0] - gas_damping * f[1],
                    s * f[3], -k_over_m / s * f[2] - gas_damping * f[3]};
        };
        const double h0 = segment_step(seg, mass, gas_damping, dt_max);
        y = integrate_interval<4>(y, pts[i], pts[i + 1], h0, rhs, flow_err, options);
    }
    const double ms = mass * s;
    // Phi = S Phi~ S^-1 with S = diag(1, m s).
    return {y[0], y[2] / ms, y[1] * ms, y[3]};
}

FloquetResult floquet_analyze(double a, double q, double rf_frequency) {
    if (!std::isfinite(a) || !std::isfinite(q)) throw DomainError("a and q must be finite");
    if (!(rf_frequency > 0.0)) throw DomainError("rf_frequency must be positive");
    // Work in unit mass; the flow of z is mass independent.
    const double period = 2.0 * kPi / rf_frequency;
    const auto schedule = StiffnessSchedule(
        {ScheduleSegment{0.0, period, MathieuStiffness{a, q, rf_frequency, 0.0, 0.0}}});
    PropagationOptions opt;
    opt.relative_tolerance = 1e-13;
    FloquetResult r;
    r.monodromy = propagate_flow(schedule, 1.0, 0.0, 0.0, period, period, opt);
    const double half_trace = 0.5 * r.monodromy.trace();
    r.stable = std::abs(half_trace) <= 1.0 + 0.5e-9;
    if (r.stable) {
        r.characteristic_exponent = std::acos(std::clamp(half_trace, -1.0, 1.0)) / kPi;
        r.secular_frequency = 0.5 * r.characteristic_exponent * rf_frequency;
    } else {
        r.characteristic_exponent = std::numeric_limits<double>::quiet_NaN();
        r.secular_frequency = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

double calibrate_mathieu_from_secular(double secular_target, double rf_frequency, double a) {
    if (!(rf_frequency > 0.0)) throw DomainError("rf_frequency must be positive");
    if (!(secular_target >= 0.0 && secular_target < 0.5 * rf_frequency))
        throw CalibrationError("secular target must lie in [0, rf/2)");
    const double half_rf = 0.5 * rf_frequency;
    // beta extended continuously across the first-region edges: tr >= 2 maps
    // to 0 (below the region), tr <= -2 to 1 (above it).
    auto residual = [&](double q) {
        const double half_trace = 0.5 * floquet_analyze(a, q, rf_frequency).monodromy.trace();
        const double beta = std::acos(std::clamp(half_trace, -1.0, 1.0)) / kPi;
        return beta * half_rf - secular_target;
    };
    const double f0 = residual(0.0);
    if (f0 == 0.0) return 0.0;
    if (f0 > 0.0)
        throw CalibrationError("secular frequency at q = 0 already exceeds the target for this a");
    double lo = 0.0;
    double hi = 0.05;
    double fhi = residual(hi);
    while (fhi < 0.0) {
        lo = hi;
        hi += 0.05;
        if (hi > 3.0) throw CalibrationError("no q in [0, 3] reaches the secular target");
        fhi = residual(hi);
    }
    std::uintmax_t iters = 200;
    const auto [q_lo, q_hi] = boost::math::tools::toms748_solve(
        residual, lo, hi, boost::math::tools::eps_tolerance<double>(48), iters);
    const double q = 0.5 * (q_lo + q_hi);
    const auto check = floquet_analyze(a, q, rf_frequency);
    if (!check.stable) throw CalibrationError("calibrated q falls outside the stability region");
    return q;
}

std::pair<GaussianState, GaussianState> rotate_plane(const GaussianState& state_x,
                                                     const GaussianState& state_y,
                                                     double rotation) {
    const double c = std::cos(rotation);
    const double s = std::sin(rotation);
    auto mix = [](const GaussianState& p, const GaussianState& r, double wp, double wr,
                  double mp, double mr) {
        GaussianState out;
        out.mean_position = mp * p.mean_position + mr * r.mean_position;
        out.mean_momentum = mp * p.mean_momentum + mr * r.mean_momentum;
        out.var_position = wp * p.var_position + wr * r.var_position;
        out.var_momentum = wp * p.var_momentum + wr * r.var_momentum;
        out.covar = wp * p.covar + wr * r.covar;
        return out;
    };
    return {mix(state_x, state_y, c * c, s * s, c, s), mix(state_x, state_y, s * s, c * c, -s, c)};
}

StiffnessSchedule make_dark_schedule(const AxisParams& axis, double mass, double t_start,
                                     double t_end, const std::optional<PaulTrapSpec>& paul_trap) {
    axis.validate();
    const double w2 = axis.dark_frequency * axis.dark_frequency;
    switch (axis.potential) {
        case PotentialKind::inverted:
            return StiffnessSchedule::constant(-mass * w2, t_end, t_start);
        case PotentialKind::free:
            return StiffnessSchedule::constant(0.0, t_end, t_start);
        case PotentialKind::harmonic_jump:
            if (!paul_trap) return StiffnessSchedule::constant(mass * w2, t_end, t_start);
            {
                MathieuStiffness m;
                m.a = paul_trap->mathieu_a;
                m.rf_frequency = paul_trap->rf_frequency;
                m.q = calibrate_mathieu_from_secular(axis.dark_frequency, m.rf_frequency, m.a);
                m.rf_phase = axis.release_phase;
                m.t_ref = t_start;
                return StiffnessSchedule({ScheduleSegment{t_start, t_end, m}});
            }
    }
    throw ConfigError("unknown potential kind");
}

double default_dt_max(const StiffnessSchedule& schedule, double /*mass*/) {
    const double span = schedule.t_end() - schedule.t_start();
    return span > 0.0 ? span / 20.0 : 1.0;
}

}  // namespace levexp
