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

// Numerical propagation of Gaussian first and second moments under a
// piecewise, possibly RF-modulated, quadratic potential with gas damping and
// white force noise:
//
//   d mean / dt  = A(t) mean,
//   d Sigma / dt = A(t) Sigma + Sigma A(t)^T + diag(0, D_pp),
//   A(t) = [[0, 1/m], [-k(t), -gamma]].
//
// Integration uses classical RK4 with step doubling; each interval is refined
// until the Richardson error estimate falls below the requested tolerance and
// the extrapolated value is returned. The step sequence is fixed by the
// inputs, so results are bitwise reproducible.

#ifndef LEVEXP_MOMENT_PROPAGATOR_HPP
#define LEVEXP_MOMENT_PROPAGATOR_HPP

#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "levexp/core_model.hpp"

namespace levexp {

/// k = const [N/m]; negative k is an inverted potential.
struct ConstantStiffness {
    double k = 0.0;
};

/// k(t)/m = (rf/2)^2 [a - 2 q cos(rf (t - t_ref) + phase)].
struct MathieuStiffness {
    double a = 0.0;
    double q = 0.0;
    double rf_frequency = 0.0;  // rad/s
    double rf_phase = 0.0;      // rad, RF phase at t = t_ref
    double t_ref = 0.0;         // s
};

struct ScheduleSegment {
    double t_start = 0.0;
    double t_end = 0.0;
    std::variant<ConstantStiffness, MathieuStiffness> params;
};

class StiffnessSchedule {
  public:
    StiffnessSchedule() = default;
    /// Throws ConfigError unless the segments are ordered, non-empty and
    /// contiguous.
    explicit StiffnessSchedule(std::vector<ScheduleSegment> segments);

    static StiffnessSchedule constant(double k, double t_end, double t_start = 0.0);

    /// Appends a segment starting where the schedule currently ends.
    StiffnessSchedule& then_constant(double duration, double k);
    StiffnessSchedule& then_mathieu(double duration, MathieuStiffness params);

    const std::vector<ScheduleSegment>& segments() const { return segments_; }
    bool empty() const { return segments_.empty(); }
    double t_start() const;
    double t_end() const;

    /// Stiffness [N/m] at time t. Segment boundaries belong to the later
    /// segment.
    double stiffness(double t, double mass) const;

    /// Throws ConfigError if [t0, t1] is not covered.
    void check_covers(double t0, double t1) const;

  private:
    const ScheduleSegment& segment_at(double t) const;
    std::vector<ScheduleSegment> segments_;
};

double segment_stiffness(const ScheduleSegment& seg, double t, double mass);

struct PropagationOptions {
    double relative_tolerance = 1e-11;  // per integration interval
    long max_steps_per_interval = 1L << 24;
};

/// Propagates `initial` from schedule.t_start() to t_final.
GaussianState propagate_moments(const GaussianState& initial, const StiffnessSchedule& schedule,
                                const NoiseSpec& noise, double mass, double t_final,
                                double dt_max, const PropagationOptions& options = {});

/// States at each of the (non-decreasing) sample times, all >= schedule.t_start().
std::vector<GaussianState> propagate_moments_trace(const GaussianState& initial,
                                                   const StiffnessSchedule& schedule,
                                                   const NoiseSpec& noise, double mass,
                                                   std::span<const double> times, double dt_max,
                                                   const PropagationOptions& options = {});

/// Fundamental matrix of the deterministic linear flow over [t0, t1].
Mat2 propagate_flow(const StiffnessSchedule& schedule, double mass, double gas_damping,
                    double t0, double t1, double dt_max,
                    const PropagationOptions& options = {});

struct FloquetResult {
    double characteristic_exponent = 0.0;  // beta
    double secular_frequency = 0.0;        // rad/s; NaN when unstable
    bool stable = false;
    Mat2 monodromy;
};

/// Monodromy over one RF period of z'' + (rf/2)^2 (a - 2q cos(rf t)) z = 0.
/// beta = arccos(tr/2)/pi on the principal branch, secular = beta rf / 2.
FloquetResult floquet_analyze(double a, double q, double rf_frequency);

/// Smallest q >= 0 whose Floquet secular frequency equals `secular_target`.
double calibrate_mathieu_from_secular(double secular_target, double rf_frequency, double a);

/// Passive rotation of the (x, y) pair into (u, v); cross-axis correlations
/// are taken as zero.
std::pair<GaussianState, GaussianState> rotate_plane(const GaussianState& state_x,
                                                     const GaussianState& state_y,
                                                     double rotation);

/// Dark-potential stiffness for an axis over [t_start, t_end]. Harmonic axes
/// become a Mathieu segment when a Paul trap is given (q calibrated from the
/// axis secular frequency, RF phase = axis.release_phase at t_start), else a
/// constant +m w^2 segment.
StiffnessSchedule make_dark_schedule(const AxisParams& axis, double mass, double t_start,
                                     double t_end, const std::optional<PaulTrapSpec>& paul_trap);

/// Default step bound used by the CLI and ensemble for a schedule.
double default_dt_max(const StiffnessSchedule& schedule, double mass);

}  // namespace levexp

#endif  // LEVEXP_MOMENT_PROPAGATOR_HPP
