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

// Single-trajectory Monte Carlo of the release / dark evolution / retrap /
// lock-in protocol.
//
// Timeline of one shot, with t = 0 at release:
//   [-t_FB, 0)        optical trap, feedback off, axis noise
//   [0, t_r)          dark schedule (inverted, Mathieu or free), axis noise
//   [t_r, t_r + t_m)  optical trap again; z(t) sampled at the detector rate
// The lock-in estimate of (z, p) at t_r is the shot's output.
//
// The Langevin equation dz = p/m dt, dp = (-k(t) z - gamma p) dt + sqrt(D) dW
// is linear, so each substep is advanced by its exact flow map composed with
// a Gaussian noise increment of the matching covariance. Constant-stiffness
// spans use the closed-form exponential; RF-modulated spans use a fourth
// order Magnus step on a fine grid.

#ifndef LEVEXP_TRAJECTORY_ENSEMBLE_HPP
#define LEVEXP_TRAJECTORY_ENSEMBLE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "levexp/core_model.hpp"
#include "levexp/moment_propagator.hpp"
#include "levexp/statistics.hpp"

namespace levexp {

struct Shot {
    double release_time = 0.0;            // s
    double reconstructed_position = 0.0;  // m
    double reconstructed_momentum = 0.0;  // kg m/s
    AxisLabel axis = AxisLabel::z;
    std::uint64_t seed = 0;
    bool valid = true;
    // Simulated ground truth at t_r, for diagnostics.
    double true_position = 0.0;
    double true_momentum = 0.0;
};

/// Everything that defines one axis' experiment apart from t_r and the seed.
struct ShotConfig {
    AxisParams axis;
    double mass = 0.0;
    GaussianState initial;       // at feedback-off (t = -t_FB)
    StiffnessSchedule dark;      // must cover [0, t_r]
    NoiseSpec noise;
    ProtocolSpec protocol;
};

struct LockinResult {
    double amplitude = 0.0;  // m
    double phase = 0.0;      // rad; z(t) ~ A cos(Omega t + phase)
    int periods_used = 0;

    double position() const;
    double momentum(double mass, double trap_frequency) const;
};

/// Demodulates z(t_k), t_k = k / sample_rate, at `trap_frequency` over the
/// largest whole number of periods that fits in the trace and within
/// `measure_window`. The in-phase/quadrature sums are normalised by their
/// 2x2 Gram matrix, which makes the estimate exact for any pure sinusoid.
LockinResult lockin_reconstruct(std::span<const double> trace, double trap_frequency,
                                double measure_window, double sample_rate);

/// Quadrature sum sqrt(sigma^2 + delta^2) of the measurement-induced broadening.
double apply_measurement_broadening(double sigma_true, double delta_sigma);

/// Precomputed transition sequence for one t_r; shots replay it with their
/// own random streams. Construct once and call simulate() from any number of
/// threads.
class ShotSimulator {
  public:
    ShotSimulator(ShotConfig config, double release_time);

    Shot simulate(std::uint64_t seed) const;

    /// Deterministic position trace (noise-free) from a given state at t_r,
    /// as the detector would record it. Exposed for tests.
    std::vector<double> retrap_trace(double z, double p) const;

    double sample_rate() const { return sample_rate_; }
    std::size_t trace_samples() const { return trace_samples_; }
    const ShotConfig& config() const { return config_; }

    struct Step {
        Mat2 flow;
        Mat2 noise_factor;  // lower Cholesky factor of the increment covariance
    };

  private:
    ShotConfig config_;
    double release_time_;
    double sample_rate_ = 0.0;
    std::size_t trace_samples_ = 0;
    Mat2 initial_factor_;
    std::vector<Step> steps_;  // feedback-off lead + dark span
    Step sample_step_;         // one detector sample interval in the optical trap
    double detector_sigma_ = 0.0;
};

Shot simulate_shot(const ShotConfig& config, double release_time, std::uint64_t seed);

struct EnsembleOptions {
    std::uint64_t seed_base = 1;
    int workers = 1;
    int bootstrap_resamples = 1000;
    int shots = 0;  // 0 uses protocol.shots_per_release
    bool align_major_axis = true;
};

struct EnsembleResult {
    std::vector<Shot> shots;
    std::size_t invalid_count = 0;

    double sample_sigma = 0.0;      // m, std dev of reconstructed positions
    double sample_sigma_err = 0.0;  // m, bootstrap
    GaussianState sample_moments;   // sample mean and covariance of (z, p)

    // Post-processing rotation in (z, p / (m Omega)) that aligns the major
    // axis of the cloud with the position axis.
    double rotation_angle = 0.0;  // rad
    double major_sigma = 0.0;     // m
    double minor_sigma = 0.0;     // m, low confidence
    bool minor_axis_low_confidence = true;

    stats::Histogram2D histogram2d;  // rotated (z, p) cloud, SI units
    double gaussianity_pvalue = 0.0; // min over the two marginals
};

/// Runs shots with seeds seed_base + index on `workers` threads; results are
/// independent of the worker count. Throws EnsembleError when more than 1%
/// of the shots are invalid or fewer than 2 shots are requested.
EnsembleResult run_ensemble(const ShotConfig& config, double release_time,
                            const EnsembleOptions& options = {});

/// Full-protocol stiffness schedule from -t_FB to t_r shifted to start at 0:
/// the optical lead m Omega^2 followed by the dark span. Propagating
/// `config.initial` through it gives the exact moments the ensemble samples.
StiffnessSchedule protocol_schedule(const ShotConfig& config, double release_time);

}  // namespace levexp

#endif  // LEVEXP_TRAJECTORY_ENSEMBLE_HPP
