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

// Parameter estimation from sigma(t_r) curves and the derived quantities
// (expansion ratio, coherence length) that follow from a fit.

#ifndef LEVEXP_ESTIMATION_HPP
#define LEVEXP_ESTIMATION_HPP

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "levexp/analytic_dynamics.hpp"
#include "levexp/moment_propagator.hpp"

namespace levexp {

enum class FitModel { inverted, jump_micromotion };

std::string_view to_string(FitModel model);
FitModel parse_fit_model(std::string_view text);

inline constexpr int kNumFitParams = 5;

/// Order used by every 5-vector and the covariance matrix.
enum FitParamIndex { kGamma1 = 0, kTrapFrequency, kDarkFrequency, kSigma0Sq, kReleasePhase };

std::string_view fit_param_name(int index);

struct FitParams {
    double gamma1 = 0.0;          // 1/s
    double trap_frequency = 0.0;  // Omega, rad/s
    double dark_frequency = 0.0;  // omega, rad/s
    double sigma0_sq = 0.0;       // m^2
    double release_phase = 0.0;   // phi, rad

    std::array<double, kNumFitParams> to_array() const;
    static FitParams from_array(const std::array<double, kNumFitParams>& v);
};

struct FitBounds {
    FitParams lower{0.0, 0.0, 0.0, 0.0, -1e300};
    FitParams upper{1e300, 1e300, 1e300, 1e300, 1e300};
};

/// Fixed inputs of the model that are not fitted.
struct FitContext {
    double mass = 0.0;                    // kg
    double measurement_broadening = 0.0;  // delta sigma, m; 0 disables
    // jump_micromotion only
    double rf_frequency = 0.0;  // rad/s
    double mathieu_a = 0.0;
};

struct FitOptions {
    int max_iterations = 500;
    double step_tolerance = 1e-8;  // relative parameter step
    double default_relative_error = 0.03;
    /// Optional per-parameter internal scale; by default |initial guess|.
    /// The result does not depend on this beyond rounding.
    std::optional<std::array<double, kNumFitParams>> parameter_scale;
    /// Parameters held at their initial value. phi is always held for the
    /// inverted model.
    std::array<bool, kNumFitParams> fixed{};
};

struct FitResult {
    FitParams params;
    std::array<std::array<double, kNumFitParams>, kNumFitParams> covariance{};
    // (J^T W J)^-1 normalised to unit diagonal; defined even for a perfect fit.
    std::array<std::array<double, kNumFitParams>, kNumFitParams> correlation_matrix{};
    double residual_variance = 0.0;  // chi2 / (n - free parameters)
    double residual_rms = 0.0;  // m, unweighted
    double chi2 = 0.0;          // weighted sum of squared residuals
    int n_points = 0;
    FitModel model = FitModel::inverted;
    FitContext context;
    int iterations = 0;
    std::array<bool, kNumFitParams> fixed{};
    std::vector<double> cost_history;  // objective after each accepted step
    std::vector<double> times;         // s, as fitted
    std::vector<double> residuals;     // m, model - data

    double stderr_of(int index) const;
    double correlation(int i, int j) const;
    int free_parameter_count() const;
};

/// Joint confidence region of the free parameters at `level`: the
/// linearised ellipsoid in log coordinates for the positive parameters
/// (phi stays linear), with the p F(p, n - p) threshold that accounts for the
/// estimated residual variance. Log coordinates follow the curved valleys
/// of products such as sigma0^2 Omega^2 far better than a linear ellipse.
bool in_confidence_region(const FitResult& fit, const FitParams& candidate, double level = 0.95);

/// sigma(t) predicted by the model for the given parameters (including the
/// measurement broadening in the context).
std::vector<double> model_sigma(FitModel model, const FitParams& params,
                                const FitContext& context, std::span<const double> times);

/// Weighted Levenberg-Marquardt fit of sigma(t). Times may repeat and need
/// not be sorted. Weights are data.sigma_err when present, else
/// options.default_relative_error * sigma.
/// Throws FitError (non-convergence, bad input) or DegeneracyError.
FitResult fit_expansion(const ExpansionCurve& data, FitModel model, const FitParams& guess,
                        const FitBounds& bounds, const FitContext& context,
                        const FitOptions& options = {});

/// Starting point from the data alone: sigma0 from the earliest point,
/// Omega from the early free-expansion slope, omega from the late log-slope
/// (inverted) or the first maximum (jump), Gamma1 from a linear solve.
FitParams initial_guess(const ExpansionCurve& data, FitModel model, const FitContext& context);

double expansion_ratio(double sigma_t, double sigma_0);

struct CoherenceCurve {
    std::vector<double> times;        // s
    std::vector<double> xi;           // m, fitted heating
    std::vector<double> xi_improved;  // m, heating multiplied by heating_scale
    double xi_zpm_threshold = 0.0;    // m, sqrt(8) * zero-point motion
    double heating_scale = 1.0;
};

/// Coherence length along the fitted trajectory. The initial state has
/// sigma0 from the fit and purity 1 / (2 nbar0 + 1).
CoherenceCurve coherence_curve(const FitResult& fit, double mass, double nbar0,
                               std::span<const double> times, double heating_scale);

}  // namespace levexp

#endif  // LEVEXP_ESTIMATION_HPP
