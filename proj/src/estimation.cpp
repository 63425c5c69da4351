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

#include "levexp/estimation.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "levexp/errors.hpp"
#include "levexp/units.hpp"

namespace levexp {

namespace {

using Cplx = std::complex<double>;
using Params = std::array<double, kNumFitParams>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// sinh(x) - x without cancellation for small |x|; works for complex x so the
// inverted model can be differentiated by complex step.
template <class T>
T sinh_minus_x(T x) {
    if (std::abs(x) < 0.5) {
        const T x2 = x * x;
        T term = x * x2 / 6.0;
        T sum = term;
        for (int k = 5; k < 24; k += 2) {
            term *= x2 / static_cast<double>((k - 1) * k);
            sum += term;
        }
        return sum;
    }
    return std::sinh(x) - x;
}

template <class T>
T inverted_variance(double t, T sigma0_sq, T big, T small, T gamma1, double mass) {
    const T wt = small * t;
    const T ch = std::cosh(wt);
    const T sh = std::sinh(wt);
    const T ratio = big / small;
    const T coherent = sigma0_sq * (ch * ch + ratio * ratio * sh * sh);
    const T noise = kHbar * big * gamma1 / (mass * small * small) *
                    (sinh_minus_x(T(2.0) * wt) / (T(2.0) * small));
    return coherent + noise;
}

std::vector<std::size_t> sorted_order(std::span<const double> times) {
    std::vector<std::size_t> idx(times.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return times[a] < times[b]; });
    return idx;
}

std::vector<double> jump_variance(const FitParams& p, const FitContext& ctx,
                                  std::span<const double> times) {
    if (!(ctx.rf_frequency > 0.0))
        throw ConfigError("jump_micromotion model needs a positive rf_frequency");
    const double q = calibrate_mathieu_from_secular(p.dark_frequency, ctx.rf_frequency,
                                                    ctx.mathieu_a);
    const auto order = sorted_order(times);
    std::vector<double> sorted(times.size());
    for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = times[order[i]];
    const double t_end = std::max(sorted.empty() ? 0.0 : sorted.back(), 1e-12);
    const StiffnessSchedule schedule({{0.0, t_end,
                                       MathieuStiffness{ctx.mathieu_a, q, ctx.rf_frequency,
                                                        p.release_phase, 0.0}}});
    const GaussianState initial =
        released_state(std::sqrt(p.sigma0_sq), p.trap_frequency, ctx.mass);
    const NoiseSpec noise = NoiseSpec::from_gamma1(p.gamma1, p.trap_frequency);
    PropagationOptions opts;
    opts.relative_tolerance = 1e-12;
    const auto states = propagate_moments_trace(initial, schedule, noise, ctx.mass, sorted,
                                                default_dt_max(schedule, ctx.mass), opts);
    std::vector<double> var(times.size());
    for (std::size_t i = 0; i < order.size(); ++i) var[order[i]] = states[i].var_position;
    return var;
}

struct Problem {
    FitModel model;
    FitContext ctx;
    std::vector<double> times;
    std::vector<double> data;
    std::vector<double> weights;
    std::vector<int> free;  // indices into the 5-vector
    Params scale{};

    Params physical(const Eigen::VectorXd& u, const Params& base) const {
        Params p = base;
        for (std::size_t j = 0; j < free.size(); ++j) p[free[j]] = u[j] * scale[free[j]];
        return p;
    }

    std::vector<double> sigma(const Params& p) const {
        return model_sigma(model, FitParams::from_array(p), ctx, times);
    }

    Eigen::VectorXd residuals(const Params& p) const {
        const auto s = sigma(p);
        Eigen::VectorXd r(static_cast<Eigen::Index>(s.size()));
        for (std::size_t i = 0; i < s.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = (s[i] - data[i]) / weights[i];
        return r;
    }

    double cost(const Params& p) const {
        try {
            const Eigen::VectorXd r = residuals(p);
            const double c = r.squaredNorm();
            return std::isfinite(c) ? c : kInf;
        } catch (const Error&) {
            return kInf;
        }
    }

    // Jacobian of the weighted residuals with respect to the scaled free
    // parameters.
    Eigen::MatrixXd jacobian(const Params& p) const {
        const auto n = static_cast<Eigen::Index>(times.size());
        const auto k = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd jac(n, k);
        if (model == FitModel::inverted) {
            const double d2 = ctx.measurement_broadening * ctx.measurement_broadening;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double t = times[static_cast<std::size_t>(i)];
                const double var = inverted_variance<double>(t, p[kSigma0Sq], p[kTrapFrequency],
                                                             p[kDarkFrequency], p[kGamma1],
                                                             ctx.mass);
                const double s = std::sqrt(var + d2);
                for (Eigen::Index j = 0; j < k; ++j) {
                    const int idx = free[static_cast<std::size_t>(j)];
                    const double h = 1e-20 * std::max(std::abs(p[idx]), scale[idx]);
                    std::array<Cplx, kNumFitParams> c;
                    for (int m = 0; m < kNumFitParams; ++m) c[m] = p[m];
                    c[idx] += Cplx(0.0, h);
                    const Cplx v = inverted_variance<Cplx>(t, c[kSigma0Sq], c[kTrapFrequency],
                                                           c[kDarkFrequency], c[kGamma1],
                                                           ctx.mass);
                    const double dvar = v.imag() / h;
                    jac(i, j) = dvar / (2.0 * s) * scale[idx] /
                                weights[static_cast<std::size_t>(i)];
                }
            }
            return jac;
        }
        // Central differences through the numerical propagator.
        for (Eigen::Index j = 0; j < k; ++j) {
            const int idx = free[static_cast<std::size_t>(j)];
            const double h = 1e-5 * scale[idx];
            Params lo = p, hi = p;
            lo[idx] -= h;
            hi[idx] += h;
            const Eigen::VectorXd rp = residuals(hi);
            if (idx != kReleasePhase && lo[idx] < 0.0) {
                // On the lower bound: one-sided.
                jac.col(j) = (rp - residuals(p)) / 1e-5;
                continue;
            }
            const Eigen::VectorXd rm = residuals(lo);
            jac.col(j) = (rp - rm) / (2e-5);
        }
        return jac;
    }
};

std::string describe_direction(const Eigen::VectorXd& v, const std::vector<int>& free) {
    std::ostringstream os;
    os << std::showpos << std::setprecision(3);
    bool first = true;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (std::abs(v[j]) < 0.05) continue;
        if (!first) os << ' ';
        os << v[j] << '*' << fit_param_name(free[static_cast<std::size_t>(j)]);
        first = false;
    }
    return os.str();
}

// Raises DegeneracyError when the column-normalised Jacobian is (nearly)
// rank deficient.
void check_identifiable(const Eigen::MatrixXd& jac, const std::vector<int>& free) {
    Eigen::VectorXd norms = jac.colwise().norm();
    for (Eigen::Index j = 0; j < norms.size(); ++j) {
        if (!(norms[j] > 0.0)) {
            const std::string name(fit_param_name(free[static_cast<std::size_t>(j)]));
            throw DegeneracyError("the data do not depend on " + name, name);
        }
    }
    const Eigen::MatrixXd normed = jac * norms.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(normed, Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s.size() == 0) return;
    const double ratio = s[s.size() - 1] / s[0];
    if (ratio < 1e-9) {
        const std::string dir = describe_direction(svd.matrixV().col(s.size() - 1), free);
        std::ostringstream msg;
        msg << "singular Jacobian (condition " << std::scientific << std::setprecision(2)
            << 1.0 / ratio << "); unidentifiable direction " << dir;
        throw DegeneracyError(msg.str(), dir);
    }
}

}  // namespace

std::string_view to_string(FitModel model) {
    switch (model) {
        case FitModel::inverted: return "inverted";
        case FitModel::jump_micromotion: return "jump_micromotion";
    }
    return "?";
}

FitModel parse_fit_model(std::string_view text) {
    if (text == "inverted") return FitModel::inverted;
    if (text == "jump_micromotion" || text == "jump") return FitModel::jump_micromotion;
    throw ConfigError("unknown fit model '" + std::string(text) +
                      "' (expected inverted or jump_micromotion)");
}

std::string_view fit_param_name(int index) {
    static constexpr std::string_view kNames[kNumFitParams] = {
        "gamma1", "trap_frequency", "dark_frequency", "sigma0_sq", "release_phase"};
    if (index < 0 || index >= kNumFitParams) return "?";
    return kNames[index];
}

std::array<double, kNumFitParams> FitParams::to_array() const {
    return {gamma1, trap_frequency, dark_frequency, sigma0_sq, release_phase};
}

FitParams FitParams::from_array(const std::array<double, kNumFitParams>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
}

double FitResult::stderr_of(int index) const {
    return std::sqrt(std::max(covariance[index][index], 0.0));
}

double FitResult::correlation(int i, int j) const { return correlation_matrix[i][j]; }

int FitResult::free_parameter_count() const {
    return static_cast<int>(std::count(fixed.begin(), fixed.end(), false));
}

bool in_confidence_region(const FitResult& fit, const FitParams& candidate, double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0, 1)");
    const Params est = fit.params.to_array();
    const Params cand = candidate.to_array();
    std::vector<int> free;
    for (int j = 0; j < kNumFitParams; ++j)
        if (!fit.fixed[j]) free.push_back(j);
    const auto k = static_cast<Eigen::Index>(free.size());
    const int dof = fit.n_points - static_cast<int>(k);
    if (k == 0 || dof < 1) throw FitError("confidence region needs n > free parameters");
    Eigen::VectorXd delta(k);
    Eigen::MatrixXd cov(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const int a = free[static_cast<std::size_t>(i)];
        const bool log_a = a != kReleasePhase;
        if (log_a && !(cand[a] > 0.0 && est[a] > 0.0)) return false;
        delta[i] = log_a ? std::log(cand[a] / est[a]) : cand[a] - est[a];
        for (Eigen::Index j = 0; j < k; ++j) {
            const int b = free[static_cast<std::size_t>(j)];
            const double sa = log_a ? est[a] : 1.0;
            const double sb = b != kReleasePhase ? est[b] : 1.0;
            cov(i, j) = fit.covariance[a][b] / (sa * sb);
        }
    }
    // Work with the correlation form for conditioning.
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    if (!(sd.minCoeff() > 0.0)) return delta.isZero(0.0);
    const Eigen::MatrixXd corr = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
    const Eigen::VectorXd z = delta.cwiseQuotient(sd);
    const double q = z.dot(corr.ldlt().solve(z));
    const boost::math::fisher_f dist(static_cast<double>(k), static_cast<double>(dof));
    return q <= static_cast<double>(k) * boost::math::quantile(dist, level);
}

std::vector<double> model_sigma(FitModel model, const FitParams& params,
                                const FitContext& context, std::span<const double> times) {
    if (!(context.mass > 0.0)) throw DomainError("mass must be positive");
    std::vector<double> var;
    if (model == FitModel::inverted) {
        var.reserve(times.size());
        for (double t : times)
            var.push_back(variance_inverted(t, params.sigma0_sq, params.trap_frequency,
                                            params.dark_frequency, params.gamma1, context.mass));
    } else {
        var = jump_variance(params, context, times);
    }
    const double d2 = context.measurement_broadening * context.measurement_broadening;
    std::vector<double> out(var.size());
    for (std::size_t i = 0; i < var.size(); ++i) out[i] = std::sqrt(var[i] + d2);
    return out;
}

FitResult fit_expansion(const ExpansionCurve& data, FitModel model, const FitParams& guess,
                        const FitBounds& bounds, const FitContext& context,
                        const FitOptions& options) {
    const std::size_t n = data.times.size();
    if (data.sigma.size() != n) throw FitError("times and sigma columns differ in length");
    if (!data.sigma_err.empty() && data.sigma_err.size() != n)
        throw FitError("sigma_err column length differs from sigma");
    if (n < 8) throw FitError("at least 8 data points are required, got " + std::to_string(n));
    if (!(context.mass > 0.0)) throw FitError("mass must be positive");
    if (model == FitModel::jump_micromotion && !(context.rf_frequency > 0.0))
        throw FitError("jump_micromotion model needs the RF frequency");

    Problem prob;
    prob.model = model;
    prob.ctx = context;
    prob.times = data.times;
    prob.data = data.sigma;
    prob.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(std::isfinite(data.times[i]) && data.times[i] >= 0.0))
            throw FitError("times must be finite and >= 0");
        if (!(std::isfinite(data.sigma[i]) && data.sigma[i] > 0.0))
            throw FitError("sigma entries must be finite and > 0");
        const double w = data.sigma_err.empty() ? options.default_relative_error * data.sigma[i]
                                                : data.sigma_err[i];
        if (!(std::isfinite(w) && w > 0.0)) throw FitError("weights must be finite and > 0");
        prob.weights[i] = w;
    }

    std::array<bool, kNumFitParams> fixed = options.fixed;
    if (model == FitModel::inverted) fixed[kReleasePhase] = true;
    for (int j = 0; j < kNumFitParams; ++j)
        if (!fixed[j]) prob.free.push_back(j);
    if (prob.free.empty()) throw FitError("no free parameters");

    const Params p0 = guess.to_array();
    Params lower = bounds.lower.to_array();
    Params upper = bounds.upper.to_array();
    for (int j = 0; j < kNumFitParams; ++j) {
        if (!(p0[j] >= lower[j] && p0[j] <= upper[j]))
            throw FitError("initial " + std::string(fit_param_name(j)) + " outside its bounds");
        if (options.parameter_scale) {
            prob.scale[j] = (*options.parameter_scale)[j];
            if (!(prob.scale[j] > 0.0)) throw FitError("parameter scales must be positive");
        } else {
            prob.scale[j] = std::abs(p0[j]) > 0.0 ? std::abs(p0[j]) : 1.0;
        }
    }
    // The models need strictly positive frequencies and sigma0^2.
    for (int j : {kTrapFrequency, kDarkFrequency, kSigma0Sq}) {
        if (!(p0[j] > 0.0)) throw FitError(std::string(fit_param_name(j)) + " must start > 0");
        lower[j] = std::max(lower[j], 1e-9 * std::abs(p0[j]));
    }

    const auto k = static_cast<Eigen::Index>(prob.free.size());
    Eigen::VectorXd u(k), u_lo(k), u_hi(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const int idx = prob.free[static_cast<std::size_t>(j)];
        u[j] = p0[idx] / prob.scale[idx];
        u_lo[j] = lower[idx] / prob.scale[idx];
        u_hi[j] = upper[idx] / prob.scale[idx];
    }

    FitResult result;
    result.model = model;
    result.context = context;
    result.fixed = fixed;
    result.n_points = static_cast<int>(n);
    result.times = data.times;

    Params p = prob.physical(u, p0);
    double cost = prob.cost(p);
    if (!std::isfinite(cost)) throw FitError("model cannot be evaluated at the initial guess");
    result.cost_history.push_back(cost);

    double lambda = 1e-3;
    bool converged = false;
    int iter = 0;
    Eigen::MatrixXd jac;
    for (; iter < options.max_iterations && !converged; ++iter) {
        jac = prob.jacobian(p);
        const Eigen::VectorXd r = prob.residuals(p);
        const Eigen::MatrixXd a = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        Eigen::VectorXd diag = a.diagonal();
        for (Eigen::Index j = 0; j < k; ++j) {
            if (!(diag[j] > 0.0)) {
                const std::string name(fit_param_name(prob.free[static_cast<std::size_t>(j)]));
                throw DegeneracyError("the data do not depend on " + name, name);
            }
        }
        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = a;
            damped.diagonal() += lambda * diag;
            const Eigen::VectorXd step = damped.ldlt().solve(-g);
            Eigen::VectorXd trial = (u + step).cwiseMax(u_lo).cwiseMin(u_hi);
            const Eigen::VectorXd actual = trial - u;
            const Params pt = prob.physical(trial, p0);
            const double trial_cost = actual.allFinite() ? prob.cost(pt) : kInf;
            if (trial_cost < cost) {
                bool small = true;
                for (Eigen::Index j = 0; j < k; ++j)
                    if (std::abs(actual[j]) > options.step_tolerance * (std::abs(trial[j]) + 1e-12))
                        small = false;
                const double drop = cost - trial_cost;
                u = trial;
                p = pt;
                cost = trial_cost;
                result.cost_history.push_back(cost);
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (small || drop <= 1e-15 * cost) converged = true;
            } else {
                lambda *= 4.0;
                if (lambda > 1e16) {
                    // No descent left: accept the point if Gauss-Newton
                    // predicts nothing meaningful to gain.
                    const Eigen::VectorXd gn = a.ldlt().solve(-g);
                    const double predicted = -(g.dot(gn)) - 0.5 * gn.dot(a * gn);
                    if (!(predicted > 1e-10 * cost + 1e-300) || !gn.allFinite()) {
                        converged = true;
                        break;
                    }
                    std::ostringstream msg;
                    msg << "Levenberg-Marquardt stalled after " << iter
                        << " iterations at cost " << cost;
                    throw FitError(msg.str());
                }
            }
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "no convergence in " << options.max_iterations << " iterations; cost trace:";
        const std::size_t h = result.cost_history.size();
        for (std::size_t i = h > 8 ? h - 8 : 0; i < h; ++i) msg << ' ' << result.cost_history[i];
        throw FitError(msg.str());
    }

    jac = prob.jacobian(p);
    check_identifiable(jac, prob.free);
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::MatrixXd a_inv = a.completeOrthogonalDecomposition().pseudoInverse();
    const double dof = static_cast<double>(n) - static_cast<double>(k);
    const double res_var = dof > 0.0 ? cost / dof : cost;
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            const int pi = prob.free[static_cast<std::size_t>(i)];
            const int pj = prob.free[static_cast<std::size_t>(j)];
            result.covariance[pi][pj] = a_inv(i, j) * res_var * prob.scale[pi] * prob.scale[pj];
            result.correlation_matrix[pi][pj] = a_inv(i, j) / std::sqrt(a_inv(i, i) * a_inv(j, j));
        }
    }
    result.residual_variance = res_var;
    result.params = FitParams::from_array(p);
    result.chi2 = cost;
    result.iterations = iter;
    const auto s = prob.sigma(p);
    double ss = 0.0;
    result.residuals.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        result.residuals[i] = s[i] - data.sigma[i];
        ss += result.residuals[i] * result.residuals[i];
    }
    result.residual_rms = std::sqrt(ss / static_cast<double>(n));
    return result;
}

FitParams initial_guess(const ExpansionCurve& data, FitModel model, const FitContext& context) {
    const std::size_t n = data.times.size();
    if (n < 3 || data.sigma.size() != n) throw FitError("need at least 3 points for a guess");
    if (!(context.mass > 0.0)) throw FitError("mass must be positive");
    const auto order = sorted_order(data.times);
    std::vector<double> t(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = data.times[order[i]];
        s[i] = data.sigma[order[i]];
    }
    const double d2 = context.measurement_broadening * context.measurement_broadening;
    auto var_of = [&](std::size_t i) { return std::max(s[i] * s[i] - d2, 0.0); };

    FitParams g;
    g.sigma0_sq = var_of(0);
    if (!(g.sigma0_sq > 0.0)) g.sigma0_sq = s[0] * s[0];
    // Earliest point that has visibly expanded, read as free flight.
    for (std::size_t i = 1; i < n && g.trap_frequency == 0.0; ++i) {
        const double ratio = var_of(i) / g.sigma0_sq;
        const double dt = t[i] - t[0];
        if (ratio > 1.0001 && dt > 0.0) g.trap_frequency = std::sqrt(ratio - 1.0) / dt;
    }
    if (!(g.trap_frequency > 0.0)) throw FitError("data show no expansion to estimate Omega");

    if (model == FitModel::inverted) {
        // Late-time log slope of sigma ~ exp(omega t).
        const std::size_t start = n - std::max<std::size_t>(3, n / 3);
        std::vector<double> x, y;
        for (std::size_t i = start; i < n; ++i) {
            x.push_back(t[i]);
            y.push_back(std::log(s[i]));
        }
        const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
        const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
        }
        g.dark_frequency = sxx > 0.0 ? sxy / sxx : 0.0;
    }

    // Gamma1 enters linearly in sigma^2: weighted least squares with 3%
    // weights, clamped at 0. Returns (gamma1, cost).
    auto solve_gamma1 = [&](double omega) {
        std::vector<double> coherent(n), unit(n);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double tt = t[i] - t[0];
            if (model == FitModel::inverted) {
                coherent[i] = variance_inverted(tt, g.sigma0_sq, g.trap_frequency, omega, 0.0,
                                                context.mass);
                unit[i] = variance_inverted(tt, 0.0, g.trap_frequency, omega, 1.0, context.mass);
            } else {
                coherent[i] =
                    variance_jump(tt, g.sigma0_sq, g.trap_frequency, omega, 0.0, context.mass);
                unit[i] = variance_jump(tt, 0.0, g.trap_frequency, omega, 1.0, context.mass);
            }
            const double w = 1.0 / (0.03 * s[i] * s[i]);
            num += w * w * unit[i] * (var_of(i) - coherent[i]);
            den += w * w * unit[i] * unit[i];
        }
        const double g1 = den > 0.0 ? std::max(num / den, 0.0) : 0.0;
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = (std::sqrt(std::max(coherent[i] + g1 * unit[i], 0.0) + d2) - s[i]) /
                             (0.03 * s[i]);
            cost += r * r;
        }
        return std::pair{g1, cost};
    };

    if (model == FitModel::jump_micromotion) {
        // Micromotion wiggles defeat peak picking; scan omega on a log grid
        // against the secular model instead.
        const double span = std::max(t[n - 1] - t[0], 1e-12);
        double lo = 0.05 * std::numbers::pi / span;
        double hi = g.trap_frequency;
        if (context.rf_frequency > 0.0) hi = std::min(hi, 0.45 * context.rf_frequency);
        if (!(hi > lo)) lo = hi / 1000.0;
        double best = kInf;
        constexpr int kGrid = 400;
        for (int k = 0; k <= kGrid; ++k) {
            const double omega = lo * std::pow(hi / lo, static_cast<double>(k) / kGrid);
            const double c = solve_gamma1(omega).second;
            if (c < best) {
                best = c;
                g.dark_frequency = omega;
            }
        }
    }
    if (!(g.dark_frequency > 0.0) || !std::isfinite(g.dark_frequency))
        g.dark_frequency = g.trap_frequency / 30.0;
    if (model == FitModel::jump_micromotion && context.rf_frequency > 0.0)
        g.dark_frequency = std::min(g.dark_frequency, 0.45 * context.rf_frequency);
    g.gamma1 = solve_gamma1(g.dark_frequency).first;

    if (model == FitModel::jump_micromotion && context.rf_frequency > 0.0) {
        // Coarse scan of the release phase.
        double best = kInf;
        double best_phase = 0.0;
        for (int k = 0; k < 8; ++k) {
            FitParams trial = g;
            trial.release_phase = k * std::numbers::pi / 4.0;
            try {
                const auto m = model_sigma(model, trial, context, t);
                double c = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double r = (m[i] - s[i]) / (0.03 * s[i]);
                    c += r * r;
                }
                if (c < best) {
                    best = c;
                    best_phase = trial.release_phase;
                }
            } catch (const Error&) {
            }
        }
        g.release_phase = best_phase;
    }
    return g;
}

double expansion_ratio(double sigma_t, double sigma_0) {
    if (!(sigma_0 > 0.0)) throw DomainError("sigma_0 must be positive");
    if (!(sigma_t >= 0.0)) throw DomainError("sigma_t must be >= 0");
    return sigma_t / sigma_0;
}

CoherenceCurve coherence_curve(const FitResult& fit, double mass, double nbar0,
                               std::span<const double> times, double heating_scale) {
    if (!(mass > 0.0)) throw DomainError("mass must be positive");
    if (!(heating_scale > 0.0)) throw DomainError("heating_scale must be positive");
    if (!(nbar0 >= 0.0)) throw DomainError("nbar0 must be >= 0");
    const FitParams& p = fit.params;
    if (!(p.trap_frequency > 0.0 && p.dark_frequency > 0.0 && p.sigma0_sq > 0.0))
        throw DomainError("fit parameters must be positive");
    for (double t : times)
        if (!(std::isfinite(t) && t >= 0.0)) throw DomainError("times must be >= 0");

    const GaussianState initial = state_with_purity(std::sqrt(p.sigma0_sq), nbar0);
    const NoiseSpec base = NoiseSpec::from_gamma1(p.gamma1, p.trap_frequency);

    auto xi_for = [&](const NoiseSpec& noise) {
        std::vector<double> xi(times.size());
        if (fit.model == FitModel::inverted) {
            AxisParams axis;
            axis.trap_frequency = p.trap_frequency;
            axis.dark_frequency = p.dark_frequency;
            axis.potential = PotentialKind::inverted;
            for (std::size_t i = 0; i < times.size(); ++i)
                xi[i] = coherence_length(second_moments(times[i], initial, axis, noise, mass));
            return xi;
        }
        const double rf = fit.context.rf_frequency;
        if (!(rf > 0.0)) throw ConfigError("jump_micromotion fit lacks the RF frequency");
        const double q = calibrate_mathieu_from_secular(p.dark_frequency, rf,
                                                        fit.context.mathieu_a);
        const auto order = sorted_order(times);
        std::vector<double> sorted(times.size());
        for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = times[order[i]];
        const double t_end = std::max(sorted.empty() ? 0.0 : sorted.back(), 1e-12);
        const StiffnessSchedule schedule(
            {{0.0, t_end,
              MathieuStiffness{fit.context.mathieu_a, q, rf, p.release_phase, 0.0}}});
        const auto states = propagate_moments_trace(initial, schedule, noise, mass, sorted,
                                                    default_dt_max(schedule, mass));
        for (std::size_t i = 0; i < order.size(); ++i)
            xi[order[i]] = coherence_length(states[i]);
        return xi;
    };

    CoherenceCurve c;
    c.times.assign(times.begin(), times.end());
    c.heating_scale = heating_scale;
    c.xi = xi_for(base);
    c.xi_improved = xi_for(base.scaled(heating_scale));
    c.xi_zpm_threshold = std::sqrt(8.0) * zero_point_motion(p.trap_frequency, mass);
    return c;
}

}  // namespace levexp
