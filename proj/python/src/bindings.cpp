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


#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "levexp/analytic_dynamics.hpp"
#include "levexp/cli.hpp"
#include "levexp/config.hpp"
#include "levexp/core_model.hpp"
#include "levexp/errors.hpp"
#include "levexp/estimation.hpp"
#include "levexp/moment_propagator.hpp"
#include "levexp/trajectory_ensemble.hpp"

namespace py = pybind11;
using namespace levexp;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
    if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
    return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v) {
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::tuple run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
        py::gil_scoped_release release;
        code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_levexp, m) {
    m.doc() = "Release-and-recapture expansion of levitated nanoparticles.";

    // Exceptions mirror the C++ hierarchy.
    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", base);
    py::register_exception<InvalidStateError>(m, "InvalidStateError", base);
    py::register_exception<ConfigError>(m, "ConfigError", base);
    py::register_exception<IntegrationError>(m, "IntegrationError", base);
    py::register_exception<ReconstructionError>(m, "ReconstructionError", base);
    py::register_exception<EnsembleError>(m, "EnsembleError", base);
    py::register_exception<CalibrationError>(m, "CalibrationError", base);
    auto fit_error = py::register_exception<FitError>(m, "FitError", base);
    py::register_exception<DegeneracyError>(m, "DegeneracyError", fit_error);

    py::enum_<AxisLabel>(m, "AxisLabel")
        .value("u", AxisLabel::u)
        .value("v", AxisLabel::v)
        .value("z", AxisLabel::z)
        .value("x", AxisLabel::x)
        .value("y", AxisLabel::y);
    py::enum_<PotentialKind>(m, "PotentialKind")
        .value("inverted", PotentialKind::inverted)
        .value("harmonic_jump", PotentialKind::harmonic_jump)
        .value("free", PotentialKind::free);
    py::enum_<FitModel>(m, "FitModel")
        .value("inverted", FitModel::inverted)
        .value("jump_micromotion", FitModel::jump_micromotion);

    py::class_<GaussianState>(m, "GaussianState")
        .def(py::init<>())
        .def(py::init([](double zz, double pp, double zp, double z, double p) {
                 GaussianState s;
                 s.var_position = zz;
                 s.var_momentum = pp;
                 s.covar = zp;
                 s.mean_position = z;
                 s.mean_momentum = p;
                 return s;
             }),
             py::arg("var_position"), py::arg("var_momentum"), py::arg("covar") = 0.0,
             py::arg("mean_position") = 0.0, py::arg("mean_momentum") = 0.0)
        .def_readwrite("mean_position", &GaussianState::mean_position)
        .def_readwrite("mean_momentum", &GaussianState::mean_momentum)
        .def_readwrite("var_position", &GaussianState::var_position)
        .def_readwrite("var_momentum", &GaussianState::var_momentum)
        .def_readwrite("covar", &GaussianState::covar)
        .def("determinant", &GaussianState::determinant)
        .def("__repr__", [](const GaussianState& s) {
            std::ostringstream os;
            os << "GaussianState(var_position=" << s.var_position
               << ", var_momentum=" << s.var_momentum << ", covar=" << s.covar << ")";
            return os.str();
        });

    py::class_<AxisParams>(m, "AxisParams")
        .def(py::init([](AxisLabel label, double trap, double dark, PotentialKind kind,
                         double phase) {
                 AxisParams a{label, trap, dark, kind, phase};
                 a.validate();
                 return a;
             }),
             py::arg("label"), py::arg("trap_frequency"), py::arg("dark_frequency"),
             py::arg("potential"), py::arg("release_phase") = 0.0)
        .def_readwrite("label", &AxisParams::label)
        .def_readwrite("trap_frequency", &AxisParams::trap_frequency)
        .def_readwrite("dark_frequency", &AxisParams::dark_frequency)
        .def_readwrite("potential", &AxisParams::potential)
        .def_readwrite("release_phase", &AxisParams::release_phase);

    py::class_<NoiseSpec>(m, "NoiseSpec")
        .def(py::init<>())
        .def_static("from_heating_rate", &NoiseSpec::from_heating_rate, py::arg("heating_rate"),
                    py::arg("trap_frequency"), py::arg("gas_damping") = 0.0,
                    py::arg("pressure") = 0.0)
        .def_static("from_gamma1", &NoiseSpec::from_gamma1, py::arg("gamma1"),
                    py::arg("trap_frequency"), py::arg("gas_damping") = 0.0,
                    py::arg("pressure") = 0.0)
        .def_readwrite("gamma1", &NoiseSpec::gamma1)
        .def_readwrite("heating_rate", &NoiseSpec::heating_rate)
        .def_readwrite("gas_damping", &NoiseSpec::gas_damping)
        .def("momentum_diffusion", &NoiseSpec::momentum_diffusion, py::arg("mass"));

    // core model
    m.def("zero_point_motion", &zero_point_motion, py::arg("trap_frequency"), py::arg("mass"));
    m.def("thermal_state", &thermal_state, py::arg("nbar"), py::arg("trap_frequency"),
          py::arg("mass"));
    m.def("released_state", &released_state, py::arg("sigma0"), py::arg("trap_frequency"),
          py::arg("mass"));
    m.def("state_with_purity", &state_with_purity, py::arg("sigma0"), py::arg("nbar"));
    m.def("purity", &purity, py::arg("state"));
    m.def("coherence_length", &coherence_length, py::arg("state"));
    m.def("squeezing_db", &squeezing_db, py::arg("expansion_ratio"));
    m.def("occupation_from_temperature", &occupation_from_temperature,
          py::arg("temperature"), py::arg("trap_frequency"));

    // closed forms, vectorised over t
    m.def("variance_inverted", py::vectorize(&variance_inverted), py::arg("t"),
          py::arg("sigma0_sq"), py::arg("trap_frequency"), py::arg("dark_frequency"),
          py::arg("gamma1"), py::arg("mass"));
    m.def("variance_jump", py::vectorize(&variance_jump), py::arg("t"), py::arg("sigma0_sq"),
          py::arg("trap_frequency"), py::arg("dark_frequency"), py::arg("gamma1"),
          py::arg("mass"));
    m.def("variance_free", py::vectorize(&variance_free), py::arg("t"), py::arg("sigma0_sq"),
          py::arg("trap_frequency"), py::arg("heating_rate"), py::arg("mass"));
    m.def("second_moments", &second_moments, py::arg("t"), py::arg("initial"), py::arg("axis"),
          py::arg("noise"), py::arg("mass"));

    // numerical propagation
    py::class_<MathieuStiffness>(m, "MathieuStiffness")
        .def(py::init([](double a, double q, double rf, double phase, double t_ref) {
                 return MathieuStiffness{a, q, rf, phase, t_ref};
             }),
             py::arg("a"), py::arg("q"), py::arg("rf_frequency"), py::arg("rf_phase") = 0.0,
             py::arg("t_ref") = 0.0);
    py::class_<StiffnessSchedule>(m, "StiffnessSchedule")
        .def(py::init<>())
        .def("then_constant", &StiffnessSchedule::then_constant, py::arg("duration"),
             py::arg("k"), py::return_value_policy::reference_internal)
        .def("then_mathieu", &StiffnessSchedule::then_mathieu, py::arg("duration"),
             py::arg("params"), py::return_value_policy::reference_internal)
        .def_property_readonly("t_start", &StiffnessSchedule::t_start)
        .def_property_readonly("t_end", &StiffnessSchedule::t_end)
        .def("stiffness", &StiffnessSchedule::stiffness, py::arg("t"), py::arg("mass"));
    m.def(
        "propagate_moments",
        [](const GaussianState& initial, const StiffnessSchedule& schedule,
           const NoiseSpec& noise, double mass, const Array& times) {
            const auto t = to_vector(times);
            const double dt = default_dt_max(schedule, mass);
            py::gil_scoped_release release;
            return propagate_moments_trace(initial, schedule, noise, mass, t, dt);
        },
        py::arg("initial"), py::arg("schedule"), py::arg("noise"), py::arg("mass"),
        py::arg("times"));
    py::class_<FloquetResult>(m, "FloquetResult")
        .def_readonly("characteristic_exponent", &FloquetResult::characteristic_exponent)
        .def_readonly("secular_frequency", &FloquetResult::secular_frequency)
        .def_readonly("stable", &FloquetResult::stable);
    m.def("floquet_analyze", &floquet_analyze, py::arg("a"), py::arg("q"),
          py::arg("rf_frequency"));

    // configuration and ensembles
    py::class_<AxisConfig>(m, "AxisConfig")
        .def_readonly("params", &AxisConfig::params)
        .def_readonly("initial", &AxisConfig::initial)
        .def_readonly("sigma0", &AxisConfig::sigma0)
        .def_readonly("nbar", &AxisConfig::nbar)
        .def_readonly("noise", &AxisConfig::noise)
        .def_readonly("delta_sigma", &AxisConfig::delta_sigma);
    py::class_<RunConfig>(m, "RunConfig")
        .def_property_readonly("mass", [](const RunConfig& c) { return c.physical.mass; })
        .def_property_readonly("axis_labels",
                               [](const RunConfig& c) {
                                   std::vector<AxisLabel> out;
                                   for (const auto& a : c.axes) out.push_back(a.params.label);
                                   return out;
                               })
        .def_property_readonly("release_times",
                               [](const RunConfig& c) { return to_array(c.protocol.release_times); })
        .def_readonly("seed_base", &RunConfig::seed_base)
        .def_readonly("notes", &RunConfig::notes)
        .def("axis", &RunConfig::axis, py::arg("label"), py::return_value_policy::reference_internal);
    m.def("load_config", [](const std::string& path) { return load_config(path); },
          py::arg("path"));
    m.def("parse_config", &parse_config, py::arg("text"), py::arg("source") = "<config>");

    m.def(
        "run_ensemble",
        [](const RunConfig& cfg, AxisLabel axis, double release_time, int shots,
           std::uint64_t seed_base, int workers) {
            EnsembleOptions opt;
            opt.shots = shots;
            opt.seed_base = seed_base;
            opt.workers = workers;
            opt.bootstrap_resamples = 0;
            const auto sc = cfg.shot_config(axis, release_time);
            EnsembleResult r;
            {
                py::gil_scoped_release release;
                r = run_ensemble(sc, release_time, opt);
            }
            std::vector<double> z, p;
            for (const auto& s : r.shots) {
                if (!s.valid) continue;
                z.push_back(s.reconstructed_position);
                p.push_back(s.reconstructed_momentum);
            }
            py::dict out;
            out["position"] = to_array(z);
            out["momentum"] = to_array(p);
            out["sigma"] = r.sample_sigma;
            out["invalid"] = r.invalid_count;
            out["moments"] = r.sample_moments;
            return out;
        },
        py::arg("config"), py::arg("axis"), py::arg("release_time"), py::arg("shots") = 0,
        py::arg("seed_base") = 1, py::arg("workers") = 1,
        "Simulates shots at one release time; returns reconstructed z and p arrays.");

    // estimation
    py::class_<FitParams>(m, "FitParams")
        .def(py::init([](double g, double w0, double w, double s2, double phi) {
                 return FitParams{g, w0, w, s2, phi};
             }),
             py::arg("gamma1"), py::arg("trap_frequency"), py::arg("dark_frequency"),
             py::arg("sigma0_sq"), py::arg("release_phase") = 0.0)
        .def_readwrite("gamma1", &FitParams::gamma1)
        .def_readwrite("trap_frequency", &FitParams::trap_frequency)
        .def_readwrite("dark_frequency", &FitParams::dark_frequency)
        .def_readwrite("sigma0_sq", &FitParams::sigma0_sq)
        .def_readwrite("release_phase", &FitParams::release_phase);
    py::class_<FitResult>(m, "FitResult")
        .def_readonly("params", &FitResult::params)
        .def_readonly("covariance", &FitResult::covariance)
        .def_readonly("chi2", &FitResult::chi2)
        .def_readonly("residual_variance", &FitResult::residual_variance)
        .def_readonly("iterations", &FitResult::iterations)
        .def_readonly("model", &FitResult::model)
        .def("stderr_of", &FitResult::stderr_of, py::arg("index"))
        .def("correlation", &FitResult::correlation, py::arg("i"), py::arg("j"));
    m.def(
        "fit_expansion",
        [](const Array& times, const Array& sigma, const std::optional<Array>& sigma_err,
           FitModel model, double mass, double broadening, double rf_frequency,
           double mathieu_a) {
            ExpansionCurve c;
            c.times = to_vector(times);
            c.sigma = to_vector(sigma);
            if (sigma_err) c.sigma_err = to_vector(*sigma_err);
            c.validate();
            const FitContext ctx{mass, broadening, rf_frequency, mathieu_a};
            py::gil_scoped_release release;
            return fit_expansion(c, model, initial_guess(c, model, ctx), FitBounds{}, ctx);
        },
        py::arg("times"), py::arg("sigma"), py::arg("sigma_err") = py::none(),
        py::arg("model"), py::arg("mass"), py::arg("broadening") = 0.0,
        py::arg("rf_frequency") = 0.0, py::arg("mathieu_a") = 0.0);
    m.def(
        "coherence_curve",
        [](const FitResult& fit, double mass, double nbar0, const Array& times,
           double heating_scale) {
            const auto c = coherence_curve(fit, mass, nbar0, to_vector(times), heating_scale);
            return py::make_tuple(to_array(c.xi), to_array(c.xi_improved), c.xi_zpm_threshold);
        },
        py::arg("fit"), py::arg("mass"), py::arg("nbar0"), py::arg("times"),
        py::arg("heating_scale") = 1e-3);

    m.def("run_cli", &run_cli, py::arg("args"),
          "Runs the levexp command line; returns (exit_code, stdout, stderr).");
}
