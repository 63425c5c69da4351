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

#include "levexp/io.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "gtest/gtest.h"
#include "levexp/errors.hpp"

namespace levexp {
namespace {

namespace fs = std::filesystem;

TEST(Io, FormatDoubleRoundTripsExactly) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> e(-60.0, 10.0);
    for (int i = 0; i < 2000; ++i) {
        const double x = std::pow(10.0, e(gen)) * (i % 2 ? -1.0 : 1.0);
        EXPECT_EQ(io::parse_double(io::format_double(x), "x"), x);
    }
    EXPECT_EQ(io::format_double(0.5), "0.5");
    EXPECT_EQ(io::parse_double(io::format_double(std::numeric_limits<double>::denorm_min()), "x"),
              std::numeric_limits<double>::denorm_min());
}

TEST(Io, StrictNumberParsing) {
    EXPECT_EQ(io::parse_double(" 1e-9 ", "x"), 1e-9);
    EXPECT_THROW(io::parse_double("1e-9x", "x"), ConfigError);
    EXPECT_THROW(io::parse_double("", "x"), ConfigError);
    EXPECT_THROW(io::parse_double("nan", "x"), ConfigError);
    EXPECT_EQ(io::parse_integer("42", "n"), 42);
    EXPECT_THROW(io::parse_integer("4.2", "n"), ConfigError);
}

TEST(Io, CurveRoundTripIsLossless) {
    ExpansionCurve c;
    c.times = {0.0, 2e-5, 1.0 / 3.0 * 1e-4, 2e-5};
    c.sigma = {4.56e-11, 1.2345678901234567e-9, 3e-8, 1.2e-9};
    c.sigma_err = {1e-12, 2e-11, std::sqrt(2.0) * 1e-10, 3e-11};
    const auto back = io::curve_from_csv(io::curve_to_csv(c));
    EXPECT_EQ(back.times, c.times);
    EXPECT_EQ(back.sigma, c.sigma);
    EXPECT_EQ(back.sigma_err, c.sigma_err);

    c.sigma_err.clear();
    const auto text = io::curve_to_csv(c);
    EXPECT_EQ(text.substr(0, text.find('\n')), "t_s,sigma_m");
    EXPECT_TRUE(io::curve_from_csv(text).sigma_err.empty());
}

TEST(Io, MalformedCurveReportsLine) {
    try {
        io::curve_from_csv("t_s,sigma_m\n0,1e-9\n1e-6,oops\n", "data.csv");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("data.csv:3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(io::curve_from_csv("", "x"), ConfigError);
    EXPECT_THROW(io::curve_from_csv("t_s,sigma_m\n", "x"), ConfigError);
    EXPECT_THROW(io::curve_from_csv("time,width\n0,1\n", "x"), ConfigError);
    EXPECT_THROW(io::curve_from_csv("t_s,sigma_m\n0,1e-9,5\n", "x"), ConfigError);
    EXPECT_THROW(io::curve_from_csv("t_s,sigma_m\n-1e-6,1e-9\n", "x"), ConfigError);
    EXPECT_THROW(io::curve_from_csv("t_s,sigma_m\n0,-1e-9\n", "x"), ConfigError);
}

TEST(Io, ShotsRoundTrip) {
    std::vector<Shot> shots(3);
    for (int i = 0; i < 3; ++i) {
        shots[i].axis = AxisLabel::u;
        shots[i].release_time = 2.6e-4;
        shots[i].reconstructed_position = 1.0e-8 * (i - 1) / 3.0;
        shots[i].reconstructed_momentum = -7.1e-18 * i;
        shots[i].seed = 1000 + i;
        shots[i].valid = i != 1;
    }
    const auto text = io::shots_to_csv(shots);
    EXPECT_EQ(text.substr(0, text.find('\n')), "axis,t_r_s,z_m,p_kgms,seed,valid");
    const auto back = io::shots_from_csv(text);
    ASSERT_EQ(back.size(), 3u);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(back[i].axis, AxisLabel::u);
        EXPECT_EQ(back[i].release_time, shots[i].release_time);
        EXPECT_EQ(back[i].reconstructed_position, shots[i].reconstructed_position);
        EXPECT_EQ(back[i].reconstructed_momentum, shots[i].reconstructed_momentum);
        EXPECT_EQ(back[i].seed, shots[i].seed);
        EXPECT_EQ(back[i].valid, shots[i].valid);
    }
    EXPECT_EQ(io::shots_to_csv(back), text);
}

TEST(Io, CoherenceAndMomentsRoundTrip) {
    CoherenceCurve c;
    c.times = {0.0, 1e-4};
    c.xi = {6.14e-12, 1.7e-12};
    c.xi_improved = {6.14e-12, 2.2e-11};
    const auto cb = io::coherence_from_csv(io::coherence_to_csv(c));
    EXPECT_EQ(cb.times, c.times);
    EXPECT_EQ(cb.xi, c.xi);
    EXPECT_EQ(cb.xi_improved, c.xi_improved);

    const std::vector<double> t{0.0, 5e-6};
    std::vector<GaussianState> s(2);
    s[0].var_position = 2e-21;
    s[0].var_momentum = 3e-44;
    s[1].var_position = 5e-21;
    s[1].covar = -1e-33;
    s[1].var_momentum = 4e-44;
    const auto mb = io::moments_from_csv(io::moments_to_csv(t, s));
    ASSERT_EQ(mb.size(), 2u);
    EXPECT_EQ(mb[1].first, 5e-6);
    EXPECT_EQ(mb[1].second.var_position, s[1].var_position);
    EXPECT_EQ(mb[1].second.covar, s[1].covar);
    EXPECT_EQ(mb[1].second.var_momentum, s[1].var_momentum);
}

TEST(Io, HistogramRoundTrip) {
    const std::vector<double> x{0, 1, 2, 3, 4, 5, 6, 7}, y{1, 0, 1, 0, 2, 2, 3, 1};
    const auto h = stats::histogram2d(x, y);
    const auto back = io::histogram_from_csv(io::histogram_to_csv(h));
    EXPECT_EQ(back.x_edges, h.x_edges);
    EXPECT_EQ(back.y_edges, h.y_edges);
    EXPECT_EQ(back.counts, h.counts);
    EXPECT_EQ(back.total(), 8);
}

io::FitRecord sample_record() {
    io::FitRecord r;
    r.axis = AxisLabel::v;
    r.nbar0 = 3763.0;
    auto& f = r.fit;
    f.params = {1.1e5, 1.07e6, 1.57e4, 1.9e-19, 0.7};
    f.model = FitModel::jump_micromotion;
    f.context = {1.95e-18, 9.67e-11, 1.57e5, 0.01};
    for (int i = 0; i < kNumFitParams; ++i)
        for (int j = 0; j < kNumFitParams; ++j) f.covariance[i][j] = (i == j ? 1.0 : 0.1) / (1 + i + j);
    f.correlation_matrix = f.covariance;
    f.residual_variance = 1.3;
    f.residual_rms = 2.1e-10;
    f.chi2 = 33.0;
    f.n_points = 30;
    f.iterations = 12;
    f.fixed = {false, false, true, false, false};
    f.cost_history = {100.0, 40.0, 33.0};
    f.times = {0.0, 1e-5, 2e-5};
    f.residuals = {1e-12, -2e-12, 0.0};
    return r;
}

TEST(Io, FitJsonRoundTripIsLossless) {
    const auto r = sample_record();
    const auto text = io::fit_to_json(r);
    const auto b = io::fit_from_json(text, "fit.json");
    EXPECT_EQ(b.axis, r.axis);
    EXPECT_EQ(b.nbar0, r.nbar0);
    EXPECT_EQ(b.fit.model, r.fit.model);
    EXPECT_EQ(b.fit.params.to_array(), r.fit.params.to_array());
    EXPECT_EQ(b.fit.covariance, r.fit.covariance);
    EXPECT_EQ(b.fit.context.measurement_broadening, r.fit.context.measurement_broadening);
    EXPECT_EQ(b.fit.context.rf_frequency, r.fit.context.rf_frequency);
    EXPECT_EQ(b.fit.context.mathieu_a, r.fit.context.mathieu_a);
    EXPECT_EQ(b.fit.context.mass, r.fit.context.mass);
    EXPECT_EQ(b.fit.n_points, 30);
    EXPECT_EQ(b.fit.fixed, r.fit.fixed);
    EXPECT_EQ(b.fit.times, r.fit.times);
    EXPECT_EQ(b.fit.residuals, r.fit.residuals);
    EXPECT_EQ(b.fit.cost_history, r.fit.cost_history);
    EXPECT_EQ(io::fit_to_json(b), text);
}

TEST(Io, MalformedFitJson) {
    EXPECT_THROW(io::fit_from_json("{", "x"), ConfigError);
    EXPECT_THROW(io::fit_from_json("{}", "x"), ConfigError);
    auto text = io::fit_to_json(sample_record());
    const auto pos = text.find("jump_micromotion");
    text.replace(pos, 16, "wiggle");
    EXPECT_THROW(io::fit_from_json(text, "x"), ConfigError);
}

TEST(Io, AtomicWriteReplacesWholeFile) {
    const auto dir = fs::temp_directory_path() / "levexp_io_test";
    fs::remove_all(dir);
    const auto path = dir / "nested" / "out.csv";
    io::write_file_atomic(path, "first version, long content\n");
    io::write_file_atomic(path, "second\n");
    EXPECT_EQ(io::read_file(path), "second\n");
    // No temporaries left behind.
    int entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(path.parent_path())) ++entries;
    EXPECT_EQ(entries, 1);
    EXPECT_THROW(io::read_file(dir / "missing.csv"), ConfigError);
    fs::remove_all(dir);
}

}  // namespace
}  // namespace levexp
