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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "levexp/io.hpp"
#include "levexp/statistics.hpp"
#include "levexp/units.hpp"

namespace levexp {
namespace {

namespace fs = std::filesystem;

const std::string kNominal = std::string(LEVEXP_SOURCE_DIR) + "/configs/paper_nominal.cfg";

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("levexp_cli_" + std::string(info->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        unsetenv("LEVEXP_OUTPUT_DIR");
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(std::vector<std::string> args) {
        out_.str("");
        err_.str("");
        return cli::run(args, out_, err_);
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    std::string read(const std::string& name) const { return io::read_file(dir_ / name); }
    void put(const std::string& name, const std::string& text) const {
        io::write_file_atomic(dir_ / name, text);
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

TEST_F(Cli, HelpOnEverySubcommandExitsZero) {
    EXPECT_EQ(run({"--help"}), 0);
    EXPECT_NE(out_.str().find("simulate"), std::string::npos);
    const std::vector<std::pair<std::string, std::vector<std::string>>> flags = {
        {"simulate", {"--axis", "--t-r", "--shots", "--seed", "--workers", "--output-dir"}},
        {"scan", {"--t-r-min", "--t-r-max", "--points", "--engine", "--trace"}},
        {"fit", {"--model", "--report", "--config", "--guess", "--fix"}},
        {"coherence", {"--heating-scale", "--t-max", "--points", "--nbar0"}},
    };
    for (const auto& [cmd, names] : flags) {
        EXPECT_EQ(run({cmd, "--help"}), 0) << cmd;
        for (const auto& f : names) EXPECT_NE(out_.str().find(f), std::string::npos) << cmd << f;
    }
    EXPECT_EQ(run({"--version"}), 0);
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run({}), cli::kExitInput);
    EXPECT_EQ(run({"launch"}), cli::kExitInput);
    EXPECT_EQ(run({"simulate", kNominal, "--shots", "1", "--output-dir", dir_.string()}),
              cli::kExitInput);
    EXPECT_EQ(run({"simulate", kNominal, "--bogus"}), cli::kExitInput);
    EXPECT_EQ(run({"simulate", path("missing.cfg")}), cli::kExitInput);
    EXPECT_EQ(run({"simulate", kNominal, "--axis", "x", "--output-dir", dir_.string()}),
              cli::kExitInput);
    EXPECT_EQ(run({"scan", kNominal, "--points", "1", "--output-dir", dir_.string()}),
              cli::kExitInput);
    EXPECT_EQ(run({"scan", kNominal, "--engine", "magic", "--output-dir", dir_.string()}),
              cli::kExitInput);
    EXPECT_EQ(run({"simulate", kNominal, "--t-r", "soon", "--output-dir", dir_.string()}),
              cli::kExitInput);
}

TEST_F(Cli, NegativeMassNamesTheField) {
    std::string text = io::read_file(kNominal);
    text.replace(text.find("mass_fg = 1.95"), 14, "mass_fg = -1.95");
    put("neg.cfg", text);
    EXPECT_EQ(run({"simulate", path("neg.cfg"), "--output-dir", dir_.string()}), cli::kExitInput);
    EXPECT_NE(err_.str().find("mass_fg"), std::string::npos) << err_.str();
}

TEST_F(Cli, SimulateNominalZAxis) {
    ASSERT_EQ(run({"simulate", kNominal, "--axis", "z", "--t-r", "260us", "--shots", "400",
                   "--output-dir", dir_.string()}),
              0)
        << err_.str();
    for (const char* f : {"simulate_z_260us_shots.csv", "simulate_z_260us_histogram.csv",
                          "simulate_z_260us_histogram.svg"})
        EXPECT_TRUE(fs::exists(dir_ / f)) << f;
    const auto shots = io::shots_from_csv(read("simulate_z_260us_shots.csv"));
    ASSERT_EQ(shots.size(), 400u);
    std::vector<double> z;
    for (const auto& s : shots)
        if (s.valid) z.push_back(s.reconstructed_position);
    const double sigma = stats::stddev(z);
    EXPECT_GT(sigma, 0.7 * 43.4e-9);
    EXPECT_LT(sigma, 1.3 * 43.4e-9);
    EXPECT_NE(out_.str().find("sigma"), std::string::npos);
    EXPECT_EQ(read("simulate_z_260us_histogram.svg").rfind("<svg", 0), 0u);
}

TEST_F(Cli, SimulateIsByteIdenticalAcrossRunsAndWorkers) {
    std::vector<std::string> outputs;
    for (const char* workers : {"1", "4", "4"}) {
        const auto d = dir_ / workers;
        ASSERT_EQ(run({"simulate", kNominal, "--axis", "u", "--t-r", "40us", "--shots", "48",
                       "--seed", "17", "--workers", workers, "--output-dir", d.string(),
                       "--no-svg"}),
                  0);
        outputs.push_back(io::read_file(d / "simulate_u_40us_shots.csv"));
    }
    EXPECT_EQ(outputs[0], outputs[1]);
    EXPECT_EQ(outputs[1], outputs[2]);
    EXPECT_FALSE(fs::exists(dir_ / "1" / "simulate_u_40us_histogram.svg"));
}

TEST_F(Cli, OutputDirectoryPrecedence) {
    const auto env_dir = dir_ / "from_env";
    setenv("LEVEXP_OUTPUT_DIR", env_dir.c_str(), 1);
    const std::vector<std::string> base = {"scan", kNominal, "--points", "3", "--no-svg"};
    auto args = base;
    ASSERT_EQ(run(args), 0);
    EXPECT_TRUE(fs::exists(env_dir / "scan_z_analytic.csv"));
    args.insert(args.end(), {"--output-dir", (dir_ / "from_flag").string()});
    ASSERT_EQ(run(args), 0);
    EXPECT_TRUE(fs::exists(dir_ / "from_flag" / "scan_z_analytic.csv"));
    unsetenv("LEVEXP_OUTPUT_DIR");
}

TEST_F(Cli, AnalyticScanIsMonotoneAndMatchesMoments) {
    const std::vector<std::string> common = {kNominal, "--axis", "z", "--t-r-min", "0us",
                                             "--t-r-max", "260us", "--points", "100",
                                             "--output-dir", dir_.string()};
    auto a = common;
    a.insert(a.begin(), "scan");
    a.insert(a.end(), {"--engine", "analytic"});
    ASSERT_EQ(run(a), 0) << err_.str();
    auto m = common;
    m.insert(m.begin(), "scan");
    m.insert(m.end(), {"--engine", "moments", "--trace"});
    ASSERT_EQ(run(m), 0) << err_.str();

    const auto ca = io::curve_from_csv(read("scan_z_analytic.csv"));
    const auto cm = io::curve_from_csv(read("scan_z_moments.csv"));
    ASSERT_EQ(ca.sigma.size(), 100u);
    ASSERT_EQ(cm.sigma.size(), 100u);
    for (std::size_t i = 0; i < ca.sigma.size(); ++i) {
        if (i > 0) {
            EXPECT_GE(ca.sigma[i], ca.sigma[i - 1]);
        }
        EXPECT_NEAR(cm.sigma[i], ca.sigma[i], 1e-6 * ca.sigma[i]);
    }
    EXPECT_TRUE(fs::exists(dir_ / "scan_z_free.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "scan_z_analytic.svg"));
    EXPECT_EQ(io::moments_from_csv(read("scan_z_moments_moments.csv")).size(), 100u);
    // Free flight stays below the inverted expansion.
    const auto cf = io::curve_from_csv(read("scan_z_free.csv"));
    EXPECT_LT(cf.sigma.back(), ca.sigma.back());
}

TEST_F(Cli, JumpScanRecompressesAfterOnePeriod) {
    put("jump.cfg", R"(mass_fg = 1.95
axes = x
potential_x = harmonic_jump
omega_x_khz = 185
omega_dark_x_khz = 2.7
sigma0_x_pm = 183
nbar_x = 721
heating_x_k_per_s = 1e-6
)");
    // sigma^2 repeats every half oscillation period of the dark trap.
    const double half_period_us = 1e6 / (2 * 2.7e3);
    ASSERT_EQ(run({"scan", path("jump.cfg"), "--axis", "x", "--t-r-max",
                   std::to_string(half_period_us) + "us", "--points", "41", "--output-dir",
                   dir_.string()}),
              0)
        << err_.str();
    const auto c = io::curve_from_csv(read("scan_x_analytic.csv"));
    EXPECT_NEAR(c.sigma.back(), c.sigma.front(), 0.01 * c.sigma.front());
    EXPECT_GT(*std::max_element(c.sigma.begin(), c.sigma.end()), 50 * c.sigma.front());
}

TEST_F(Cli, ScanThenFitRoundTrip) {
    ASSERT_EQ(run({"scan", kNominal, "--axis", "z", "--t-r-max", "260us", "--points", "40",
                   "--with-broadening", "--output-dir", dir_.string()}),
              0);
    ASSERT_EQ(run({"fit", path("scan_z_analytic.csv"), "--model", "inverted", "--config",
                   kNominal, "--axis", "z", "--report", "--output-dir", dir_.string()}),
              0)
        << err_.str();
    const auto rec = io::fit_from_json(read("fit_z_inverted.json"));
    const double omega = units::khz_to_rad_per_s(43.5);
    const auto noise = NoiseSpec::from_heating_rate(units::kelvin_per_s_to_watt(5.91), omega);
    EXPECT_NEAR(rec.fit.params.trap_frequency, omega, 1e-5 * omega);
    EXPECT_NEAR(rec.fit.params.dark_frequency, units::khz_to_rad_per_s(1.4),
                1e-5 * units::khz_to_rad_per_s(1.4));
    EXPECT_NEAR(rec.fit.params.gamma1, noise.gamma1, 1e-5 * noise.gamma1);
    EXPECT_NEAR(rec.fit.params.sigma0_sq, 45.6e-12 * 45.6e-12, 1e-5 * 45.6e-12 * 45.6e-12);
    EXPECT_EQ(rec.nbar0, 10.0);
    EXPECT_TRUE(fs::exists(dir_ / "fit_z_inverted_residuals.csv"));
    const auto report = read("fit_z_inverted_report.txt");
    for (const char* s : {"gamma1", "squeezing", "expansion ratio", "K/s"})
        EXPECT_NE(report.find(s), std::string::npos) << s;
}

TEST_F(Cli, FitInputPolicies) {
    put("empty.csv", "");
    EXPECT_EQ(run({"fit", path("empty.csv"), "--mass-fg", "1.95", "--output-dir", dir_.string()}),
              cli::kExitInput);
    put("header.csv", "t_s,sigma_m\n");
    EXPECT_EQ(run({"fit", path("header.csv"), "--mass-fg", "1.95", "--output-dir", dir_.string()}),
              cli::kExitInput);

    // Repeated, unsorted release times are repeated measurements.
    ASSERT_EQ(run({"scan", kNominal, "--points", "12", "--output-dir", dir_.string(), "--no-svg"}),
              0);
    const auto c = io::curve_from_csv(read("scan_z_analytic.csv"));
    std::string text = "t_s,sigma_m\n";
    for (int pass = 0; pass < 2; ++pass)
        for (std::size_t i = c.times.size(); i-- > 0;)
            text += io::format_double(c.times[i]) + "," +
                    io::format_double(c.sigma[i] * (pass ? 1.01 : 0.99)) + "\n";
    put("dup.csv", text);
    EXPECT_EQ(run({"fit", path("dup.csv"), "--mass-fg", "1.95", "--output-dir", dir_.string(),
                   "--no-svg"}),
              0)
        << err_.str();

    // No expansion at all: nothing to fit.
    put("flat.csv", "t_s,sigma_m\n0,1e-10\n1e-5,1e-10\n2e-5,1e-10\n3e-5,1e-10\n4e-5,1e-10\n"
                    "5e-5,1e-10\n6e-5,1e-10\n7e-5,1e-10\n8e-5,1e-10\n");
    EXPECT_EQ(run({"fit", path("flat.csv"), "--mass-fg", "1.95", "--output-dir", dir_.string()}),
              cli::kExitFit);
    EXPECT_FALSE(err_.str().empty());
    EXPECT_EQ(run({"fit", path("dup.csv"), "--output-dir", dir_.string()}), cli::kExitInput)
        << "mass is required";
}

TEST_F(Cli, CoherenceFromFit) {
    ASSERT_EQ(run({"scan", kNominal, "--points", "30", "--with-broadening", "--output-dir",
                   dir_.string(), "--no-svg"}),
              0);
    ASSERT_EQ(run({"fit", path("scan_z_analytic.csv"), "--config", kNominal, "--output-dir",
                   dir_.string(), "--no-svg"}),
              0)
        << err_.str();
    ASSERT_EQ(run({"coherence", path("fit_z_inverted.json"), "--heating-scale", "0.001",
                   "--output-dir", dir_.string()}),
              0)
        << err_.str();
    const auto c = io::coherence_from_csv(read("coherence_z.csv"));
    ASSERT_EQ(c.times.size(), 101u);
    EXPECT_NEAR(c.times.back(), 260e-6, 1e-15);
    EXPECT_NEAR(c.xi.front(), 6.1417274708774414e-12, 1e-4 * c.xi.front());
    for (std::size_t i = 1; i < c.times.size(); ++i) EXPECT_GE(c.xi_improved[i], c.xi[i]);
    EXPECT_TRUE(fs::exists(dir_ / "coherence_z.svg"));

    ASSERT_EQ(run({"coherence", path("fit_z_inverted.json"), "--t-max", "0", "--output-dir",
                   dir_.string()}),
              0);
    const auto single = io::coherence_from_csv(read("coherence_z.csv"));
    ASSERT_EQ(single.times.size(), 1u);
    EXPECT_DOUBLE_EQ(single.xi[0], c.xi[0]);

    put("bad.json", "{\"model\": 3}");
    EXPECT_EQ(run({"coherence", path("bad.json"), "--output-dir", dir_.string()}),
              cli::kExitInput);
    EXPECT_EQ(run({"coherence", path("fit_z_inverted.json"), "--heating-scale", "0",
                   "--output-dir", dir_.string()}),
              cli::kExitInput);
}

TEST_F(Cli, ReconstructionFailureExitsThree) {
    std::string text = io::read_file(kNominal);
    text.replace(text.find("measure_window_us = 500"), 23, "measure_window_us = 1");
    put("short.cfg", text);
    EXPECT_EQ(run({"simulate", path("short.cfg"), "--shots", "4", "--output-dir", dir_.string()}),
              cli::kExitSimulation)
        << err_.str();
}

TEST_F(Cli, EnsembleScanWritesErrorsAndShots) {
    ASSERT_EQ(run({"scan", kNominal, "--engine", "ensemble", "--points", "3", "--t-r-max",
                   "100us", "--shots", "50", "--trace", "--output-dir", dir_.string(), "--no-svg"}),
              0)
        << err_.str();
    const auto c = io::curve_from_csv(read("scan_z_ensemble.csv"));
    ASSERT_EQ(c.sigma_err.size(), 3u);
    for (double e : c.sigma_err) EXPECT_GT(e, 0.0);
    const auto shots = io::shots_from_csv(read("scan_z_ensemble_shots.csv"));
    ASSERT_EQ(shots.size(), 150u);
    // Disjoint seed blocks per release time.
    EXPECT_EQ(shots[50].seed, shots[0].seed + 50);
}

}  // namespace
}  // namespace levexp
