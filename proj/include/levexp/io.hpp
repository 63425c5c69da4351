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

// File formats. Every CSV has a fixed header line; numbers are written in
// shortest round-trip form so readers recover the exact doubles. Reader
// errors are ConfigError with "source:line" context.
//
//   curve      t_s,sigma_m[,sigma_err_m]
//   shots      axis,t_r_s,z_m,p_kgms,seed,valid
//   coherence  t_s,xi_m,xi_improved_m
//   moments    t_s,var_pos_m2,covar,var_mom
//   histogram  x_lo,x_hi,y_lo,y_hi,count     (one row per bin, x-major)
//   fit        JSON object, see fit_to_json

#ifndef LEVEXP_IO_HPP
#define LEVEXP_IO_HPP

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "levexp/analytic_dynamics.hpp"
#include "levexp/estimation.hpp"
#include "levexp/trajectory_ensemble.hpp"

namespace levexp::io {

/// Shortest representation that parses back to the same double.
std::string format_double(double value);
/// Strict parse of the whole field; throws ConfigError naming `what`.
double parse_double(std::string_view text, std::string_view what);
long long parse_integer(std::string_view text, std::string_view what);

/// Writes to a temporary sibling and renames it over `path`, so readers
/// never see a partial file. Creates missing parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
/// Throws ConfigError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> lines;  // 1-based source line of each row
};

/// Comma-separated, no quoting; blank lines are skipped. Throws on ragged
/// rows or a missing header.
CsvTable parse_csv(std::string_view text, std::string_view source);

std::string curve_to_csv(const ExpansionCurve& curve);
/// Rows may be in any order and may repeat times; at least one row needed.
ExpansionCurve curve_from_csv(std::string_view text, std::string_view source = "<curve>");

std::string shots_to_csv(std::span<const Shot> shots);
std::vector<Shot> shots_from_csv(std::string_view text, std::string_view source = "<shots>");

std::string coherence_to_csv(const CoherenceCurve& curve);
CoherenceCurve coherence_from_csv(std::string_view text, std::string_view source = "<coherence>");

std::string moments_to_csv(std::span<const double> times, std::span<const GaussianState> states);
std::vector<std::pair<double, GaussianState>> moments_from_csv(
    std::string_view text, std::string_view source = "<moments>");

std::string histogram_to_csv(const stats::Histogram2D& hist);
stats::Histogram2D histogram_from_csv(std::string_view text,
                                      std::string_view source = "<histogram>");

/// A fit plus what coherence_curve needs besides it.
struct FitRecord {
    FitResult fit;
    AxisLabel axis = AxisLabel::z;
    double nbar0 = 0.0;
};

std::string fit_to_json(const FitRecord& record);
/// Throws ConfigError on malformed input.
FitRecord fit_from_json(std::string_view text, std::string_view source = "<fit>");

}  // namespace levexp::io

#endif  // LEVEXP_IO_HPP
