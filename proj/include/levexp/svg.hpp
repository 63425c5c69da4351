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

// Minimal self-contained SVG figures. Every figure the CLI writes has a CSV
// next to it; these are for looking at, not for reading back.

#ifndef LEVEXP_SVG_HPP
#define LEVEXP_SVG_HPP

#include <optional>
#include <string>
#include <vector>

#include "levexp/statistics.hpp"

namespace levexp::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool dashed = false;
    bool markers = false;  // points instead of a polyline
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<Series> series;
    std::optional<double> hline;  // horizontal reference line
    std::string hline_label;
};

std::string render(const LinePlot& plot);

/// 2D histogram with both marginals and a Gaussian overlay on each marginal.
/// Edges are multiplied by x_scale / y_scale for display.
struct HistogramPanel {
    std::string title;
    std::string x_label;
    std::string y_label;
    stats::Histogram2D hist;
    double x_scale = 1.0;
    double y_scale = 1.0;
    // Gaussian overlay parameters, in display units.
    double mean_x = 0.0, sigma_x = 0.0;
    double mean_y = 0.0, sigma_y = 0.0;
};

std::string render(const HistogramPanel& panel);

}  // namespace levexp::svg

#endif  // LEVEXP_SVG_HPP
