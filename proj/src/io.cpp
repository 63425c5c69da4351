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

#include <unistd.h>

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "levexp/errors.hpp"

namespace levexp::io {

namespace {

std::string located(std::string_view source, int line, std::string_view msg) {
    std::ostringstream os;
    os << source << ':' << line << ": " << msg;
    return os.str();
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.emplace_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

void expect_header(const CsvTable& t, std::initializer_list<std::string_view> cols,
                   std::string_view source) {
    std::vector<std::string> want(cols.begin(), cols.end());
    if (t.header != want) {
        std::string joined;
        for (const auto& c : want) joined += (joined.empty() ? "" : ",") + c;
        throw ConfigError(located(source, 1, "expected header '" + joined + "'"));
    }
}

double field(const CsvTable& t, std::size_t row, std::size_t col, std::string_view source) {
    try {
        return parse_double(t.rows[row][col], t.header[col]);
    } catch (const ConfigError& e) {
        throw ConfigError(located(source, t.lines[row], e.what()));
    }
}

std::string line_of(std::initializer_list<double> values) {
    std::string s;
    for (double v : values) {
        if (!s.empty()) s += ',';
        s += format_double(v);
    }
    s += '\n';
    return s;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view what) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError(std::string(what) + ": '" + std::string(text) + "' is not a number");
    if (!std::isfinite(v))
        throw ConfigError(std::string(what) + ": '" + std::string(text) + "' is not finite");
    return v;
}

long long parse_integer(std::string_view text, std::string_view what) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    long long v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError(std::string(what) + ": '" + std::string(text) + "' is not an integer");
    return v;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    static std::atomic<unsigned> counter{0};
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            fs::remove(tmp, ec);
            throw Error("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("cannot rename into " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CsvTable parse_csv(std::string_view text, std::string_view source) {
    CsvTable t;
    int line_no = 0;
    bool have_header = false;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        const std::string_view line =
            trim(text.substr(start, end == std::string_view::npos ? text.size() - start : end - start));
        ++line_no;
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        if (line.empty()) continue;
        auto cells = split(line);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size())
            throw ConfigError(located(source, line_no,
                                      "expected " + std::to_string(t.header.size()) +
                                          " fields, found " + std::to_string(cells.size())));
        t.rows.push_back(std::move(cells));
        t.lines.push_back(line_no);
    }
    if (!have_header) throw ConfigError(std::string(source) + ": empty file (no header)");
    return t;
}

std::string curve_to_csv(const ExpansionCurve& curve) {
    const bool err = !curve.sigma_err.empty();
    std::string s = err ? "t_s,sigma_m,sigma_err_m\n" : "t_s,sigma_m\n";
    for (std::size_t i = 0; i < curve.times.size(); ++i)
        s += err ? line_of({curve.times[i], curve.sigma[i], curve.sigma_err[i]})
                 : line_of({curve.times[i], curve.sigma[i]});
    return s;
}

ExpansionCurve curve_from_csv(std::string_view text, std::string_view source) {
    const CsvTable t = parse_csv(text, source);
    const bool err = t.header.size() == 3;
    if (err)
        expect_header(t, {"t_s", "sigma_m", "sigma_err_m"}, source);
    else
        expect_header(t, {"t_s", "sigma_m"}, source);
    if (t.rows.empty()) throw ConfigError(std::string(source) + ": no data rows");
    ExpansionCurve c;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const double tt = field(t, r, 0, source);
        const double s = field(t, r, 1, source);
        if (!(std::isfinite(tt) && tt >= 0.0))
            throw ConfigError(located(source, t.lines[r], "t_s must be finite and >= 0"));
        if (!(std::isfinite(s) && s >= 0.0))
            throw ConfigError(located(source, t.lines[r], "sigma_m must be finite and >= 0"));
        c.times.push_back(tt);
        c.sigma.push_back(s);
        if (err) {
            const double e = field(t, r, 2, source);
            if (!(std::isfinite(e) && e > 0.0))
                throw ConfigError(located(source, t.lines[r], "sigma_err_m must be > 0"));
            c.sigma_err.push_back(e);
        }
    }
    return c;
}

std::string shots_to_csv(std::span<const Shot> shots) {
    std::string s = "axis,t_r_s,z_m,p_kgms,seed,valid\n";
    for (const auto& shot : shots) {
        s += to_string(shot.axis);
        s += ',' + format_double(shot.release_time) + ',' +
             format_double(shot.reconstructed_position) + ',' +
             format_double(shot.reconstructed_momentum) + ',' + std::to_string(shot.seed) + ',' +
             (shot.valid ? "1" : "0") + '\n';
    }
    return s;
}

std::vector<Shot> shots_from_csv(std::string_view text, std::string_view source) {
    const CsvTable t = parse_csv(text, source);
    expect_header(t, {"axis", "t_r_s", "z_m", "p_kgms", "seed", "valid"}, source);
    std::vector<Shot> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        Shot s;
        try {
            s.axis = parse_axis_label(t.rows[r][0]);
            s.seed = std::stoull(t.rows[r][4]);
        } catch (const std::exception& e) {
            throw ConfigError(located(source, t.lines[r], e.what()));
        }
        s.release_time = field(t, r, 1, source);
        s.reconstructed_position = field(t, r, 2, source);
        s.reconstructed_momentum = field(t, r, 3, source);
        const auto& v = t.rows[r][5];
        if (v != "0" && v != "1")
            throw ConfigError(located(source, t.lines[r], "valid must be 0 or 1"));
        s.valid = v == "1";
        out.push_back(s);
    }
    return out;
}

std::string coherence_to_csv(const CoherenceCurve& curve) {
    std::string s = "t_s,xi_m,xi_improved_m\n";
    for (std::size_t i = 0; i < curve.times.size(); ++i)
        s += line_of({curve.times[i], curve.xi[i], curve.xi_improved[i]});
    return s;
}

CoherenceCurve coherence_from_csv(std::string_view text, std::string_view source) {
    const CsvTable t = parse_csv(text, source);
    expect_header(t, {"t_s", "xi_m", "xi_improved_m"}, source);
    CoherenceCurve c;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        c.times.push_back(field(t, r, 0, source));
        c.xi.push_back(field(t, r, 1, source));
        c.xi_improved.push_back(field(t, r, 2, source));
    }
    return c;
}

std::string moments_to_csv(std::span<const double> times, std::span<const GaussianState> states) {
    if (times.size() != states.size()) throw DomainError("moments_to_csv: length mismatch");
    std::string s = "t_s,var_pos_m2,covar,var_mom\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        s += line_of({times[i], states[i].var_position, states[i].covar, states[i].var_momentum});
    return s;
}

std::vector<std::pair<double, GaussianState>> moments_from_csv(std::string_view text,
                                                               std::string_view source) {
    const CsvTable t = parse_csv(text, source);
    expect_header(t, {"t_s", "var_pos_m2", "covar", "var_mom"}, source);
    std::vector<std::pair<double, GaussianState>> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        GaussianState g;
        g.var_position = field(t, r, 1, source);
        g.covar = field(t, r, 2, source);
        g.var_momentum = field(t, r, 3, source);
        out.emplace_back(field(t, r, 0, source), g);
    }
    return out;
}

std::string histogram_to_csv(const stats::Histogram2D& hist) {
    std::string s = "x_lo,x_hi,y_lo,y_hi,count\n";
    for (std::size_t ix = 0; ix + 1 < hist.x_edges.size(); ++ix) {
        for (std::size_t iy = 0; iy + 1 < hist.y_edges.size(); ++iy) {
            s += format_double(hist.x_edges[ix]) + ',' + format_double(hist.x_edges[ix + 1]) + ',' +
                 format_double(hist.y_edges[iy]) + ',' + format_double(hist.y_edges[iy + 1]) + ',' +
                 std::to_string(hist.counts[ix][iy]) + '\n';
        }
    }
    return s;
}

stats::Histogram2D histogram_from_csv(std::string_view text, std::string_view source) {
    const CsvTable t = parse_csv(text, source);
    expect_header(t, {"x_lo", "x_hi", "y_lo", "y_hi", "count"}, source);
    stats::Histogram2D h;
    if (t.rows.empty()) return h;
    // Rows are x-major: the y edges repeat for every x bin.
    std::vector<double> xs, ys;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const double x_lo = field(t, r, 0, source);
        const double y_lo = field(t, r, 2, source);
        if (xs.empty() || xs.back() != x_lo) xs.push_back(x_lo);
        if (xs.size() == 1) ys.push_back(y_lo);
    }
    const std::size_t ny = ys.size();
    if (t.rows.size() != xs.size() * ny)
        throw ConfigError(std::string(source) + ": histogram rows do not form a grid");
    h.x_edges = xs;
    h.x_edges.push_back(field(t, t.rows.size() - 1, 1, source));
    h.y_edges = ys;
    h.y_edges.push_back(field(t, ny - 1, 3, source));
    h.counts.assign(xs.size(), std::vector<std::int64_t>(ny, 0));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        try {
            h.counts[r / ny][r % ny] = parse_integer(t.rows[r][4], "count");
        } catch (const ConfigError& e) {
            throw ConfigError(located(source, t.lines[r], e.what()));
        }
    }
    return h;
}

std::string fit_to_json(const FitRecord& record) {
    using nlohmann::ordered_json;
    const FitResult& f = record.fit;
    ordered_json j;
    j["model"] = std::string(to_string(f.model));
    j["axis"] = std::string(to_string(record.axis));
    ordered_json params, errs;
    const auto p = f.params.to_array();
    for (int i = 0; i < kNumFitParams; ++i) {
        params[std::string(fit_param_name(i))] = p[i];
        errs[std::string(fit_param_name(i))] = f.stderr_of(i);
    }
    j["params"] = params;
    j["stderr"] = errs;
    j["param_units"] = {{"gamma1", "1/s"},           {"trap_frequency", "rad/s"},
                        {"dark_frequency", "rad/s"}, {"sigma0_sq", "m^2"},
                        {"release_phase", "rad"}};
    ordered_json fixed = ordered_json::array();
    for (int i = 0; i < kNumFitParams; ++i) fixed.push_back(f.fixed[i]);
    j["fixed"] = fixed;
    ordered_json cov = ordered_json::array(), corr = ordered_json::array();
    for (int i = 0; i < kNumFitParams; ++i) {
        ordered_json row = ordered_json::array(), crow = ordered_json::array();
        for (int k = 0; k < kNumFitParams; ++k) {
            row.push_back(f.covariance[i][k]);
            crow.push_back(f.correlation_matrix[i][k]);
        }
        cov.push_back(row);
        corr.push_back(crow);
    }
    j["covariance"] = cov;
    j["correlation"] = corr;
    j["residual_rms_m"] = f.residual_rms;
    j["residual_variance"] = f.residual_variance;
    j["chi2"] = f.chi2;
    j["n_points"] = f.n_points;
    j["iterations"] = f.iterations;
    j["context"] = {{"mass_kg", f.context.mass},
                    {"measurement_broadening_m", f.context.measurement_broadening},
                    {"rf_frequency_rad_s", f.context.rf_frequency},
                    {"mathieu_a", f.context.mathieu_a}};
    j["nbar0"] = record.nbar0;
    j["times_s"] = f.times;
    j["residuals_m"] = f.residuals;
    j["cost_history"] = f.cost_history;
    return j.dump(2) + "\n";
}

FitRecord fit_from_json(std::string_view text, std::string_view source) {
    using nlohmann::json;
    FitRecord rec;
    try {
        const json j = json::parse(text);
        FitResult& f = rec.fit;
        f.model = parse_fit_model(j.at("model").get<std::string>());
        rec.axis = parse_axis_label(j.at("axis").get<std::string>());
        std::array<double, kNumFitParams> p{};
        for (int i = 0; i < kNumFitParams; ++i)
            p[i] = j.at("params").at(std::string(fit_param_name(i))).get<double>();
        f.params = FitParams::from_array(p);
        if (j.contains("fixed"))
            for (int i = 0; i < kNumFitParams; ++i) f.fixed[i] = j.at("fixed").at(i).get<bool>();
        for (int i = 0; i < kNumFitParams; ++i)
            for (int k = 0; k < kNumFitParams; ++k) {
                f.covariance[i][k] = j.at("covariance").at(i).at(k).get<double>();
                if (j.contains("correlation") && !j["correlation"][i][k].is_null())
                    f.correlation_matrix[i][k] = j["correlation"][i][k].get<double>();
            }
        f.residual_rms = j.value("residual_rms_m", 0.0);
        f.residual_variance = j.value("residual_variance", 0.0);
        f.chi2 = j.value("chi2", 0.0);
        f.n_points = j.value("n_points", 0);
        f.iterations = j.value("iterations", 0);
        const json& c = j.at("context");
        f.context.mass = c.at("mass_kg").get<double>();
        f.context.measurement_broadening = c.value("measurement_broadening_m", 0.0);
        f.context.rf_frequency = c.value("rf_frequency_rad_s", 0.0);
        f.context.mathieu_a = c.value("mathieu_a", 0.0);
        rec.nbar0 = j.value("nbar0", 0.0);
        if (j.contains("times_s")) f.times = j.at("times_s").get<std::vector<double>>();
        if (j.contains("residuals_m")) f.residuals = j.at("residuals_m").get<std::vector<double>>();
        if (j.contains("cost_history"))
            f.cost_history = j.at("cost_history").get<std::vector<double>>();
        if (!f.residuals.empty() && f.residuals.size() != f.times.size())
            throw ConfigError("residuals_m and times_s differ in length");
    } catch (const json::exception& e) {
        throw ConfigError(std::string(source) + ": malformed fit file: " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(source) + ": " + e.what());
    }
    if (!(rec.fit.context.mass > 0.0))
        throw ConfigError(std::string(source) + ": context.mass_kg must be positive");
    if (!(rec.fit.params.trap_frequency > 0.0 && rec.fit.params.dark_frequency > 0.0 &&
          rec.fit.params.sigma0_sq > 0.0 && rec.fit.params.gamma1 >= 0.0))
        throw ConfigError(std::string(source) + ": fit parameters out of range");
    if (!(rec.nbar0 >= 0.0)) throw ConfigError(std::string(source) + ": nbar0 must be >= 0");
    return rec;
}

}  // namespace levexp::io
