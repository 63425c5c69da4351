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

#include "levexp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace levexp::svg {

namespace {

struct Box {
    double x0, y0, w, h;  // pixel rectangle
};

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    bool empty() const { return !(lo <= hi); }
    void pad() {
        if (empty()) {
            lo = 0.0;
            hi = 1.0;
        } else if (hi == lo) {
            const double d = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
            lo -= d;
            hi += d;
        }
    }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    if (v != 0.0 && (std::abs(v) >= 1e5 || std::abs(v) < 1e-3))
        std::snprintf(buf, sizeof buf, "%.3g", v);
    else
        std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// 1-2-5 ticks covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
    const double span = hi - lo;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (span / step <= target) break;
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step)
        ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return ticks;
}

class Doc {
  public:
    Doc(int w, int h) {
        os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
            << "\" viewBox=\"0 0 " << w << ' ' << h << "\" font-family=\"sans-serif\">\n"
            << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& style) {
        os_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
            << "\" y2=\"" << num(y2) << "\" " << style << "/>\n";
    }
    void rect(double x, double y, double w, double h, const std::string& style) {
        os_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
            << "\" height=\"" << num(h) << "\" " << style << "/>\n";
    }
    void text(double x, double y, const std::string& s, const std::string& extra = "") {
        os_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"12\" " << extra
            << ">" << escape(s) << "</text>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& style) {
        if (pts.empty()) return;
        os_ << "<polyline fill=\"none\" " << style << " points=\"";
        for (const auto& [x, y] : pts) os_ << num(x) << ',' << num(y) << ' ';
        os_ << "\"/>\n";
    }
    void circle(double x, double y, double r, const std::string& style) {
        os_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" "
            << style << "/>\n";
    }
    std::string finish() {
        os_ << "</svg>\n";
        return os_.str();
    }

  private:
    std::ostringstream os_;
};

struct Axis {
    double lo, hi;
    bool log;
    double px0, px1;  // pixel positions of lo and hi

    double map(double v) const {
        const double a = log ? std::log10(v) : v;
        const double b0 = log ? std::log10(lo) : lo;
        const double b1 = log ? std::log10(hi) : hi;
        return px0 + (a - b0) / (b1 - b0) * (px1 - px0);
    }
    std::vector<double> ticks() const {
        if (!log) return nice_ticks(lo, hi);
        std::vector<double> t;
        for (double e = std::ceil(std::log10(lo)); e <= std::floor(std::log10(hi)) + 1e-9; e += 1.0)
            t.push_back(std::pow(10.0, e));
        return t;
    }
};

void draw_frame(Doc& doc, const Box& b, const Axis& xa, const Axis& ya, const std::string& xl,
                const std::string& yl, bool x_tick_labels = true, bool y_tick_labels = true) {
    doc.rect(b.x0, b.y0, b.w, b.h, "fill=\"none\" stroke=\"black\"");
    for (double t : xa.ticks()) {
        const double x = xa.map(t);
        doc.line(x, b.y0 + b.h, x, b.y0 + b.h + 4, "stroke=\"black\"");
        if (x_tick_labels) doc.text(x, b.y0 + b.h + 16, tick_label(t), "text-anchor=\"middle\"");
    }
    for (double t : ya.ticks()) {
        const double y = ya.map(t);
        doc.line(b.x0 - 4, y, b.x0, y, "stroke=\"black\"");
        if (y_tick_labels) doc.text(b.x0 - 6, y + 4, tick_label(t), "text-anchor=\"end\"");
    }
    if (!xl.empty()) doc.text(b.x0 + b.w / 2, b.y0 + b.h + 34, xl, "text-anchor=\"middle\"");
    if (!yl.empty()) {
        const double x = b.x0 - 52, y = b.y0 + b.h / 2;
        doc.text(x, y, yl,
                 "text-anchor=\"middle\" transform=\"rotate(-90 " + num(x) + ' ' + num(y) + ")\"");
    }
}

}  // namespace

std::string render(const LinePlot& plot) {
    const int width = 640, height = 420;
    const Box box{80, 40, 520, 300};
    Range xr, yr;
    for (const auto& s : plot.series) {
        const std::size_t n = std::min(s.x.size(), s.y.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (plot.log_y && !(s.y[i] > 0.0)) continue;
            xr.add(s.x[i]);
            yr.add(s.y[i]);
        }
    }
    if (plot.hline && (!plot.log_y || *plot.hline > 0.0)) yr.add(*plot.hline);
    xr.pad();
    if (plot.log_y) {
        if (yr.empty()) yr = {1.0, 10.0};
        yr.lo = std::pow(10.0, std::floor(std::log10(yr.lo)));
        yr.hi = std::pow(10.0, std::ceil(std::log10(yr.hi)));
        if (yr.hi <= yr.lo) yr.hi = 10.0 * yr.lo;
    } else {
        yr.pad();
        const double d = 0.05 * (yr.hi - yr.lo);
        yr.hi += d;
        if (yr.lo != 0.0) yr.lo -= d;
    }
    const Axis xa{xr.lo, xr.hi, false, box.x0, box.x0 + box.w};
    const Axis ya{yr.lo, yr.hi, plot.log_y, box.y0 + box.h, box.y0};

    Doc doc(width, height);
    doc.text(width / 2.0, 22, plot.title, "text-anchor=\"middle\" font-size=\"14\"");
    draw_frame(doc, box, xa, ya, plot.x_label, plot.y_label);

    if (plot.hline && (!plot.log_y || *plot.hline > 0.0)) {
        const double y = ya.map(*plot.hline);
        doc.line(box.x0, y, box.x0 + box.w, y, "stroke=\"gray\" stroke-dasharray=\"2 3\"");
        if (!plot.hline_label.empty())
            doc.text(box.x0 + box.w - 4, y - 4, plot.hline_label,
                     "text-anchor=\"end\" fill=\"gray\"");
    }

    double legend_y = box.y0 + 16;
    for (const auto& s : plot.series) {
        const std::string stroke = "stroke=\"" + s.color + "\" stroke-width=\"1.5\"" +
                                   (s.dashed ? " stroke-dasharray=\"6 4\"" : "");
        const std::size_t n = std::min(s.x.size(), s.y.size());
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (plot.log_y && !(s.y[i] > 0.0)) continue;
            pts.emplace_back(xa.map(s.x[i]), ya.map(s.y[i]));
        }
        if (s.markers) {
            for (const auto& [x, y] : pts) doc.circle(x, y, 2.5, "fill=\"" + s.color + "\"");
        } else {
            doc.polyline(pts, stroke);
        }
        if (!s.label.empty()) {
            if (s.markers)
                doc.circle(box.x0 + 20, legend_y - 4, 2.5, "fill=\"" + s.color + "\"");
            else
                doc.line(box.x0 + 10, legend_y - 4, box.x0 + 30, legend_y - 4, stroke);
            doc.text(box.x0 + 36, legend_y, s.label);
            legend_y += 16;
        }
    }
    return doc.finish();
}

std::string render(const HistogramPanel& p) {
    const int width = 560, height = 560;
    const Box main{80, 150, 330, 330};
    const Box top{80, 40, 330, 100};
    const Box side{420, 150, 100, 330};
    const auto& h = p.hist;

    Doc doc(width, height);
    doc.text(width / 2.0, 22, p.title, "text-anchor=\"middle\" font-size=\"14\"");
    const std::size_t nx = h.x_edges.size() < 2 ? 0 : h.x_edges.size() - 1;
    const std::size_t ny = h.y_edges.size() < 2 ? 0 : h.y_edges.size() - 1;
    if (nx == 0 || ny == 0) {
        doc.text(width / 2.0, height / 2.0, "no data", "text-anchor=\"middle\"");
        return doc.finish();
    }

    const Axis xa{h.x_edges.front() * p.x_scale, h.x_edges.back() * p.x_scale, false, main.x0,
                  main.x0 + main.w};
    const Axis ya{h.y_edges.front() * p.y_scale, h.y_edges.back() * p.y_scale, false,
                  main.y0 + main.h, main.y0};

    std::vector<double> mx(nx, 0.0), my(ny, 0.0);
    std::int64_t peak = 0;
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j) {
            const auto c = h.counts[i][j];
            mx[i] += static_cast<double>(c);
            my[j] += static_cast<double>(c);
            peak = std::max(peak, c);
        }
    const double total = static_cast<double>(h.total());

    // Density cells, white to dark blue.
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            const auto c = h.counts[i][j];
            if (c == 0) continue;
            const double f = static_cast<double>(c) / static_cast<double>(peak);
            const int r = static_cast<int>(255 - 224 * f), g = static_cast<int>(255 - 136 * f),
                      b = static_cast<int>(255 - 75 * f);
            char fill[16];
            std::snprintf(fill, sizeof fill, "#%02x%02x%02x", r, g, b);
            const double x0 = xa.map(h.x_edges[i] * p.x_scale);
            const double x1 = xa.map(h.x_edges[i + 1] * p.x_scale);
            const double y0 = ya.map(h.y_edges[j + 1] * p.y_scale);
            const double y1 = ya.map(h.y_edges[j] * p.y_scale);
            doc.rect(x0, y0, x1 - x0, y1 - y0, std::string("fill=\"") + fill + "\" stroke=\"none\"");
        }
    }
    draw_frame(doc, main, xa, ya, p.x_label, p.y_label);

    // Marginals as densities so the Gaussian overlay shares the scale.
    auto gauss = [](double x, double mu, double s) {
        return std::exp(-0.5 * (x - mu) * (x - mu) / (s * s)) / (s * std::sqrt(2.0 * std::numbers::pi));
    };
    std::vector<double> dx(nx), dy(ny);
    double dmax_x = 0.0, dmax_y = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
        const double w = (h.x_edges[i + 1] - h.x_edges[i]) * p.x_scale;
        dx[i] = total > 0 && w > 0 ? mx[i] / (total * w) : 0.0;
        dmax_x = std::max(dmax_x, dx[i]);
    }
    for (std::size_t j = 0; j < ny; ++j) {
        const double w = (h.y_edges[j + 1] - h.y_edges[j]) * p.y_scale;
        dy[j] = total > 0 && w > 0 ? my[j] / (total * w) : 0.0;
        dmax_y = std::max(dmax_y, dy[j]);
    }
    if (p.sigma_x > 0) dmax_x = std::max(dmax_x, gauss(p.mean_x, p.mean_x, p.sigma_x));
    if (p.sigma_y > 0) dmax_y = std::max(dmax_y, gauss(p.mean_y, p.mean_y, p.sigma_y));
    if (dmax_x <= 0) dmax_x = 1.0;
    if (dmax_y <= 0) dmax_y = 1.0;

    doc.rect(top.x0, top.y0, top.w, top.h, "fill=\"none\" stroke=\"black\"");
    for (std::size_t i = 0; i < nx; ++i) {
        const double x0 = xa.map(h.x_edges[i] * p.x_scale);
        const double x1 = xa.map(h.x_edges[i + 1] * p.x_scale);
        const double hh = dx[i] / dmax_x * (top.h - 6);
        doc.rect(x0, top.y0 + top.h - hh, x1 - x0, hh, "fill=\"#9ecae1\" stroke=\"#3182bd\"");
    }
    doc.rect(side.x0, side.y0, side.w, side.h, "fill=\"none\" stroke=\"black\"");
    for (std::size_t j = 0; j < ny; ++j) {
        const double y0 = ya.map(h.y_edges[j + 1] * p.y_scale);
        const double y1 = ya.map(h.y_edges[j] * p.y_scale);
        const double ww = dy[j] / dmax_y * (side.w - 6);
        doc.rect(side.x0, y0, ww, y1 - y0, "fill=\"#9ecae1\" stroke=\"#3182bd\"");
    }

    const std::string red = "stroke=\"#d62728\" stroke-width=\"1.5\"";
    if (p.sigma_x > 0) {
        std::vector<std::pair<double, double>> pts;
        for (int k = 0; k <= 200; ++k) {
            const double x = xa.lo + (xa.hi - xa.lo) * k / 200.0;
            pts.emplace_back(xa.map(x), top.y0 + top.h - gauss(x, p.mean_x, p.sigma_x) / dmax_x * (top.h - 6));
        }
        doc.polyline(pts, red);
    }
    if (p.sigma_y > 0) {
        std::vector<std::pair<double, double>> pts;
        for (int k = 0; k <= 200; ++k) {
            const double y = ya.lo + (ya.hi - ya.lo) * k / 200.0;
            pts.emplace_back(side.x0 + gauss(y, p.mean_y, p.sigma_y) / dmax_y * (side.w - 6), ya.map(y));
        }
        doc.polyline(pts, red);
    }
    return doc.finish();
}

}  // namespace levexp::svg
