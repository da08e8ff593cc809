#pragma once

// Self-contained SVG chart rendering: grouped bars, polylines with markers,
// axes with tick labels, and a legend. Output bytes are a pure function of
// the input series, so plots rerun byte-identically alongside the CSVs.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "csvio.hpp"

namespace noisesearch {
namespace svg {

inline const std::vector<std::string>& palette() {
    static const std::vector<std::string> p = {
        "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
        "#8c564b", "#e377c2", "#7f7f7f", "#17becf", "#bcbd22"};
    return p;
}

inline std::string escape_text(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '&') {
            out += "&amp;";
        } else if (c == '<') {
            out += "&lt;";
        } else if (c == '>') {
            out += "&gt;";
        } else {
            out += c;
        }
    }
    return out;
}

// Smallest "nice" value (1/2/5 times a power of ten) at or above v.
inline double nice_ceil(double v) {
    if (!(v > 0.0)) return 1.0;
    const double mag = std::pow(10.0, std::floor(std::log10(v)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * m >= v) return mag * m;
    }
    return mag * 10.0;
}

struct Canvas {
    std::string body;
    double width = 860.0;
    double height = 520.0;

    void rect(double x, double y, double w, double h, const std::string& fill) {
        body += "<rect x=\"" + fmt6(x) + "\" y=\"" + fmt6(y) + "\" width=\"" + fmt6(w) +
                "\" height=\"" + fmt6(h) + "\" fill=\"" + fill + "\"/>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width_px = 1.0) {
        body += "<line x1=\"" + fmt6(x1) + "\" y1=\"" + fmt6(y1) + "\" x2=\"" + fmt6(x2) +
                "\" y2=\"" + fmt6(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                fmt6(width_px) + "\"/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts,
                  const std::string& stroke) {
        if (pts.size() < 2) return;
        body += "<polyline fill=\"none\" stroke=\"" + stroke +
                "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i) body += " ";
            body += fmt6(pts[i].first) + "," + fmt6(pts[i].second);
        }
        body += "\"/>\n";
    }
    void circle(double cx, double cy, double r, const std::string& fill) {
        body += "<circle cx=\"" + fmt6(cx) + "\" cy=\"" + fmt6(cy) + "\" r=\"" + fmt6(r) +
                "\" fill=\"" + fill + "\"/>\n";
    }
    void text(double x, double y, const std::string& s, double size = 12.0,
              const std::string& anchor = "start", const std::string& fill = "#333333") {
        body += "<text x=\"" + fmt6(x) + "\" y=\"" + fmt6(y) + "\" font-family=\"sans-serif\" font-size=\"" +
                fmt6(size) + "\" text-anchor=\"" + anchor + "\" fill=\"" + fill + "\">" +
                escape_text(s) + "</text>\n";
    }

    std::string finish() const {
        return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
               fmt6(width) + "\" height=\"" + fmt6(height) + "\" viewBox=\"0 0 " +
               fmt6(width) + " " + fmt6(height) + "\">\n<rect width=\"" + fmt6(width) +
               "\" height=\"" + fmt6(height) + "\" fill=\"#ffffff\"/>\n" + body +
               "</svg>\n";
    }
};

struct Frame {
    double left = 70.0;
    double top = 44.0;
    double plot_w = 540.0;
    double plot_h = 400.0;
    double ymin = 0.0;
    double ymax = 1.0;

    double y_px(double v) const {
        return top + (1.0 - (v - ymin) / (ymax - ymin)) * plot_h;
    }
};

inline void draw_axes(Canvas& cv, const Frame& f, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel) {
    cv.line(f.left, f.top, f.left, f.top + f.plot_h, "#333333");
    cv.line(f.left, f.top + f.plot_h, f.left + f.plot_w, f.top + f.plot_h, "#333333");
    cv.text(f.left + f.plot_w / 2.0, 24.0, title, 15.0, "middle");
    cv.text(f.left + f.plot_w / 2.0, f.top + f.plot_h + 42.0, xlabel, 12.0, "middle");
    cv.text(18.0, f.top - 12.0, ylabel, 12.0, "start");
    for (int i = 0; i <= 5; ++i) {
        const double v = f.ymin + (f.ymax - f.ymin) * static_cast<double>(i) / 5.0;
        const double y = f.y_px(v);
        cv.line(f.left - 4.0, y, f.left, y, "#333333");
        cv.line(f.left, y, f.left + f.plot_w, y, "#e0e0e0");
        cv.text(f.left - 8.0, y + 4.0, fmt6(v), 11.0, "end");
    }
}

inline void draw_legend(Canvas& cv, const Frame& f, const std::vector<std::string>& labels) {
    const double x = f.left + f.plot_w + 18.0;
    double y = f.top + 6.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& color = palette()[i % palette().size()];
        cv.rect(x, y - 9.0, 12.0, 12.0, color);
        cv.text(x + 18.0, y + 1.0, labels[i], 11.0);
        y += 20.0;
    }
}

}  // namespace svg

struct PlotSeries {
    std::string label;
    // Bar charts read `values` (one bar per slot); line charts read `points`.
    std::vector<double> values;
    std::vector<std::pair<double, double>> points;
};

// Grouped bar chart: one slot per entry of `slot_labels`, one bar per series
// inside each slot.
inline std::string bar_chart_svg(const std::string& title, const std::string& xlabel,
                                 const std::string& ylabel,
                                 const std::vector<std::string>& slot_labels,
                                 const std::vector<PlotSeries>& series) {
    if (series.empty() || slot_labels.empty()) throw ConfigError("plot: no rows");
    svg::Canvas cv;
    svg::Frame f;
    double vmax = 0.0;
    for (const auto& s : series) {
        if (s.values.size() != slot_labels.size()) {
            throw InternalError("plot: series length does not match slot count");
        }
        for (double v : s.values) vmax = std::max(vmax, v);
    }
    f.ymax = svg::nice_ceil(vmax);
    svg::draw_axes(cv, f, title, xlabel, ylabel);

    const double slot_w = f.plot_w / static_cast<double>(slot_labels.size());
    const double bar_w = slot_w * 0.8 / static_cast<double>(series.size());
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& color = svg::palette()[si % svg::palette().size()];
        for (std::size_t k = 0; k < series[si].values.size(); ++k) {
            const double v = series[si].values[k];
            const double x = f.left + slot_w * static_cast<double>(k) + slot_w * 0.1 +
                             bar_w * static_cast<double>(si);
            const double y = f.y_px(v);
            cv.rect(x, y, bar_w, f.top + f.plot_h - y, color);
        }
    }
    for (std::size_t k = 0; k < slot_labels.size(); ++k) {
        const double x = f.left + slot_w * (static_cast<double>(k) + 0.5);
        cv.text(x, f.top + f.plot_h + 18.0, slot_labels[k], 11.0, "middle");
    }
    std::vector<std::string> labels;
    labels.reserve(series.size());
    for (const auto& s : series) labels.push_back(s.label);
    svg::draw_legend(cv, f, labels);
    return cv.finish();
}

// Polyline chart with circular markers; x is a real axis.
inline std::string line_chart_svg(const std::string& title, const std::string& xlabel,
                                  const std::string& ylabel,
                                  const std::vector<PlotSeries>& series) {
    if (series.empty()) throw ConfigError("plot: no rows");
    svg::Canvas cv;
    svg::Frame f;
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    bool any = false;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (!any) {
                xmin = xmax = x;
                ymin = ymax = y;
                any = true;
            } else {
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
        }
    }
    if (!any) throw ConfigError("plot: no rows");
    if (xmax == xmin) {
        xmin -= 1.0;
        xmax += 1.0;
    }
    if (ymax == ymin) {
        ymin -= 1.0;
        ymax += 1.0;
    }
    const double ypad = (ymax - ymin) * 0.05;
    f.ymin = ymin - ypad;
    f.ymax = ymax + ypad;
    svg::draw_axes(cv, f, title, xlabel, ylabel);
    for (int i = 0; i <= 5; ++i) {
        const double v = xmin + (xmax - xmin) * static_cast<double>(i) / 5.0;
        const double x = f.left + (v - xmin) / (xmax - xmin) * f.plot_w;
        cv.line(x, f.top + f.plot_h, x, f.top + f.plot_h + 4.0, "#333333");
        cv.text(x, f.top + f.plot_h + 18.0, fmt6(v), 11.0, "middle");
    }
    auto x_px = [&](double v) {
        return f.left + (v - xmin) / (xmax - xmin) * f.plot_w;
    };
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& color = svg::palette()[si % svg::palette().size()];
        std::vector<std::pair<double, double>> px;
        px.reserve(series[si].points.size());
        for (const auto& [x, y] : series[si].points) {
            px.emplace_back(x_px(x), f.y_px(y));
        }
        cv.polyline(px, color);
        for (const auto& [x, y] : px) cv.circle(x, y, 3.5, color);
    }
    std::vector<std::string> labels;
    labels.reserve(series.size());
    for (const auto& s : series) labels.push_back(s.label);
    svg::draw_legend(cv, f, labels);
    return cv.finish();
}

}  // namespace noisesearch
