#pragma once
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "gsinfonce/error.hpp"

namespace gsinfonce {

// All emitted reals: 6 decimal places, '.' separator, locale independent.
inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !out.write(content.data(), static_cast<std::streamsize>(content.size()))) {
        throw GsError(ErrorKind::IoError, "cannot write file: " + path);
    }
}

// ---- minimal SVG line chart -------------------------------------------
//
// One polyline per series over shared axes, with tick labels and a legend.
// CSV stays the canonical output; this is the visual convenience.

struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> points; // (x, y)
};

namespace detail {

inline std::string svg_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline const char* svg_color(std::size_t index) {
    static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                              "#9467bd", "#ff7f0e", "#8c564b"};
    return palette[index % 6];
}

} // namespace detail

inline std::string render_line_chart_svg(const std::vector<SvgSeries>& series,
                                         const std::string& x_label,
                                         const std::string& y_label,
                                         const std::string& title) {
    if (series.empty() || series[0].points.empty()) {
        throw GsError(ErrorKind::InvalidConfig, "nothing to chart");
    }
    double xmin = series[0].points[0].first, xmax = xmin;
    double ymin = series[0].points[0].second, ymax = ymin;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    const double pad_y = 0.05 * (ymax - ymin);
    ymin -= pad_y;
    ymax += pad_y;

    const double width = 800, height = 500;
    const double left = 70, right = 780, top = 40, bottom = 450;
    const auto sx = [&](double x) {
        return left + (x - xmin) / (xmax - xmin) * (right - left);
    };
    const auto sy = [&](double y) {
        return bottom - (y - ymin) / (ymax - ymin) * (bottom - top);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           detail::svg_num(width) + "\" height=\"" + detail::svg_num(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + title +
           "</text>\n";
    // axes
    svg += "<line x1=\"" + detail::svg_num(left) + "\" y1=\"" + detail::svg_num(bottom) +
           "\" x2=\"" + detail::svg_num(right) + "\" y2=\"" + detail::svg_num(bottom) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + detail::svg_num(left) + "\" y1=\"" + detail::svg_num(top) +
           "\" x2=\"" + detail::svg_num(left) + "\" y2=\"" + detail::svg_num(bottom) +
           "\" stroke=\"black\"/>\n";
    // ticks
    constexpr int ticks = 5;
    for (int t = 0; t <= ticks; ++t) {
        const double fx = xmin + (xmax - xmin) * t / ticks;
        const double fy = ymin + (ymax - ymin) * t / ticks;
        svg += "<line x1=\"" + detail::svg_num(sx(fx)) + "\" y1=\"" +
               detail::svg_num(bottom) + "\" x2=\"" + detail::svg_num(sx(fx)) +
               "\" y2=\"" + detail::svg_num(bottom + 5) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + detail::svg_num(sx(fx)) + "\" y=\"" +
               detail::svg_num(bottom + 20) + "\" text-anchor=\"middle\" font-size=\"11\">" +
               detail::svg_num(fx) + "</text>\n";
        svg += "<line x1=\"" + detail::svg_num(left - 5) + "\" y1=\"" +
               detail::svg_num(sy(fy)) + "\" x2=\"" + detail::svg_num(left) + "\" y2=\"" +
               detail::svg_num(sy(fy)) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + detail::svg_num(left - 8) + "\" y=\"" +
               detail::svg_num(sy(fy) + 4) + "\" text-anchor=\"end\" font-size=\"11\">" +
               detail::svg_num(fy) + "</text>\n";
    }
    svg += "<text x=\"" + detail::svg_num((left + right) / 2) + "\" y=\"" +
           detail::svg_num(height - 10) + "\" text-anchor=\"middle\" font-size=\"13\">" +
           x_label + "</text>\n";
    svg += "<text x=\"18\" y=\"" + detail::svg_num((top + bottom) / 2) +
           "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " +
           detail::svg_num((top + bottom) / 2) + ")\">" + y_label + "</text>\n";
    // series
    for (std::size_t s = 0; s < series.size(); ++s) {
        std::string pts;
        for (const auto& [x, y] : series[s].points) {
            pts += detail::svg_num(sx(x)) + "," + detail::svg_num(sy(y)) + " ";
        }
        svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" +
               detail::svg_color(s) + "\" stroke-width=\"1.5\"/>\n";
        const double ly = top + 18.0 * static_cast<double>(s);
        svg += "<line x1=\"" + detail::svg_num(right - 120) + "\" y1=\"" +
               detail::svg_num(ly) + "\" x2=\"" + detail::svg_num(right - 100) +
               "\" y2=\"" + detail::svg_num(ly) + "\" stroke=\"" + detail::svg_color(s) +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + detail::svg_num(right - 94) + "\" y=\"" +
               detail::svg_num(ly + 4) + "\" font-size=\"12\">" + series[s].label +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace gsinfonce
