#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "etdgrid/series.hpp"
#include "etdgrid/trainer.hpp"

namespace etdgrid {

namespace detail {

// Fixed-precision coordinates keep the file small and byte-stable.
inline std::string svg_coord(double v) {
    const double r = std::round(v * 100.0) / 100.0;
    std::string s = format_double(r);
    return s;
}

inline void svg_polyline(std::string& out, const std::vector<double>& ys, double y_min, double y_max,
                         double x0, double x1, double plot_y0, double plot_y1, const char* color) {
    if (ys.size() < 2) return;
    const double span = y_max > y_min ? y_max - y_min : 1.0;
    out += "  <polyline fill=\"none\" stroke=\"";
    out += color;
    out += "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double fx = static_cast<double>(i) / static_cast<double>(ys.size() - 1);
        const double fy = (ys[i] - y_min) / span;
        if (i) out += ' ';
        out += svg_coord(x0 + fx * (x1 - x0));
        out += ',';
        out += svg_coord(plot_y1 - fy * (plot_y1 - plot_y0));
    }
    out += "\"/>\n";
}

} // namespace detail

// Static line chart of a simulated window: state of charge, price, and
// unmet power, each min-max scaled onto a shared canvas with its range in
// the legend. Self-contained SVG, no external assets.
inline void save_week_svg(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
    if (trace.empty()) throw std::invalid_argument("svg: empty trace");

    std::vector<double> soc, price, p_u;
    soc.reserve(trace.size());
    price.reserve(trace.size());
    p_u.reserve(trace.size());
    for (const auto& r : trace) {
        soc.push_back(r.soc_kwh);
        price.push_back(r.price);
        p_u.push_back(r.p_u);
    }
    auto range = [](const std::vector<double>& v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return std::pair<double, double>(*lo, *hi);
    };
    const auto [soc_lo, soc_hi] = range(soc);
    const auto [pr_lo, pr_hi] = range(price);
    const auto [pu_lo, pu_hi] = range(p_u);

    const double width = 960, height = 420;
    const double x0 = 50, x1 = width - 20, y0 = 40, y1 = height - 30;

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" height=\"420\" "
           "viewBox=\"0 0 960 420\">\n";
    out += "  <rect width=\"960\" height=\"420\" fill=\"white\"/>\n";
    out += "  <rect x=\"" + detail::svg_coord(x0) + "\" y=\"" + detail::svg_coord(y0) + "\" width=\"" +
           detail::svg_coord(x1 - x0) + "\" height=\"" + detail::svg_coord(y1 - y0) +
           "\" fill=\"none\" stroke=\"#cccccc\"/>\n";

    detail::svg_polyline(out, soc, soc_lo, soc_hi, x0, x1, y0, y1, "#1f77b4");
    detail::svg_polyline(out, price, pr_lo, pr_hi, x0, x1, y0, y1, "#d62728");
    detail::svg_polyline(out, p_u, pu_lo, pu_hi, x0, x1, y0, y1, "#2ca02c");

    auto legend = [&](double x, const char* color, const std::string& label) {
        out += "  <rect x=\"" + detail::svg_coord(x) + "\" y=\"14\" width=\"12\" height=\"12\" fill=\"";
        out += color;
        out += "\"/>\n  <text x=\"" + detail::svg_coord(x + 17) +
               "\" y=\"25\" font-family=\"sans-serif\" font-size=\"12\">" + label + "</text>\n";
    };
    legend(50, "#1f77b4",
           "soc kWh [" + detail::svg_coord(soc_lo) + ", " + detail::svg_coord(soc_hi) + "]");
    legend(330, "#d62728",
           "price/kWh [" + detail::svg_coord(pr_lo) + ", " + detail::svg_coord(pr_hi) + "]");
    legend(610, "#2ca02c",
           "p_u kW [" + detail::svg_coord(pu_lo) + ", " + detail::svg_coord(pu_hi) + "]");

    out += "  <text x=\"" + detail::svg_coord((x0 + x1) / 2) + "\" y=\"" +
           detail::svg_coord(height - 8) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">hour " +
           std::to_string(trace.front().hour) + " to " + std::to_string(trace.back().hour) +
           " (each series min-max scaled)</text>\n";
    out += "</svg>\n";

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("svg: cannot write: " + path.string());
    file << out;
    if (!file) throw std::runtime_error("svg: write failed: " + path.string());
}

} // namespace etdgrid
