#pragma once

#include <string>
#include <vector>

namespace lipsysid {

// Minimal static line plot: axes, tick labels, and one polyline per series.
// Deliberately dependency-free.
struct SvgSeries {
    std::string label;
    std::string color = "#1f77b4";
    std::vector<double> x;
    std::vector<double> y;
};

struct SvgPlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<SvgSeries> series;
};

void write_svg_plot(const SvgPlot& plot, const std::string& path);

}  // namespace lipsysid
