#include "lipsysid/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lipsysid {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

}  // namespace

void write_svg_plot(const SvgPlot& plot, const std::string& path) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const SvgSeries& s : plot.series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            double yv = s.y[i];
            if (plot.log_y) {
                if (yv <= 0.0) continue;
                yv = std::log10(yv);
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, yv);
            ymax = std::max(ymax, yv);
        }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) {
        if (plot.log_y) y = std::log10(std::max(y, 1e-300));
        return kTop + ph - (y - ymin) / (ymax - ymin) * ph;
    };

    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write svg: " + path);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
       << plot.title << "</text>\n";

    // axes
    os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw
       << "\" y2=\"" << kTop + ph << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
       << kTop + ph << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 5.0;
        const double fy = ymin + (ymax - ymin) * i / 5.0;
        os << "<text x=\"" << sx(fx) << "\" y=\"" << kTop + ph + 16
           << "\" text-anchor=\"middle\">" << fmt(fx) << "</text>\n";
        const std::string ylab = plot.log_y ? ("1e" + fmt(fy)) : fmt(fy);
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + ph - ph * i / 5.0 + 4
           << "\" text-anchor=\"end\">" << ylab << "</text>\n";
    }
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10
       << "\" text-anchor=\"middle\">" << plot.x_label << "</text>\n";
    os << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << kTop + ph / 2 << ")\">" << plot.y_label << "</text>\n";

    double legend_y = kTop + 8;
    for (const SvgSeries& s : plot.series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (plot.log_y && s.y[i] <= 0.0) continue;
            os << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
        }
        os << "\"/>\n";
        if (!s.label.empty()) {
            os << "<line x1=\"" << kLeft + pw - 120 << "\" y1=\"" << legend_y << "\" x2=\""
               << kLeft + pw - 100 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
               << "\" stroke-width=\"1.5\"/>\n";
            os << "<text x=\"" << kLeft + pw - 94 << "\" y=\"" << legend_y + 4 << "\">" << s.label
               << "</text>\n";
            legend_y += 16;
        }
    }
    os << "</svg>\n";
}

}  // namespace lipsysid
