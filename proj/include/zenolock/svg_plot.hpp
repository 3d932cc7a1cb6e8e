// svg_plot.hpp - minimal line plots for eyeballing CSV output.

#pragma once

#include <string>
#include <vector>

namespace zenolock {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
    int width = 640;
    int height = 400;
};

/// Non-finite points are skipped. Output depends only on the spec.
std::string render_svg(const PlotSpec& spec);

}  // namespace zenolock
