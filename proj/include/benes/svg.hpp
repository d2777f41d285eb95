#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace benes {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Minimal standalone SVG line chart with labelled axes and a legend.
void write_line_plot(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<PlotSeries>& series, bool log_y = false);

}  // namespace benes
