#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace concurrence {

struct LineSeries {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
};

/// Standalone SVG line plot (one polyline per series, axes, tick labels,
/// legend). Throws DataError when every series is empty.
void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<LineSeries>& series);

/// Standalone SVG histogram of `values` with `bins` equal-width bins.
void write_histogram(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::vector<double>& values, int bins);

}  // namespace concurrence
