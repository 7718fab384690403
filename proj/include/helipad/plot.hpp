#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace helipad {

struct LineSeries {
  std::vector<double> x;
  std::vector<double> y;  // non-finite values break the line
};

/// Standalone SVG line plot with linear axes and tick labels.
std::string svg_line_plot(const LineSeries& s, const std::string& title, const std::string& xlabel,
                          const std::string& ylabel);
void write_svg(const std::filesystem::path& path, const std::string& svg);

}  // namespace helipad
