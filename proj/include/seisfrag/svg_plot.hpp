#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace seisfrag::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_x = false;
  bool log_y = false;
};

/// Polyline chart with a legend. Non-finite points (and non-positive ones on
/// log axes) are skipped.
void write_line_plot(const std::filesystem::path& path, const Axes& axes,
                     const std::vector<Series>& series);

struct BoxGroup {
  std::string label;   ///< tick label, e.g. the sample size
  std::string series;  ///< legend entry, e.g. the model name
  std::vector<double> values;
};

/// Box plot (quartiles, whiskers at min/max) of each group, in order.
void write_box_plot(const std::filesystem::path& path, const Axes& axes,
                    const std::vector<BoxGroup>& groups);

}  // namespace seisfrag::plot
