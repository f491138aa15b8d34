#ifndef DROPBN_SVGPLOT_HPP_
#define DROPBN_SVGPLOT_HPP_

#include <string>
#include <vector>

namespace dropbn {

// Single line series for the SVG chart writers.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Line chart with axes, ticks and a legend.
void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series);

// Stacked histogram rows, front rows latest (drop-probability evolution).
void write_ridgeline(const std::string& path, const std::string& title,
                     const std::vector<std::vector<double>>& histograms,
                     const std::vector<std::string>& row_labels);

}  // namespace dropbn

#endif  // DROPBN_SVGPLOT_HPP_
