#include "dropbn/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dropbn/errors.hpp"

namespace dropbn {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

std::ofstream open_svg(const std::string& path) {
  std::error_code ec;
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIo, "cannot write svg: " + path);
  return out;
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series) {
  require(!series.empty(), ErrorCode::kInvalidArgument,
          "line chart needs at least one series");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (double v : s.x) {
      xmin = std::min(xmin, v);
      xmax = std::max(xmax, v);
    }
    for (double v : s.y) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double x) {
    return kMarginLeft + (x - xmin) / (xmax - xmin) * plot_w;
  };
  auto sy = [&](double y) {
    return kMarginTop + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h;
  };

  std::ofstream out = open_svg(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth
      << "' height='" << kHeight << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << kWidth / 2 << "' y='22' text-anchor='middle' "
      << "font-size='15' font-family='sans-serif'>" << title << "</text>\n";

  // axes and ticks
  out << "<rect x='" << kMarginLeft << "' y='" << kMarginTop << "' width='"
      << plot_w << "' height='" << plot_h
      << "' fill='none' stroke='#333'/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    const double yv = ymin + (ymax - ymin) * i / 5.0;
    out << "<line x1='" << sx(xv) << "' y1='" << kMarginTop + plot_h
        << "' x2='" << sx(xv) << "' y2='" << kMarginTop + plot_h + 5
        << "' stroke='#333'/>\n"
        << "<text x='" << sx(xv) << "' y='" << kMarginTop + plot_h + 20
        << "' text-anchor='middle' font-size='11' "
        << "font-family='sans-serif'>" << fmt(xv) << "</text>\n"
        << "<line x1='" << kMarginLeft - 5 << "' y1='" << sy(yv) << "' x2='"
        << kMarginLeft << "' y2='" << sy(yv) << "' stroke='#333'/>\n"
        << "<text x='" << kMarginLeft - 9 << "' y='" << sy(yv) + 4
        << "' text-anchor='end' font-size='11' font-family='sans-serif'>"
        << fmt(yv) << "</text>\n";
  }
  out << "<text x='" << kMarginLeft + plot_w / 2 << "' y='" << kHeight - 10
      << "' text-anchor='middle' font-size='12' font-family='sans-serif'>"
      << x_label << "</text>\n"
      << "<text x='16' y='" << kMarginTop + plot_h / 2
      << "' text-anchor='middle' font-size='12' font-family='sans-serif' "
      << "transform='rotate(-90 16 " << kMarginTop + plot_h / 2 << ")'>"
      << y_label << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % 8];
    out << "<polyline fill='none' stroke='" << color
        << "' stroke-width='1.5' points='";
    for (size_t i = 0; i < s.x.size(); ++i)
      out << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
    out << "'/>\n";
    out << "<rect x='" << kMarginLeft + 10 << "' y='"
        << kMarginTop + 8 + 16 * si << "' width='12' height='3' fill='"
        << color << "'/>\n"
        << "<text x='" << kMarginLeft + 27 << "' y='"
        << kMarginTop + 14 + 16 * si
        << "' font-size='11' font-family='sans-serif'>" << s.label
        << "</text>\n";
  }
  out << "</svg>\n";
}

void write_ridgeline(const std::string& path, const std::string& title,
                     const std::vector<std::vector<double>>& histograms,
                     const std::vector<std::string>& row_labels) {
  require(!histograms.empty(), ErrorCode::kInvalidArgument,
          "ridgeline needs rows");
  require(histograms.size() == row_labels.size(), ErrorCode::kInvalidArgument,
          "ridgeline label count mismatch");
  const int rows = static_cast<int>(histograms.size());
  const int bins = static_cast<int>(histograms[0].size());
  double peak = 1e-12;
  for (const auto& h : histograms)
    for (double v : h) peak = std::max(peak, v);

  const double row_h = 34.0;
  const double overlap = 20.0;
  const double height = kMarginTop + rows * row_h + kMarginBottom;
  const double plot_w = kWidth - kMarginLeft - kMarginRight;

  std::ofstream out = open_svg(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth
      << "' height='" << height << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << kWidth / 2 << "' y='22' text-anchor='middle' "
      << "font-size='15' font-family='sans-serif'>" << title << "</text>\n";

  for (int r = 0; r < rows; ++r) {
    const double base = kMarginTop + (r + 1) * row_h;
    const char* color = kPalette[r % 8];
    out << "<polygon fill='" << color << "' fill-opacity='0.55' stroke='"
        << color << "' points='";
    out << kMarginLeft << "," << base << " ";
    for (int b = 0; b < bins; ++b) {
      const double x = kMarginLeft + plot_w * (b + 0.5) / bins;
      const double y =
          base - histograms[r][b] / peak * (row_h + overlap);
      out << x << "," << y << " ";
    }
    out << kMarginLeft + plot_w << "," << base << "'/>\n";
    out << "<text x='" << kMarginLeft - 6 << "' y='" << base
        << "' text-anchor='end' font-size='10' font-family='sans-serif'>"
        << row_labels[r] << "</text>\n";
  }
  out << "<text x='" << kMarginLeft << "' y='" << height - 18
      << "' font-size='11' font-family='sans-serif'>0</text>\n"
      << "<text x='" << kMarginLeft + plot_w << "' y='" << height - 18
      << "' text-anchor='end' font-size='11' font-family='sans-serif'>1"
      << "</text>\n"
      << "</svg>\n";
}

}  // namespace dropbn
