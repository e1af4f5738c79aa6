#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fedgan::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  /// Lines connect the points; otherwise each point is a small dot.
  bool line = true;
  double dot_radius = 1.2;
};

struct Marker {
  double x = 0.0;
  double y = 0.0;
  std::string color = "#d62728";
  double radius = 5.0;
  std::string label;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<Marker> markers;
  bool log_y = false;
  /// Same scale on both axes (scatter and phase plots).
  bool equal_aspect = false;
  double width = 520.0;
  double height = 400.0;
};

/// Standalone SVG document for one plot.
std::string render_svg(const Plot& plot);
/// Panels laid out row-major in `cols` columns.
std::string render_svg_grid(const std::vector<Plot>& panels, std::size_t cols,
                            const std::string& title = {});
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fedgan::cli
