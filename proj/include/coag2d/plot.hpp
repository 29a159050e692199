#pragma once

// Self-contained SVG line/scatter plots and heat strips. Output bytes depend
// only on the input data.

#include <iosfwd>
#include <string>
#include <vector>

namespace coag2d {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool lines = true;
};

struct Plot {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Series> series;
  /// Horizontal reference lines (e.g. an asymptote).
  std::vector<double> reference_y;
  bool log_x = false;
};

struct HeatStrip {
  std::string title;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  /// values[row][col]
  std::vector<std::vector<double>> values;
};

std::string render_svg(const Plot& p);
std::string render_svg(const HeatStrip& h);

struct NamedFigure {
  std::string file;  // relative to the output directory
  Plot plot;
};

/// Writes each figure into `dir`; figures without data points are skipped with a
/// warning on `warn`. Returns the paths written.
std::vector<std::string> emit_plots(const std::vector<NamedFigure>& figures, const std::string& dir,
                                    std::ostream& warn);

}  // namespace coag2d
