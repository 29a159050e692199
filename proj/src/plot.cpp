#include "coag2d/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace coag2d {

namespace {

constexpr double W = 640, H = 420, ML = 70, MR = 150, MT = 40, MB = 55;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    if (hi == lo) {
      const double d = lo == 0 ? 1.0 : 0.05 * std::abs(lo);
      lo -= d;
      hi += d;
    } else {
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string render_svg(const Plot& p) {
  auto tx = [&](double x) { return p.log_x ? std::log10(x) : x; };
  Range rx, ry;
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (p.log_x && !(s.x[i] > 0)) continue;
      rx.add(tx(s.x[i]));
      ry.add(s.y[i]);
    }
  for (double r : p.reference_y) ry.add(r);
  rx.finish();
  ry.finish();
  const double pw = W - ML - MR, ph = H - MT - MB;
  auto X = [&](double x) { return ML + (tx(x) - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto Y = [&](double y) { return MT + (ry.hi - y) / (ry.hi - ry.lo) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << g(W) << "\" height=\"" << g(H)
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << g(ML + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << esc(p.title) << "</text>\n";
  os << "<rect x=\"" << g(ML) << "\" y=\"" << g(MT) << "\" width=\"" << g(pw) << "\" height=\""
     << g(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = rx.lo + (rx.hi - rx.lo) * k / 4.0;
    const double fy = ry.lo + (ry.hi - ry.lo) * k / 4.0;
    const double px = ML + pw * k / 4.0, py = MT + ph - ph * k / 4.0;
    os << "<text x=\"" << g(px) << "\" y=\"" << g(MT + ph + 16) << "\" text-anchor=\"middle\">"
       << g(p.log_x ? std::pow(10.0, fx) : fx) << "</text>\n";
    os << "<text x=\"" << g(ML - 6) << "\" y=\"" << g(py + 4) << "\" text-anchor=\"end\">" << g(fy)
       << "</text>\n";
  }
  os << "<text x=\"" << g(ML + pw / 2) << "\" y=\"" << g(H - 12) << "\" text-anchor=\"middle\">"
     << esc(p.xlabel) << "</text>\n";
  os << "<text x=\"16\" y=\"" << g(MT + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << g(MT + ph / 2) << ")\">" << esc(p.ylabel) << "</text>\n";
  for (double r : p.reference_y)
    os << "<line x1=\"" << g(ML) << "\" y1=\"" << g(Y(r)) << "\" x2=\"" << g(ML + pw) << "\" y2=\""
       << g(Y(r)) << "\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n";
  for (std::size_t si = 0; si < p.series.size(); ++si) {
    const auto& s = p.series[si];
    const char* col = kColors[si % std::size(kColors)];
    std::string pts;
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(s.y[i]) || (p.log_x && !(s.x[i] > 0))) continue;
      pts += (pts.empty() ? "" : " ") + g(X(s.x[i])) + "," + g(Y(s.y[i]));
      os << "<circle cx=\"" << g(X(s.x[i])) << "\" cy=\"" << g(Y(s.y[i])) << "\" r=\"3\" fill=\""
         << col << "\"/>\n";
    }
    if (s.lines && n > 1)
      os << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << col << "\"/>\n";
    const double ly = MT + 14 + 18 * double(si);
    os << "<rect x=\"" << g(ML + pw + 12) << "\" y=\"" << g(ly - 9) << "\" width=\"10\" height=\"10\" fill=\""
       << col << "\"/>\n";
    os << "<text x=\"" << g(ML + pw + 28) << "\" y=\"" << g(ly) << "\">" << esc(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_svg(const HeatStrip& h) {
  const std::size_t rows = h.values.size();
  std::size_t cols = 0;
  for (const auto& r : h.values) cols = std::max(cols, r.size());
  Range rv;
  for (const auto& r : h.values)
    for (double v : r) rv.add(v);
  if (!std::isfinite(rv.lo)) rv.lo = 0, rv.hi = 1;
  if (rv.hi == rv.lo) rv.hi = rv.lo + 1;
  const double cw = 70, ch = 28, left = 110, top = 50;
  const double width = left + cw * double(std::max<std::size_t>(cols, 1)) + 30;
  const double height = top + ch * double(std::max<std::size_t>(rows, 1)) + 40;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << g(width) << "\" height=\"" << g(height)
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << g(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << esc(h.title) << "</text>\n";
  for (std::size_t c = 0; c < cols && c < h.col_labels.size(); ++c)
    os << "<text x=\"" << g(left + cw * (double(c) + 0.5)) << "\" y=\"" << g(top - 6)
       << "\" text-anchor=\"middle\">" << esc(h.col_labels[c]) << "</text>\n";
  for (std::size_t r = 0; r < rows; ++r) {
    if (r < h.row_labels.size())
      os << "<text x=\"" << g(left - 6) << "\" y=\"" << g(top + ch * (double(r) + 0.5) + 4)
         << "\" text-anchor=\"end\">" << esc(h.row_labels[r]) << "</text>\n";
    for (std::size_t c = 0; c < h.values[r].size(); ++c) {
      const double v = h.values[r][c];
      const double f = std::isfinite(v) ? (v - rv.lo) / (rv.hi - rv.lo) : 0.0;
      const int red = int(std::lround(255 * f)), blue = int(std::lround(255 * (1 - f)));
      char col[8];
      std::snprintf(col, sizeof col, "#%02x40%02x", red, blue);
      os << "<rect x=\"" << g(left + cw * double(c)) << "\" y=\"" << g(top + ch * double(r))
         << "\" width=\"" << g(cw) << "\" height=\"" << g(ch) << "\" fill=\"" << col << "\"/>\n";
      os << "<text x=\"" << g(left + cw * (double(c) + 0.5)) << "\" y=\"" << g(top + ch * (double(r) + 0.5) + 4)
         << "\" text-anchor=\"middle\" fill=\"white\">" << g(v) << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::string> emit_plots(const std::vector<NamedFigure>& figures, const std::string& dir,
                                    std::ostream& warn) {
  std::vector<std::string> written;
  std::filesystem::create_directories(dir);
  for (const auto& f : figures) {
    bool any = false;
    for (const auto& s : f.plot.series) any = any || std::min(s.x.size(), s.y.size()) > 0;
    if (!any) {
      warn << "warning: figure '" << f.file << "' has no data, skipped\n";
      continue;
    }
    const auto path = (std::filesystem::path(dir) / f.file).string();
    std::ofstream out(path, std::ios::binary);
    out << render_svg(f.plot);
    written.push_back(path);
  }
  return written;
}

}  // namespace coag2d
