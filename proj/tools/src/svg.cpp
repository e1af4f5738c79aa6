#include "fedgan_cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fedgan::cli {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
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
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      const double pad = std::max(1e-6, std::abs(lo) * 0.05);
      lo -= pad;
      hi += pad;
    }
    const double pad = 0.04 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

/// Draws one plot into a group at (ox, oy).
void draw(std::ostringstream& os, const Plot& p, double ox, double oy) {
  const double ml = 62, mr = 14, mt = 28, mb = 44;
  const double pw = p.width - ml - mr, ph = p.height - mt - mb;
  auto ty = [&](double v) { return p.log_y ? (v > 0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN()) : v; };
  Range rx, ry;
  for (const auto& s : p.series) {
    for (double v : s.x) rx.add(v);
    for (double v : s.y) ry.add(ty(v));
  }
  for (const auto& m : p.markers) {
    rx.add(m.x);
    ry.add(ty(m.y));
  }
  rx.finish();
  ry.finish();
  double sx = pw / (rx.hi - rx.lo), sy = ph / (ry.hi - ry.lo);
  if (p.equal_aspect) {
    const double s = std::min(sx, sy);
    const double cx = 0.5 * (rx.lo + rx.hi), cy = 0.5 * (ry.lo + ry.hi);
    sx = sy = s;
    rx.lo = cx - 0.5 * pw / s;
    rx.hi = cx + 0.5 * pw / s;
    ry.lo = cy - 0.5 * ph / s;
    ry.hi = cy + 0.5 * ph / s;
  }
  auto X = [&](double v) { return ox + ml + (v - rx.lo) * sx; };
  auto Y = [&](double v) { return oy + mt + ph - (ty(v) - ry.lo) * sy; };

  os << "<rect x=\"" << num(ox + ml) << "\" y=\"" << num(oy + mt) << "\" width=\"" << num(pw)
     << "\" height=\"" << num(ph) << "\" fill=\"white\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = rx.lo + (rx.hi - rx.lo) * i / 4.0;
    const double fy = ry.lo + (ry.hi - ry.lo) * i / 4.0;
    const double px = ox + ml + pw * i / 4.0, py = oy + mt + ph - ph * i / 4.0;
    os << "<line x1=\"" << num(px) << "\" y1=\"" << num(oy + mt + ph) << "\" x2=\"" << num(px) << "\" y2=\""
       << num(oy + mt + ph + 4) << "\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << num(px) << "\" y=\"" << num(oy + mt + ph + 16)
       << "\" font-size=\"10\" text-anchor=\"middle\">" << tick_label(fx) << "</text>\n";
    os << "<line x1=\"" << num(ox + ml - 4) << "\" y1=\"" << num(py) << "\" x2=\"" << num(ox + ml) << "\" y2=\""
       << num(py) << "\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << num(ox + ml - 6) << "\" y=\"" << num(py + 3)
       << "\" font-size=\"10\" text-anchor=\"end\">" << tick_label(p.log_y ? std::pow(10.0, fy) : fy)
       << "</text>\n";
  }
  os << "<text x=\"" << num(ox + ml + pw / 2) << "\" y=\"" << num(oy + 18)
     << "\" font-size=\"13\" text-anchor=\"middle\">" << escape(p.title) << "</text>\n";
  os << "<text x=\"" << num(ox + ml + pw / 2) << "\" y=\"" << num(oy + p.height - 8)
     << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(p.x_label) << "</text>\n";
  os << "<text transform=\"translate(" << num(ox + 14) << "," << num(oy + mt + ph / 2)
     << ") rotate(-90)\" font-size=\"11\" text-anchor=\"middle\">" << escape(p.y_label) << "</text>\n";


  for (const auto& s : p.series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.line) {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.4\" points=\"";
      for (std::size_t i = 0; i < n; ++i) {
        const double yv = Y(s.y[i]);
        if (!std::isfinite(yv) || !std::isfinite(s.x[i])) continue;
        os << num(X(s.x[i])) << ',' << num(yv) << ' ';
      }
      os << "\"/>\n";
    } else {
      os << "<g fill=\"" << s.color << "\" fill-opacity=\"0.55\">";
      for (std::size_t i = 0; i < n; ++i) {
        const double yv = Y(s.y[i]);
        if (!std::isfinite(yv) || !std::isfinite(s.x[i])) continue;
        os << "<circle cx=\"" << num(X(s.x[i])) << "\" cy=\"" << num(yv) << "\" r=\"" << num(s.dot_radius) << "\"/>";
      }
      os << "</g>\n";
    }
  }
  for (const auto& m : p.markers) {
    os << "<circle cx=\"" << num(X(m.x)) << "\" cy=\"" << num(Y(m.y)) << "\" r=\"" << num(m.radius)
       << "\" fill=\"" << m.color << "\"><title>" << escape(m.label) << "</title></circle>\n";
  }
  os << "</g>\n";

  double ly = oy + mt + 12;
  for (const auto& s : p.series) {
    if (s.label.empty()) continue;
    os << "<rect x=\"" << num(ox + ml + pw - 118) << "\" y=\"" << num(ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
       << s.color << "\"/><text x=\"" << num(ox + ml + pw - 104) << "\" y=\"" << num(ly + 1)
       << "\" font-size=\"10\">" << escape(s.label) << "</text>\n";
    ly += 14;
  }
  for (const auto& m : p.markers) {
    if (m.label.empty()) continue;
    os << "<circle cx=\"" << num(ox + ml + pw - 113) << "\" cy=\"" << num(ly - 3) << "\" r=\"4\" fill=\"" << m.color
       << "\"/><text x=\"" << num(ox + ml + pw - 104) << "\" y=\"" << num(ly + 1) << "\" font-size=\"10\">"
       << escape(m.label) << "</text>\n";
    ly += 14;
  }
}

std::string header(double w, double h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) +
         "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " + num(h) +
         "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

std::string render_svg(const Plot& plot) {
  std::ostringstream os;
  os << header(plot.width, plot.height);
  draw(os, plot, 0.0, 0.0);
  os << "</svg>\n";
  return os.str();
}

std::string render_svg_grid(const std::vector<Plot>& panels, std::size_t cols, const std::string& title) {
  if (cols == 0) throw std::invalid_argument("render_svg_grid: cols must be positive");
  double cw = 0, ch = 0;
  for (const auto& p : panels) {
    cw = std::max(cw, p.width);
    ch = std::max(ch, p.height);
  }
  const std::size_t rows = (panels.size() + cols - 1) / cols;
  const double top = title.empty() ? 0.0 : 30.0;
  std::ostringstream os;
  os << header(cw * static_cast<double>(cols), top + ch * static_cast<double>(rows));
  if (!title.empty()) {
    os << "<text x=\"" << num(cw * static_cast<double>(cols) / 2) << "\" y=\"20\" font-size=\"15\" text-anchor=\"middle\">"
       << escape(title) << "</text>\n";
  }
  for (std::size_t i = 0; i < panels.size(); ++i) {
    draw(os, panels[i], cw * static_cast<double>(i % cols), top + ch * static_cast<double>(i / cols));
  }
  os << "</svg>\n";
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace fedgan::cli
