#include "fairdd/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fairdd {

namespace {

constexpr double kWidth = 640.0, kHeight = 400.0;
constexpr double kLeft = 70.0, kRight = 24.0, kTop = 46.0, kBottom = 56.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

struct Range {
  double lo = 0.0, hi = 1.0;
  double span() const { return hi - lo; }
};

Range padded_range(double lo, double hi) {
  if (!(std::isfinite(lo) && std::isfinite(hi)))
    throw std::invalid_argument("plot: non-finite data range");
  if (lo > hi) std::swap(lo, hi);
  if (lo == hi) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    return {lo - pad, hi + pad};
  }
  const double pad = (hi - lo) * 0.06;
  return {lo - pad, hi + pad};
}

double map_x(double v, const Range& r) { return kLeft + (v - r.lo) / r.span() * (kWidth - kLeft - kRight); }
double map_y(double v, const Range& r) { return kHeight - kBottom - (v - r.lo) / r.span() * (kHeight - kTop - kBottom); }

void open_svg(std::ofstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth << " " << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";
}

void draw_axes(std::ofstream& out, const Range& xr, const Range& yr, const std::string& x_label,
               const std::string& y_label, bool numeric_x) {
  const double x0 = kLeft, x1 = kWidth - kRight;
  const double y0 = kHeight - kBottom, y1 = kTop;
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
      << "\" stroke=\"black\"/>\n";
  constexpr int kTicks = 5;
  for (int t = 0; t <= kTicks; ++t) {
    const double fy = yr.lo + yr.span() * t / kTicks;
    const double py = map_y(fy, yr);
    out << "<line x1=\"" << x0 - 4 << "\" y1=\"" << py << "\" x2=\"" << x0 << "\" y2=\"" << py
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << x0 << "\" y1=\"" << py << "\" x2=\"" << x1 << "\" y2=\"" << py
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << x0 - 8 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << num(fy)
        << "</text>\n";
    if (numeric_x) {
      const double fx = xr.lo + xr.span() * t / kTicks;
      const double px = map_x(fx, xr);
      out << "<line x1=\"" << px << "\" y1=\"" << y0 << "\" x2=\"" << px << "\" y2=\"" << y0 + 4
          << "\" stroke=\"black\"/>\n";
      out << "<text x=\"" << px << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">" << num(fx)
          << "</text>\n";
    }
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n";
  out << "<text x=\"18\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (y0 + y1) / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
}

}  // namespace

void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series) {
  if (series.empty()) throw std::invalid_argument("plot: no series to draw");
  double xlo = 0, xhi = 0, ylo = 0, yhi = 0;
  bool first = true;
  for (const PlotSeries& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("plot: series x/y length mismatch");
    if (s.x.empty()) throw std::invalid_argument("plot: empty series");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        xlo = xhi = s.x[i];
        ylo = yhi = s.y[i];
        first = false;
      }
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  const Range xr = padded_range(xlo, xhi);
  const Range yr = padded_range(ylo, yhi);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("plot: cannot write " + path);
  open_svg(out, title);
  draw_axes(out, xr, yr, x_label, y_label, true);

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % kPaletteSize];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[k].x.size(); ++i)
      out << map_x(series[k].x[i], xr) << "," << map_y(series[k].y[i], yr) << " ";
    out << "\"/>\n";
    for (std::size_t i = 0; i < series[k].x.size(); ++i)
      out << "<circle cx=\"" << map_x(series[k].x[i], xr) << "\" cy=\""
          << map_y(series[k].y[i], yr) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    // legend entry
    const double ly = kTop + 16.0 * static_cast<double>(k);
    out << "<line x1=\"" << kWidth - kRight - 130 << "\" y1=\"" << ly << "\" x2=\""
        << kWidth - kRight - 110 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kWidth - kRight - 104 << "\" y=\"" << ly + 4 << "\">"
        << xml_escape(series[k].label) << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("plot: write failed for " + path);
}

void write_bar_chart_svg(const std::string& path, const std::string& title,
                         const std::string& y_label, const std::vector<std::string>& labels,
                         const std::vector<double>& values) {
  if (labels.empty() || labels.size() != values.size())
    throw std::invalid_argument("plot: bar labels/values mismatch");
  double ylo = std::min(0.0, *std::min_element(values.begin(), values.end()));
  double yhi = std::max(0.0, *std::max_element(values.begin(), values.end()));
  const Range yr = padded_range(ylo, yhi);
  const Range xr{0.0, static_cast<double>(labels.size())};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("plot: cannot write " + path);
  open_svg(out, title);
  draw_axes(out, xr, yr, "", y_label, false);

  const double zero_y = map_y(0.0, yr);
  out << "<line x1=\"" << kLeft << "\" y1=\"" << zero_y << "\" x2=\"" << kWidth - kRight
      << "\" y2=\"" << zero_y << "\" stroke=\"#888888\"/>\n";
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double w = slot * 0.6;
    const double vy = map_y(values[i], yr);
    const double top = std::min(vy, zero_y);
    const double h = std::abs(vy - zero_y);
    const char* color = values[i] >= 0.0 ? kPalette[0] : kPalette[1];
    out << "<rect x=\"" << cx - w / 2 << "\" y=\"" << top << "\" width=\"" << w << "\" height=\""
        << h << "\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"" << cx << "\" y=\"" << kHeight - kBottom + 18
        << "\" text-anchor=\"middle\">" << xml_escape(labels[i]) << "</text>\n";
    out << "<text x=\"" << cx << "\" y=\"" << (values[i] >= 0.0 ? top - 5 : top + h + 14)
        << "\" text-anchor=\"middle\">" << num(values[i]) << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("plot: write failed for " + path);
}

}  // namespace fairdd
