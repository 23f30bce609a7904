#include "tankfdi/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "tankfdi/common.hpp"

namespace tankfdi::svg {

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

constexpr double kLogFloor = 1e-12;

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
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
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

}  // namespace

std::string render(const Chart& chart) {
  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = chart.width - left - right;
  const double ph = chart.height - top - bottom;

  auto ytrans = [&](double v) { return chart.log_y ? std::log10(std::max(v, kLogFloor)) : v; };

  Range xr, yr;
  for (const auto& s : chart.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(ytrans(v));
  }
  xr.finish();
  yr.finish();
  if (chart.log_y) {
    yr.lo = std::floor(yr.lo);
    yr.hi = std::ceil(yr.hi);
    if (yr.hi <= yr.lo) yr.hi = yr.lo + 1;
  } else {
    const double pad = 0.05 * (yr.hi - yr.lo);
    yr.lo -= pad;
    yr.hi += pad;
  }

  auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return top + (1.0 - (ytrans(y) - yr.lo) / (yr.hi - yr.lo)) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart.width << "\" height=\""
     << chart.height << "\" viewBox=\"0 0 " << chart.width << ' ' << chart.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << chart.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(chart.title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#333\"/>\n";

  // Ticks.
  for (int i = 0; i <= 5; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 5.0;
    const double x = px(xv);
    os << "<line x1=\"" << x << "\" y1=\"" << top + ph << "\" x2=\"" << x << "\" y2=\""
       << top + ph + 5 << "\" stroke=\"#333\"/>";
    os << "<text x=\"" << x << "\" y=\"" << top + ph + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << short_number(xv) << "</text>\n";
  }
  const int yticks = chart.log_y ? static_cast<int>(yr.hi - yr.lo) : 5;
  const int ystep = std::max(1, yticks / 8);
  for (int i = 0; i <= yticks; i += chart.log_y ? ystep : 1) {
    const double t = yr.lo + (yr.hi - yr.lo) * i / yticks;
    const double y = top + (1.0 - static_cast<double>(i) / yticks) * ph;
    const std::string label = chart.log_y ? "1e" + std::to_string(static_cast<int>(std::lround(t)))
                                          : short_number(t);
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << y << "\" x2=\"" << left << "\" y2=\"" << y
       << "\" stroke=\"#333\"/>";
    os << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << label << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << chart.height - 10
     << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(chart.x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
     << "transform=\"rotate(-90 16 " << top + ph / 2 << ")\">" << escape(chart.y_label)
     << "</text>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const Series& s = chart.series[k];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    const std::size_t stride = std::max<std::size_t>(1, (n + chart.max_points - 1) / chart.max_points);
    os << "<polyline data-series=\"" << escape(s.name) << "\" fill=\"none\" stroke=\"" << s.color
       << "\" stroke-width=\"1.4\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
       << " points=\"";
    for (std::size_t i = 0; i < n; i += stride) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      os << short_number(px(s.x[i])) << ',' << short_number(py(s.y[i])) << ' ';
    }
    if (n > 0 && (n - 1) % stride != 0 && std::isfinite(s.y[n - 1])) {
      os << short_number(px(s.x[n - 1])) << ',' << short_number(py(s.y[n - 1]));
    }
    os << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 30
       << "\" y2=\"" << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
       << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>";
    os << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">"
       << escape(s.name) << "</text>\n";
  }

  for (const Marker& m : chart.markers) {
    const double x = px(m.x);
    os << "<line";
    if (!m.id.empty()) os << " id=\"" << escape(m.id) << '"';
    os << " data-x=\"" << number(m.x) << "\" x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x
       << "\" y2=\"" << top + ph << "\" stroke=\"#d62728\" stroke-dasharray=\"3 3\"/>";
    os << "<text x=\"" << x + 4 << "\" y=\"" << top + 12 << "\" font-size=\"11\" fill=\"#d62728\">"
       << escape(m.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write(const Chart& chart, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << render(chart);
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace tankfdi::svg
