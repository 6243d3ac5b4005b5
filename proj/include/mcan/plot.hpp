#pragma once

// Minimal SVG overlay of planar trajectories with a legend and meter axes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "mcan/error.hpp"
#include "mcan/metrics.hpp"

namespace mcan {

struct NamedTrajectory {
  std::string name;
  std::vector<Point2> points;
};

struct PlotStyle {
  std::string color;
  std::string dash;
};

inline PlotStyle plot_style(std::size_t i) {
  static const std::array<const char*, 8> colors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  static const std::array<const char*, 3> dashes{"", "6,3", "2,2"};
  return {colors[i % colors.size()], dashes[(i / colors.size()) % dashes.size()]};
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
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

inline std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

/// 1, 2 or 5 times a power of ten, giving roughly `target` ticks over span.
inline double nice_step(double span, int target = 6) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace detail

/// Writes all trajectories on shared, equal-aspect axes in meters.
inline void write_svg(std::ostream& out, const std::vector<NamedTrajectory>& tracks,
                      const std::string& title = {}) {
  if (tracks.empty()) fail(ErrorKind::input, "nothing to plot");
  double lo_x = std::numeric_limits<double>::infinity();
  double lo_y = lo_x;
  double hi_x = -lo_x;
  double hi_y = -lo_x;
  for (const auto& t : tracks) {
    if (t.points.empty()) fail(ErrorKind::input, "trajectory '" + t.name + "' is empty");
    for (const auto& p : t.points) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) {
        fail(ErrorKind::input, "trajectory '" + t.name + "' has non-finite points");
      }
      lo_x = std::min(lo_x, p[0]);
      hi_x = std::max(hi_x, p[0]);
      lo_y = std::min(lo_y, p[1]);
      hi_y = std::max(hi_y, p[1]);
    }
  }
  double span = std::max({hi_x - lo_x, hi_y - lo_y, 1.0});
  const double cx = 0.5 * (lo_x + hi_x);
  const double cy = 0.5 * (lo_y + hi_y);
  span *= 1.05;

  constexpr double size = 600.0;
  constexpr double margin = 60.0;
  const double k = size / span;
  auto sx = [&](double x) { return margin + (x - (cx - 0.5 * span)) * k; };
  auto sy = [&](double y) { return margin + size - (y - (cy - 0.5 * span)) * k; };

  const double legend_h = 20.0 * static_cast<double>(tracks.size()) + 10.0;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fixed(size + 2 * margin)
      << "\" height=\"" << detail::fixed(size + 2 * margin + legend_h) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    out << "<text x=\"" << detail::fixed(margin) << "\" y=\"30\" font-size=\"16\">"
        << detail::xml_escape(title) << "</text>\n";
  }
  out << "<rect x=\"" << detail::fixed(margin) << "\" y=\"" << detail::fixed(margin)
      << "\" width=\"" << detail::fixed(size) << "\" height=\"" << detail::fixed(size)
      << "\" fill=\"none\" stroke=\"#444\"/>\n";

  const double step = detail::nice_step(span);
  const double x0 = cx - 0.5 * span;
  const double y0 = cy - 0.5 * span;
  out << "<g font-size=\"10\" fill=\"#444\">\n";
  for (double v = std::ceil(x0 / step) * step; v <= x0 + span; v += step) {
    out << "<line x1=\"" << detail::fixed(sx(v)) << "\" y1=\"" << detail::fixed(margin + size)
        << "\" x2=\"" << detail::fixed(sx(v)) << "\" y2=\"" << detail::fixed(margin + size + 5)
        << "\" stroke=\"#444\"/><text x=\"" << detail::fixed(sx(v)) << "\" y=\""
        << detail::fixed(margin + size + 18) << "\" text-anchor=\"middle\">"
        << detail::fixed(v) << "</text>\n";
  }
  for (double v = std::ceil(y0 / step) * step; v <= y0 + span; v += step) {
    out << "<line x1=\"" << detail::fixed(margin - 5) << "\" y1=\"" << detail::fixed(sy(v))
        << "\" x2=\"" << detail::fixed(margin) << "\" y2=\"" << detail::fixed(sy(v))
        << "\" stroke=\"#444\"/><text x=\"" << detail::fixed(margin - 8) << "\" y=\""
        << detail::fixed(sy(v) + 3) << "\" text-anchor=\"end\">" << detail::fixed(v)
        << "</text>\n";
  }
  out << "<text x=\"" << detail::fixed(margin + size / 2) << "\" y=\""
      << detail::fixed(margin + size + 36) << "\" text-anchor=\"middle\">x (m)</text>\n";
  out << "<text x=\"15\" y=\"" << detail::fixed(margin + size / 2)
      << "\" transform=\"rotate(-90 15 " << detail::fixed(margin + size / 2)
      << ")\" text-anchor=\"middle\">y (m)</text>\n";
  out << "</g>\n";

  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const auto style = plot_style(i);
    out << "<polyline class=\"trajectory\" fill=\"none\" stroke=\"" << style.color
        << "\" stroke-width=\"1.5\"";
    if (!style.dash.empty()) out << " stroke-dasharray=\"" << style.dash << "\"";
    out << " points=\"";
    for (std::size_t j = 0; j < tracks[i].points.size(); ++j) {
      const auto& p = tracks[i].points[j];
      out << (j ? " " : "") << detail::fixed(sx(p[0])) << ',' << detail::fixed(sy(p[1]));
    }
    out << "\"/>\n";
  }

  out << "<g font-size=\"12\">\n";
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const auto style = plot_style(i);
    const double y = margin + size + 50 + 20.0 * static_cast<double>(i);
    out << "<line x1=\"" << detail::fixed(margin) << "\" y1=\"" << detail::fixed(y) << "\" x2=\""
        << detail::fixed(margin + 30) << "\" y2=\"" << detail::fixed(y) << "\" stroke=\""
        << style.color << "\" stroke-width=\"2\"";
    if (!style.dash.empty()) out << " stroke-dasharray=\"" << style.dash << "\"";
    out << "/><text x=\"" << detail::fixed(margin + 38) << "\" y=\"" << detail::fixed(y + 4)
        << "\">" << detail::xml_escape(tracks[i].name) << "</text>\n";
  }
  out << "</g>\n</svg>\n";
}

inline void emit_plot(const std::vector<NamedTrajectory>& tracks,
                      const std::filesystem::path& path, const std::string& title = {}) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  write_svg(out, tracks, title);
  out.flush();
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace mcan
