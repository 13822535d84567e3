#pragma once

#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "sparselaw/cost.hpp"
#include "sparselaw/error.hpp"
#include "sparselaw/io.hpp"

namespace sparselaw {

struct PlotSeries {
  std::string label;
  std::vector<ContourPoint> points;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline const char* series_color(std::size_t i) {
  static constexpr const char* palette[] = {"#006eb8", "#009b55", "#b6321c",
                                            "#8a2be2", "#c87f0a", "#00767d"};
  return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

}  // namespace detail

// Log-log plot of non-zero parameters (y) against training FLOPs (x): one
// polyline per iso-sparsity contour plus the dense compute-optimal frontier.
// Output is a pure function of the inputs, byte for byte.
inline std::string emit_contour_plot_svg(std::span<const PlotSeries> contours,
                                         const PlotSeries& frontier) {
  require(!contours.empty(), errc::empty_input, "no contours to plot");
  for (const PlotSeries& s : contours)
    require(!s.points.empty(), errc::empty_input,
            "contour '" + s.label + "' has no points");
  require(!frontier.points.empty(), errc::empty_input, "frontier has no points");

  std::vector<const PlotSeries*> all;
  for (const PlotSeries& s : contours) all.push_back(&s);
  all.push_back(&frontier);

  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  for (const PlotSeries* s : all) {
    for (const ContourPoint& p : s->points) {
      require(p.compute > 0.0 && p.nonzero_params > 0.0, errc::invalid_argument,
              "plot points must be positive for log axes");
      const double x = std::log10(p.compute);
      const double y = std::log10(p.nonzero_params);
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  const double x_pad = 0.05 * std::max(x_max - x_min, 1e-9);
  const double y_pad = 0.05 * std::max(y_max - y_min, 1e-9);
  x_min -= x_pad;
  x_max += x_pad;
  y_min -= y_pad;
  y_max += y_pad;

  constexpr double width = 880, height = 600;
  constexpr double left = 90, right = 30, top = 40, bottom = 70;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  auto map_x = [&](double lx) {
    return left + (lx - x_min) / (x_max - x_min) * plot_w;
  };
  auto map_y = [&](double ly) {
    return top + (1.0 - (ly - y_min) / (y_max - y_min)) * plot_h;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         detail::svg_num(width) + "\" height=\"" + detail::svg_num(height) +
         "\" viewBox=\"0 0 " + detail::svg_num(width) + " " +
         detail::svg_num(height) + "\">\n";
  svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Decade grid lines and tick labels.
  svg += "  <g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (int k = static_cast<int>(std::ceil(x_min));
       k <= static_cast<int>(std::floor(x_max)); ++k) {
    const double px = map_x(k);
    svg += "    <line x1=\"" + detail::svg_num(px) + "\" y1=\"" +
           detail::svg_num(top) + "\" x2=\"" + detail::svg_num(px) +
           "\" y2=\"" + detail::svg_num(top + plot_h) + "\"/>\n";
  }
  for (int k = static_cast<int>(std::ceil(y_min));
       k <= static_cast<int>(std::floor(y_max)); ++k) {
    const double py = map_y(k);
    svg += "    <line x1=\"" + detail::svg_num(left) + "\" y1=\"" +
           detail::svg_num(py) + "\" x2=\"" + detail::svg_num(left + plot_w) +
           "\" y2=\"" + detail::svg_num(py) + "\"/>\n";
  }
  svg += "  </g>\n";

  svg += "  <g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">\n";
  for (int k = static_cast<int>(std::ceil(x_min));
       k <= static_cast<int>(std::floor(x_max)); ++k) {
    svg += "    <text x=\"" + detail::svg_num(map_x(k)) + "\" y=\"" +
           detail::svg_num(top + plot_h + 18) +
           "\" text-anchor=\"middle\">1e" + std::to_string(k) + "</text>\n";
  }
  for (int k = static_cast<int>(std::ceil(y_min));
       k <= static_cast<int>(std::floor(y_max)); ++k) {
    svg += "    <text x=\"" + detail::svg_num(left - 8) + "\" y=\"" +
           detail::svg_num(map_y(k) + 4) + "\" text-anchor=\"end\">1e" +
           std::to_string(k) + "</text>\n";
  }
  svg += "    <text x=\"" + detail::svg_num(left + plot_w / 2) + "\" y=\"" +
         detail::svg_num(height - 18) +
         "\" text-anchor=\"middle\">training FLOPs</text>\n";
  svg += "    <text x=\"18\" y=\"" + detail::svg_num(top + plot_h / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         detail::svg_num(top + plot_h / 2) +
         ")\">non-zero parameters</text>\n";
  svg += "  </g>\n";

  svg += "  <rect x=\"" + detail::svg_num(left) + "\" y=\"" +
         detail::svg_num(top) + "\" width=\"" + detail::svg_num(plot_w) +
         "\" height=\"" + detail::svg_num(plot_h) +
         "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n";

  for (std::size_t i = 0; i < all.size(); ++i) {
    const PlotSeries& s = *all[i];
    const bool is_frontier = i + 1 == all.size();
    svg += "  <polyline fill=\"none\" stroke=\"";
    svg += is_frontier ? "#000000" : detail::series_color(i);
    svg += "\" stroke-width=\"2\"";
    if (is_frontier) svg += " stroke-dasharray=\"6,4\"";
    svg += " points=\"";
    for (const ContourPoint& p : s.points) {
      svg += detail::svg_num(map_x(std::log10(p.compute))) + "," +
             detail::svg_num(map_y(std::log10(p.nonzero_params))) + " ";
    }
    svg += "\"/>\n";
  }

  // Legend.
  const double legend_x = left + 14;
  double legend_y = top + 16;
  svg += "  <g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">\n";
  for (std::size_t i = 0; i < all.size(); ++i) {
    const bool is_frontier = i + 1 == all.size();
    svg += "    <line x1=\"" + detail::svg_num(legend_x) + "\" y1=\"" +
           detail::svg_num(legend_y - 4) + "\" x2=\"" +
           detail::svg_num(legend_x + 26) + "\" y2=\"" +
           detail::svg_num(legend_y - 4) + "\" stroke=\"" +
           (is_frontier ? "#000000" : detail::series_color(i)) +
           "\" stroke-width=\"2\"" +
           (is_frontier ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
    svg += "    <text x=\"" + detail::svg_num(legend_x + 32) + "\" y=\"" +
           detail::svg_num(legend_y) + "\">" + detail::xml_escape(all[i]->label) +
           "</text>\n";
    legend_y += 18;
  }
  svg += "  </g>\n";
  svg += "</svg>\n";
  return svg;
}

inline void emit_contour_plot(std::span<const PlotSeries> contours,
                              const PlotSeries& frontier,
                              const std::string& path) {
  write_file(path, emit_contour_plot_svg(contours, frontier));
}

}  // namespace sparselaw
