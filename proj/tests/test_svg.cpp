#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "sparselaw/cost.hpp"
#include "sparselaw/law.hpp"
#include "sparselaw/svg.hpp"

using namespace sparselaw;

namespace {

std::vector<PlotSeries> demo_contours(const ScalingLawCoefficients& k,
                                      const CostModel& model) {
  std::vector<double> sizes;
  for (double n = 1e6; n <= 1e9; n *= 2.0) sizes.push_back(n);
  std::vector<PlotSeries> out;
  for (double s : {0.5, 0.75}) {
    PlotSeries series;
    series.label = "S=" + format_g17(s).substr(0, 4);
    series.points = sparsity_contour(k, model, s, sizes);
    out.push_back(series);
  }
  return out;
}

PlotSeries demo_frontier(const ScalingLawCoefficients& k,
                         const CostModel& model) {
  std::vector<double> computes;
  for (double c = 1e16; c <= 1e21; c *= 10.0) computes.push_back(c);
  return {"chinchilla", chinchilla_frontier(k, model, computes)};
}

// Pixel-space polyline slopes from the emitted document.
std::vector<double> polyline_slopes(const std::string& svg) {
  std::vector<double> slopes;
  std::size_t pos = 0;
  while ((pos = svg.find("points=\"", pos)) != std::string::npos) {
    pos += 8;
    const std::size_t end = svg.find('"', pos);
    std::vector<double> xs, ys;
    std::size_t p = pos;
    while (p < end) {
      double x = 0, y = 0;
      int consumed = 0;
      if (std::sscanf(svg.c_str() + p, "%lf,%lf%n", &x, &y, &consumed) != 2)
        break;
      xs.push_back(x);
      ys.push_back(y);
      p += consumed;
      while (p < end && svg[p] == ' ') ++p;
    }
    if (xs.size() >= 2) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const double n = static_cast<double>(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
      }
      slopes.push_back((n * sxy - sx * sy) / (n * sxx - sx * sx));
    }
    pos = end;
  }
  return slopes;
}

}  // namespace

TEST_CASE("contour plot is byte-deterministic") {
  const auto k = presets::t5_c4();
  CostModel model;
  const auto contours = demo_contours(k, model);
  const auto frontier = demo_frontier(k, model);
  const std::string a = emit_contour_plot_svg(contours, frontier);
  const std::string b = emit_contour_plot_svg(contours, frontier);
  CHECK(a == b);
  CHECK(a.find("<svg") == 0);
  CHECK(a.find("chinchilla") != std::string::npos);
}

TEST_CASE("emitted polylines are parallel in pixel space") {
  const auto k = presets::vit_jft();
  CostModel model;
  model.cost_mode = CostMode::sparse;
  const auto contours = demo_contours(k, model);
  const auto frontier = demo_frontier(k, model);
  const std::string svg = emit_contour_plot_svg(contours, frontier);
  const auto slopes = polyline_slopes(svg);
  REQUIRE(slopes.size() == 3);  // two contours plus the frontier
  CHECK(std::abs(slopes[0] - slopes[1]) < 0.01);
  CHECK(std::abs(slopes[0] - slopes[2]) < 0.01);
}

TEST_CASE("empty inputs are rejected") {
  const auto k = presets::t5_c4();
  CostModel model;
  const auto frontier = demo_frontier(k, model);
  CHECK_THROWS_AS(
      emit_contour_plot_svg(std::vector<PlotSeries>{}, frontier), error);
  std::vector<PlotSeries> with_empty = demo_contours(k, model);
  with_empty.push_back({"empty", {}});
  CHECK_THROWS_AS(emit_contour_plot_svg(with_empty, frontier), error);
}
