#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sparselaw/cost.hpp"
#include "sparselaw/law.hpp"

using namespace sparselaw;

namespace {

// Quadrature oracle for the sparse cost multiplier: integrates the density
// 1 - s(tau) of the cubic schedule over the pruning window with Simpson's
// rule, independent of the closed form under test.
double cmul_by_integration(double S, int intervals = 4000) {
  auto density = [&](double tau) {
    return 1.0 - S * (1.0 - std::pow(1.0 - tau, 3.0));
  };
  double sum = density(0.0) + density(1.0);
  for (int i = 1; i < intervals; ++i) {
    const double tau = static_cast<double>(i) / intervals;
    sum += (i % 2 == 1 ? 4.0 : 2.0) * density(tau);
  }
  const double avg_density = sum / (3.0 * intervals);
  return 0.25 / (1.0 - S) + 0.5 * avg_density / (1.0 - S) + 0.25;
}

// Independent 1-D minimization over log N at fixed compute.
double chinchilla_by_scan(const ScalingLawCoefficients& k,
                          const CostModel& model, double C) {
  auto loss_at = [&](double log_n) {
    const double n = std::exp(log_n);
    const double d = C / (model.flops_per_param_datum * n);
    return eval_law(k, 0.0, n, d);
  };
  double lo = std::log(1e2), hi = std::log(1e14);
  for (int i = 0; i < 200; ++i) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (loss_at(m1) < loss_at(m2))
      hi = m2;
    else
      lo = m1;
  }
  return std::exp(0.5 * (lo + hi));
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(xs[i]);
    const double y = std::log(ys[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("cmul hits the known values") {
  CHECK(cmul(0.0) == Catch::Approx(1.0).margin(1e-15));
  CHECK(cmul(0.5) == Catch::Approx(1.375).margin(1e-15));
  CHECK(cmul(0.875) == Catch::Approx(3.625).margin(1e-15));
  CHECK_THROWS_AS(cmul(1.0), error);
}

TEST_CASE("cmul agrees with schedule-density integration") {
  for (double s : {0.0, 0.25, 0.5, 0.75, 0.875})
    CHECK(std::abs(cmul(s) - cmul_by_integration(s)) < 1e-6);
}

TEST_CASE("cmul is 1 at zero and strictly increasing") {
  double prev = cmul(0.0);
  for (double s = 0.01; s < 0.999; s += 0.01) {
    const double cur = cmul(s);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("cost multipliers differentiate correctly") {
  for (CostMode mode : {CostMode::dense, CostMode::sparse}) {
    CostModel model;
    model.cost_mode = mode;
    for (double s : {0.1, 0.5, 0.8, 0.95}) {
      const double h = 1e-6;
      const double fd = (model.multiplier(s + h) - model.multiplier(s - h)) / (2 * h);
      CHECK(model.multiplier_derivative(s) == Catch::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("training_flops examples and inverse") {
  CostModel dense;
  dense.cost_mode = CostMode::dense;
  CHECK(training_flops(dense, 1e6, 1e9, 0.0) == Catch::Approx(6e15));
  CHECK(data_for_compute(dense, 6e15, 1e6, 0.0) == Catch::Approx(1e9));

  CostModel enc_dec = dense;
  enc_dec.flops_per_param_datum = 3.0;
  CHECK(training_flops(enc_dec, 1e6, 1e9, 0.0) == Catch::Approx(3e15));

  CostModel sparse;
  sparse.cost_mode = CostMode::sparse;
  CHECK(training_flops(sparse, 1e6, 1e9, 0.5) == Catch::Approx(8.25e15));
  CHECK(data_for_compute(sparse, 8.25e15, 1e6, 0.5) == Catch::Approx(1e9));

  // Dense accounting at 50% sparsity halves the data a budget buys.
  CHECK(data_for_compute(dense, 6e15, 1e6, 0.5) ==
        Catch::Approx(0.5 * data_for_compute(dense, 6e15, 1e6, 0.0)));

  CHECK_THROWS_AS(training_flops(dense, 1e6, 1e9, 1.0), error);
  CHECK_THROWS_AS(data_for_compute(dense, -1.0, 1e6, 0.0), error);
}

TEST_CASE("chinchilla optimum solves the toy problem") {
  // a_S + c_S = 1, all exponents 1: minimize 1/N + N at C = 6.
  const ScalingLawCoefficients k{0.5, 1.0, 0.5, 1.0, 1.0, 1.0, 0.0,
                                 "toy", "unstructured"};
  CostModel model;
  const auto opt = chinchilla_optimal(k, model, 6.0);
  CHECK(opt.nonzero_params == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(opt.data == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("chinchilla optimum satisfies stationarity and matches a scan") {
  CostModel model;
  for (const auto& k : {presets::vit_jft(), presets::t5_c4()}) {
    for (double c_budget : {1e17, 1e19, 1e21}) {
      const auto opt = chinchilla_optimal(k, model, c_budget);
      const double size_side =
          k.b_N * (k.a_S + k.c_S) * std::pow(opt.nonzero_params, -k.b_N);
      const double data_side = k.b_D * std::pow(k.a_D / opt.data, k.b_D);
      CHECK(size_side == Catch::Approx(data_side).epsilon(1e-10));

      const double scanned = chinchilla_by_scan(k, model, c_budget);
      CHECK(std::abs(std::log(opt.nonzero_params) - std::log(scanned)) < 1e-6);

      // Power-law homogeneity in the budget.
      const auto doubled = chinchilla_optimal(k, model, 2.0 * c_budget);
      const double expected = std::pow(2.0, k.b_D / (k.b_N + k.b_D));
      CHECK(doubled.nonzero_params / opt.nonzero_params ==
            Catch::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("chinchilla_data_at_size inverts the frontier") {
  CostModel model;
  const auto k = presets::t5_c4();
  const auto opt = chinchilla_optimal(k, model, 1e20);
  CHECK(chinchilla_data_at_size(k, opt.nonzero_params) ==
        Catch::Approx(opt.data).epsilon(1e-10));
}

TEST_CASE("closed-form optimal sparsity agrees with the numeric argmin") {
  // The grid stays where optima are inside the numeric search domain
  // [0, 0.999]; it still covers the clamped S_opt = 0 region.
  CostModel model;  // dense
  for (const auto& k : {presets::vit_jft(), presets::t5_c4()}) {
    for (double n = 1e6; n <= 1e10 + 1.0; n *= 100.0) {
      for (double c = 1e14; c <= 4e18 + 1.0; c *= 100.0) {
        const double closed = optimal_sparsity_closed(k, model, n, c);
        const double numeric = optimal_sparsity_numeric(k, model, n, c);
        CHECK(std::abs(closed - numeric) < 1e-4);
      }
    }
  }
}

TEST_CASE("closed-form optimal sparsity clamps at zero and grows with compute") {
  CostModel model;
  const auto k = presets::t5_c4();
  CHECK(optimal_sparsity_closed(k, model, 1e8, 1e10) == 0.0);
  double prev = -1.0;
  for (double c = 1e14; c <= 1e24; c *= 10.0) {
    const double s = optimal_sparsity_closed(k, model, 1e8, c);
    CHECK(s >= prev);
    prev = s;
  }
  CHECK_THROWS_AS(optimal_sparsity_closed(k, CostModel{6.0, CostMode::sparse},
                                          1e8, 1e20),
                  error);
}

TEST_CASE("numeric optimal sparsity returns zero in the data-starved regime") {
  CostModel model;
  const auto k = presets::t5_c4();
  CHECK(optimal_sparsity_numeric(k, model, 1e8, 1e12) < 1e-6);
}

TEST_CASE("dense-cost optimal sparsity never exceeds sparse-cost") {
  const auto k = presets::vit_jft();
  CostModel dense;
  CostModel sparse;
  sparse.cost_mode = CostMode::sparse;
  for (double n : {1e6, 1e8}) {
    for (double c = 1e16; c <= 1e22; c *= 100.0) {
      CHECK(optimal_sparsity_numeric(k, dense, n, c) <=
            optimal_sparsity_numeric(k, sparse, n, c) + 1e-6);
    }
  }
}

TEST_CASE("contours have slope b_N/b_D and are parallel across S") {
  std::vector<double> sizes;
  for (double n = 1e6; n <= 1e10; n *= 3.1622776601683795) sizes.push_back(n);
  for (const auto& k : {presets::vit_jft(), presets::t5_c4()}) {
    for (CostMode mode : {CostMode::dense, CostMode::sparse}) {
      CostModel model;
      model.cost_mode = mode;
      std::vector<double> slopes;
      for (double s : {0.25, 0.5, 0.75}) {
        const auto pts = sparsity_contour(k, model, s, sizes);
        std::vector<double> ns, ds;
        for (const auto& p : pts) {
          ns.push_back(p.nonzero_params);
          ds.push_back(p.data);
        }
        slopes.push_back(loglog_slope(ns, ds));
      }
      for (double slope : slopes) {
        CHECK(std::abs(slope - k.b_N / k.b_D) < 1e-6);
      }
    }
    // The dense compute-optimal frontier runs parallel to every contour.
    std::vector<double> frontier;
    for (double n : sizes) frontier.push_back(chinchilla_data_at_size(k, n));
    CHECK(std::abs(loglog_slope(sizes, frontier) - k.b_N / k.b_D) < 1e-6);
  }
}

TEST_CASE("contour points are first-order optimal in sparsity") {
  // At the contour's implied compute budget, nudging S must not help.
  for (CostMode mode : {CostMode::dense, CostMode::sparse}) {
    CostModel model;
    model.cost_mode = mode;
    const auto k = presets::t5_c4();
    for (double s : {0.3, 0.5, 0.75}) {
      for (double n : {1e6, 1e8, 1e10}) {
        const double d = contour_data_at_size(k, model, s, n);
        const double c_budget = model.flops_per_param_datum * n * d * model.multiplier(s);
        const double at = loss_at_compute(k, model, n, c_budget, s);
        CHECK(loss_at_compute(k, model, n, c_budget, s + 1e-4) >= at - 1e-10);
        CHECK(loss_at_compute(k, model, n, c_budget, s - 1e-4) >= at - 1e-10);
      }
    }
  }
}

TEST_CASE("numeric contour route agrees with the closed form") {
  CostModel sparse;
  sparse.cost_mode = CostMode::sparse;
  const auto k = presets::t5_c4();
  for (double n : {1e6, 1e8}) {
    const double closed = contour_data_at_size(k, sparse, 0.5, n);
    const double numeric = contour_data_at_size_numeric(k, sparse, 0.5, n);
    CHECK(std::abs(std::log(closed) - std::log(numeric)) < 1e-3);
  }
}

TEST_CASE("overtraining multiples before 50% sparsity wins") {
  CostModel sparse;
  sparse.cost_mode = CostMode::sparse;
  const double t5_mult = chinchilla_data_multiple(presets::t5_c4(), sparse, 0.5);
  const double vit_mult = chinchilla_data_multiple(presets::vit_jft(), sparse, 0.5);
  CHECK(t5_mult > 1.0);
  CHECK(t5_mult < 3.0);
  CHECK(vit_mult > 1.0);
  CHECK(vit_mult < 2.0);

  // Constant in the reference size, by parallelism.
  CHECK(chinchilla_data_multiple(presets::t5_c4(), sparse, 0.5, 1e6) ==
        Catch::Approx(chinchilla_data_multiple(presets::t5_c4(), sparse, 0.5, 1e10))
            .epsilon(1e-9));
}
