#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "sparselaw/fitting.hpp"
#include "sparselaw/simulate.hpp"

using namespace sparselaw;

namespace {

// Splits a dataset into held-out points (every stride-th record) and the
// remainder used for fitting.
struct Split {
  SweepDataset train;
  SweepDataset held_out;
};

Split hold_out(const SweepDataset& data, std::size_t stride) {
  Split split;
  split.train.family = split.held_out.family = data.family;
  split.train.data_unit = split.held_out.data_unit = data.data_unit;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    if (i % stride == 0 && split.held_out.records.size() < 10)
      split.held_out.records.push_back(data.records[i]);
    else
      split.train.records.push_back(data.records[i]);
  }
  return split;
}

double max_relative_prediction_error(const ScalingLawCoefficients& fitted,
                                     const ScalingLawCoefficients& truth,
                                     const SweepDataset& points) {
  double worst = 0.0;
  for (const RunRecord& r : points.records) {
    const double want = eval_law(truth, r.sparsity, r.nonzero_params, r.data);
    const double got = eval_law(fitted, r.sparsity, r.nonzero_params, r.data);
    worst = std::max(worst, std::abs(got - want) / want);
  }
  return worst;
}

}  // namespace

TEST_CASE("huber loss values") {
  CHECK(huber(1.0, 0.0) == 0.0);
  CHECK(huber(0.001, 0.0005) == Catch::Approx(1.25e-7).epsilon(1e-12));
  CHECK(huber(0.001, 0.01) == Catch::Approx(9.5e-6).epsilon(1e-12));
  CHECK(huber(0.001, -0.01) == Catch::Approx(9.5e-6).epsilon(1e-12));
  CHECK_THROWS_AS(huber(0.0, 1.0), error);
}

TEST_CASE("huber is continuous and C1 at the knee") {
  const double delta = 0.37;
  const double eps = 1e-9;
  CHECK(huber(delta, delta - eps) ==
        Catch::Approx(huber(delta, delta + eps)).margin(1e-9));
  const double slope_in =
      (huber(delta, delta) - huber(delta, delta - eps)) / eps;
  const double slope_out =
      (huber(delta, delta + eps) - huber(delta, delta)) / eps;
  CHECK(slope_in == Catch::Approx(slope_out).margin(1e-6));
  CHECK(slope_in == Catch::Approx(delta).margin(1e-6));
}

TEST_CASE("analytic objective gradient matches finite differences") {
  const auto truth = presets::t5_c4();
  const auto data = simulate_sweep(truth, presets::t5_grid(), 0.05, 3);
  // Evaluate away from the optimum so the gradient is non-trivial.
  ScalingLawCoefficients at = truth;
  at.a_S *= 1.7;
  at.b_N *= 0.8;
  at.c *= 1.3;

  for (bool log_loss : {true, false}) {
    const double delta = log_loss ? 1e-3 : 1e-2;
    const auto grad = fit_objective_gradient(at, data, delta, log_loss);
    double params[7] = {at.a_S, at.b_S, at.c_S, at.b_N, at.a_D, at.b_D, at.c};
    for (int i = 0; i < 7; ++i) {
      const double h = 1e-6;
      auto perturbed = [&](double factor) {
        ScalingLawCoefficients k = at;
        double* fields[7] = {&k.a_S, &k.b_S, &k.c_S, &k.b_N,
                             &k.a_D, &k.b_D, &k.c};
        *fields[i] = params[i] * factor;
        return fit_objective(k, data, delta, log_loss);
      };
      const double fd =
          (perturbed(std::exp(h)) - perturbed(std::exp(-h))) / (2 * h);
      CHECK(grad[i] == Catch::Approx(fd).margin(1e-7 + 1e-4 * std::abs(fd)));
    }
  }
}

TEST_CASE("noiseless language-style sweep is recovered") {
  const auto truth = presets::t5_c4();
  const auto data = simulate_sweep(truth, presets::t5_grid(), 0.0, 0);
  const Split split = hold_out(data, 5);
  REQUIRE(split.held_out.records.size() == 10);

  FitConfig config;  // log-loss, delta 1e-3
  const FitResult fit = fit_full(split.train, config);
  CHECK(fit.converged);
  CHECK(max_relative_prediction_error(fit.coefficients, truth,
                                      split.held_out) < 1e-3);
}

TEST_CASE("noiseless vision-style sweep is recovered with raw loss") {
  const auto truth = presets::vit_jft();
  const auto data = simulate_sweep(truth, presets::vit_grid(), 0.0, 0);
  const Split split = hold_out(data, 12);
  REQUIRE(split.held_out.records.size() == 10);

  FitConfig config;
  config.log_loss = false;
  config.huber_delta = 1e-2;
  const FitResult fit = fit_full(split.train, config);
  CHECK(fit.converged);
  CHECK(max_relative_prediction_error(fit.coefficients, truth,
                                      split.held_out) < 1e-3);
}

TEST_CASE("one percent noise keeps held-out error under two percent") {
  const auto truth = presets::t5_c4();
  const auto data = simulate_sweep(truth, presets::t5_grid(), 0.01, 11);
  const Split split = hold_out(data, 5);

  FitConfig config;
  config.num_starts = 20;
  const FitResult fit = fit_full(split.train, config);
  CHECK(max_relative_prediction_error(fit.coefficients, truth,
                                      split.held_out) < 0.02);
}

TEST_CASE("objective value is self-consistent") {
  const auto data = simulate_sweep(presets::t5_c4(), presets::t5_grid(), 0.01, 2);
  FitConfig config;
  config.num_starts = 4;
  const FitResult fit = fit_full(data, config);
  const double recomputed = fit_objective(fit.coefficients, data,
                                          config.huber_delta, config.log_loss);
  CHECK(std::abs(recomputed - fit.objective_value) <=
        1e-10 * std::max(1.0, std::abs(fit.objective_value)));
  CHECK(fit.residuals.size() == data.records.size());
}

TEST_CASE("fits are deterministic given a seed") {
  const auto data = simulate_sweep(presets::t5_c4(), presets::t5_grid(), 0.02, 4);
  FitConfig config;
  config.num_starts = 6;
  config.seed = 42;
  const FitResult a = fit_full(data, config);
  const FitResult b = fit_full(data, config);
  CHECK(a.objective_value == b.objective_value);
  CHECK(a.coefficients.a_S == b.coefficients.a_S);
  CHECK(a.coefficients.c == b.coefficients.c);
  CHECK(a.start_objectives == b.start_objectives);
}

TEST_CASE("multi-start result dominates every start") {
  const auto data = simulate_sweep(presets::t5_c4(), presets::t5_grid(), 0.05, 8);
  FitConfig config;
  config.num_starts = 8;
  const FitResult fit = fit_full(data, config);
  REQUIRE(fit.start_objectives.size() == 8);
  for (double v : fit.start_objectives) CHECK(fit.objective_value <= v);
}

TEST_CASE("degenerate data is rejected") {
  auto data = simulate_sweep(presets::t5_c4(), presets::t5_grid(), 0.0, 0);
  SweepDataset single;
  single.family = data.family;
  for (const RunRecord& r : data.records)
    if (r.sparsity == 0.5) single.records.push_back(r);
  FitConfig config;
  CHECK_THROWS_AS(fit_full(single, config), error);
  try {
    fit_full(single, config);
    FAIL("expected degenerate-data");
  } catch (const error& e) {
    CHECK(e.code() == errc::degenerate_data);
  }

  SweepDataset tiny;
  tiny.family = data.family;
  tiny.records.assign(data.records.begin(), data.records.begin() + 7);
  CHECK_THROWS_AS(fit_full(tiny, config), error);
}

TEST_CASE("sparsity-only fit freezes the dense terms bit-for-bit") {
  const auto truth = presets::t5_c4_nm();
  SweepGrid grid = presets::t5_grid();
  grid.sparsity_levels = {0.0, 0.5, 0.75};
  grid.pattern = "n:m";
  const auto data = reduced_sweep(simulate_sweep(truth, grid, 0.0, 0));

  const auto dense = presets::t5_c4();
  FitConfig config;
  config.huber_delta = 1e-2;
  const FitResult fit = fit_sparsity_only(data, dense, config);
  CHECK(fit.coefficients.b_N == dense.b_N);
  CHECK(fit.coefficients.a_D == dense.a_D);
  CHECK(fit.coefficients.b_D == dense.b_D);
  CHECK(fit.coefficients.c == dense.c);
  CHECK(fit.coefficients.pattern == "n:m");
}

TEST_CASE("structured-pattern refit recovers the n:8 gain multipliers") {
  // Forward-simulate from the bundled n:m coefficient row on the reduced
  // grid (smallest model or fewest steps), refit only the sparsity terms,
  // and read the equivalent-size gains back off the law.
  const auto truth = presets::t5_c4_nm();
  SweepGrid grid = presets::t5_grid();
  grid.sparsity_levels = {0.0, 0.5, 0.75};
  grid.pattern = "n:m";
  const auto full = simulate_sweep(truth, grid, 0.0, 0);
  const auto data = reduced_sweep(full);
  REQUIRE(data.records.size() == 18);  // 6 of 12 (N, D) cells x 3 sparsities

  FitConfig config;
  config.huber_delta = 1e-2;  // the 0.75 pattern is an outlier at 1e-3
  const FitResult fit = fit_sparsity_only(data, presets::t5_c4(), config);
  CHECK(gain(fit.coefficients, 0.5) == Catch::Approx(1.67).margin(0.05));
  CHECK(gain(fit.coefficients, 0.75) == Catch::Approx(1.81).margin(0.05));
}

TEST_CASE("noiseless reduced-grid sparsity-only fit predicts held-out points") {
  const auto truth = presets::t5_c4_nm();
  SweepGrid grid = presets::t5_grid();
  grid.sparsity_levels = {0.0, 0.5, 0.75};
  const auto full = simulate_sweep(truth, grid, 0.0, 0);
  const auto reduced = reduced_sweep(full);

  // Held-out: the full-grid points not in the reduced sweep.
  SweepDataset held_out;
  held_out.family = full.family;
  std::set<std::pair<double, double>> reduced_cells;
  for (const RunRecord& r : reduced.records)
    reduced_cells.insert({r.nonzero_params, r.data});
  for (const RunRecord& r : full.records)
    if (!reduced_cells.count({r.nonzero_params, r.data}))
      held_out.records.push_back(r);
  REQUIRE(!held_out.records.empty());

  FitConfig config;
  config.huber_delta = 1e-2;
  const FitResult fit = fit_sparsity_only(reduced, presets::t5_c4(), config);
  CHECK(max_relative_prediction_error(fit.coefficients, truth, held_out) <
        1e-3);
}
