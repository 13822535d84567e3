#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sparselaw/dataset.hpp"
#include "sparselaw/error.hpp"
#include "sparselaw/law.hpp"
#include "sparselaw/minimize.hpp"
#include "sparselaw/rng.hpp"

namespace sparselaw {

// Huber loss: quadratic within delta of zero, linear beyond. C^1 everywhere.
inline double huber(double delta, double r) {
  require(delta > 0.0, errc::invalid_argument, "huber delta must be positive");
  const double a = std::abs(r);
  if (a <= delta) return 0.5 * r * r;
  return delta * (a - 0.5 * delta);
}

inline double huber_derivative(double delta, double r) {
  const double a = std::abs(r);
  if (a <= delta) return r;
  return r > 0.0 ? delta : -delta;
}

struct ParameterRange {
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr std::array<const char*, 7> kParameterNames = {
    "a_S", "b_S", "c_S", "b_N", "a_D", "b_D", "c"};

// Default log-uniform start-sampling ranges. Wide enough to cover the
// bundled coefficient sets' magnitudes; the optimizer is free to leave them.
// The irreducible-loss range is floored at 1e-3 because the parameter is
// optimized as a logarithm.
inline ParameterRange default_start_range(std::size_t param_index) {
  switch (param_index) {
    case 0: case 2: case 4: return {1e-2, 1e4};   // a_S, c_S, a_D
    case 1: case 3: case 5: return {0.05, 3.0};   // b_S, b_N, b_D
    default: return {1e-3, 10.0};                 // c
  }
}

struct FitConfig {
  double huber_delta = 1e-3;
  bool log_loss = true;
  int num_starts = 20;
  int max_iterations = 500;
  std::uint64_t seed = 0;
  std::map<std::string, ParameterRange> start_ranges;  // per-name overrides
  std::map<std::string, double> frozen;                // name -> fixed value

  void validate() const {
    require(huber_delta > 0.0, errc::invalid_argument,
            "huber_delta must be positive");
    require(num_starts >= 1, errc::invalid_argument, "num_starts must be >= 1");
    require(max_iterations >= 1, errc::invalid_argument,
            "max_iterations must be >= 1");
  }
};

struct FitResult {
  ScalingLawCoefficients coefficients;
  double objective_value = std::numeric_limits<double>::infinity();
  std::vector<double> residuals;  // signed, T(pred) - T(observed) per record
  int starts_tried = 0;
  bool converged = false;
  std::vector<double> start_objectives;  // final value of each start, diagnostic
};

namespace detail {

inline std::array<double, 7> params_of(const ScalingLawCoefficients& k) {
  return {k.a_S, k.b_S, k.c_S, k.b_N, k.a_D, k.b_D, k.c};
}

inline ScalingLawCoefficients coefficients_of(const std::array<double, 7>& p,
                                              std::string family,
                                              std::string pattern) {
  ScalingLawCoefficients k;
  k.a_S = p[0];
  k.b_S = p[1];
  k.c_S = p[2];
  k.b_N = p[3];
  k.a_D = p[4];
  k.b_D = p[5];
  k.c = p[6];
  k.family = std::move(family);
  k.pattern = std::move(pattern);
  return k;
}

// Model prediction and its partials with respect to the raw parameters.
struct LawEval {
  double pred = 0.0;
  std::array<double, 7> dpred{};
};

inline LawEval eval_with_partials(const std::array<double, 7>& p,
                                  const RunRecord& r) {
  const double density = 1.0 - r.sparsity;
  const double density_pow = std::pow(density, p[1]);
  const double cap_coeff = p[0] * density_pow + p[2];
  const double size_pow = std::pow(r.nonzero_params, -p[3]);
  const double data_ratio = p[4] / r.data;
  const double data_pow = std::pow(data_ratio, p[5]);

  LawEval e;
  e.pred = cap_coeff * size_pow + data_pow + p[6];
  e.dpred[0] = density_pow * size_pow;
  e.dpred[1] = p[0] * density_pow * std::log(density) * size_pow;
  e.dpred[2] = size_pow;
  e.dpred[3] = -cap_coeff * size_pow * std::log(r.nonzero_params);
  e.dpred[4] = p[5] * data_pow / p[4];
  e.dpred[5] = data_pow * std::log(data_ratio);
  e.dpred[6] = 1.0;
  return e;
}

inline int distinct_values(const SweepDataset& data, double RunRecord::*field) {
  std::set<double> seen;
  for (const RunRecord& r : data.records) seen.insert(r.*field);
  return static_cast<int>(seen.size());
}

inline void check_identifiability(const SweepDataset& data) {
  require(data.records.size() >= 8, errc::degenerate_data,
          "need at least 8 records to fit the joint law");
  require(distinct_values(data, &RunRecord::sparsity) >= 2,
          errc::degenerate_data, "need at least 2 distinct sparsity levels");
  require(distinct_values(data, &RunRecord::nonzero_params) >= 2,
          errc::degenerate_data, "need at least 2 distinct model sizes");
  require(distinct_values(data, &RunRecord::data) >= 2, errc::degenerate_data,
          "need at least 2 distinct data amounts");
}

inline std::string dataset_pattern(const SweepDataset& data) {
  std::string pattern = data.records.front().pattern;
  for (const RunRecord& r : data.records)
    if (r.pattern != pattern) return "mixed";
  return pattern;
}

// Objective value and its full gradient with respect to the seven
// log-parameters.
inline double objective_eval(const std::array<double, 7>& p,
                             const SweepDataset& data, double delta,
                             bool log_loss, std::array<double, 7>& grad) {
  grad.fill(0.0);
  double total = 0.0;
  for (const RunRecord& r : data.records) {
    const LawEval e = eval_with_partials(p, r);
    if (!std::isfinite(e.pred) || (log_loss && e.pred <= 0.0))
      return std::numeric_limits<double>::infinity();
    double resid, dresid_scale;
    if (log_loss) {
      resid = std::log(e.pred) - std::log(r.loss);
      dresid_scale = 1.0 / e.pred;
    } else {
      resid = e.pred - r.loss;
      dresid_scale = 1.0;
    }
    total += huber(delta, resid);
    const double w = huber_derivative(delta, resid) * dresid_scale;
    for (std::size_t i = 0; i < 7; ++i)
      grad[i] += w * e.dpred[i] * p[i];  // chain rule through log p
  }
  const double n = static_cast<double>(data.records.size());
  for (double& g : grad) g /= n;
  return total / n;
}

}  // namespace detail

// Mean Huber loss of the (optionally log-transformed) prediction residuals.
inline double fit_objective(const ScalingLawCoefficients& k,
                            const SweepDataset& data, double delta,
                            bool log_loss) {
  std::array<double, 7> grad;
  return detail::objective_eval(detail::params_of(k), data, delta, log_loss,
                                grad);
}

// Gradient of the mean Huber objective with respect to the logarithms of the
// seven parameters, in kParameterNames order.
inline std::array<double, 7> fit_objective_gradient(
    const ScalingLawCoefficients& k, const SweepDataset& data, double delta,
    bool log_loss) {
  std::array<double, 7> grad;
  detail::objective_eval(detail::params_of(k), data, delta, log_loss, grad);
  return grad;
}

inline std::vector<double> fit_residuals(const ScalingLawCoefficients& k,
                                         const SweepDataset& data,
                                         bool log_loss) {
  std::vector<double> out;
  out.reserve(data.records.size());
  for (const RunRecord& r : data.records) {
    const double pred = eval_law(k, r.sparsity, r.nonzero_params, r.data);
    out.push_back(log_loss ? std::log(pred) - std::log(r.loss) : pred - r.loss);
  }
  return out;
}

namespace detail {

// Multi-start minimization of the mean Huber objective over the free subset
// of log-parameters. Deterministic: start i draws from a stream derived from
// (seed, i) and ties between equally good starts go to the lowest index.
inline FitResult run_fit(const SweepDataset& data, const FitConfig& config,
                         const std::array<double, 7>& fixed_values,
                         const std::array<bool, 7>& is_free) {
  data.validate();
  config.validate();
  check_identifiability(data);

  std::vector<std::size_t> free_idx;
  for (std::size_t i = 0; i < 7; ++i)
    if (is_free[i]) free_idx.push_back(i);
  require(!free_idx.empty(), errc::invalid_argument,
          "all parameters are frozen; nothing to fit");

  auto expand = [&](std::span<const double> theta) {
    std::array<double, 7> p = fixed_values;
    for (std::size_t j = 0; j < free_idx.size(); ++j)
      p[free_idx[j]] = std::exp(theta[j]);
    return p;
  };

  // Objective in log-parameter space, restricted to the free subset.
  auto objective = [&](std::span<const double> theta, std::span<double> grad) {
    std::array<double, 7> full_grad;
    const double value =
        objective_eval(expand(theta), data, config.huber_delta,
                       config.log_loss, full_grad);
    for (std::size_t j = 0; j < free_idx.size(); ++j)
      grad[j] = full_grad[free_idx[j]];
    return value;
  };

  std::vector<ParameterRange> ranges(free_idx.size());
  for (std::size_t j = 0; j < free_idx.size(); ++j) {
    const std::size_t i = free_idx[j];
    auto it = config.start_ranges.find(kParameterNames[i]);
    ranges[j] = it != config.start_ranges.end() ? it->second
                                                : default_start_range(i);
    require(ranges[j].lo > 0.0 && ranges[j].hi >= ranges[j].lo,
            errc::invalid_argument,
            std::string("bad start range for ") + kParameterNames[i]);
  }

  BfgsOptions bfgs;
  bfgs.max_iterations = config.max_iterations;

  FitResult result;
  result.starts_tried = config.num_starts;
  int best_start = -1;
  std::vector<double> best_theta;
  for (int start = 0; start < config.num_starts; ++start) {
    SplitMix64 rng(mix_seed(config.seed, static_cast<std::uint64_t>(start)));
    std::vector<double> theta(free_idx.size());
    for (std::size_t j = 0; j < theta.size(); ++j)
      theta[j] = std::log(rng.next_log_uniform(ranges[j].lo, ranges[j].hi));

    BfgsResult run = bfgs_minimize(objective, std::move(theta), bfgs);
    result.start_objectives.push_back(run.value);
    if (run.converged) result.converged = true;
    if (run.value < result.objective_value) {
      result.objective_value = run.value;
      best_theta = run.x;
      best_start = start;
    }
  }
  require(best_start >= 0 && std::isfinite(result.objective_value),
          errc::degenerate_data, "no start produced a finite objective");

  const std::array<double, 7> best = expand(best_theta);
  result.coefficients =
      coefficients_of(best, data.family, dataset_pattern(data));
  result.objective_value = fit_objective(result.coefficients, data,
                                         config.huber_delta, config.log_loss);
  result.residuals = fit_residuals(result.coefficients, data, config.log_loss);
  return result;
}

}  // namespace detail

// Fits all seven law coefficients to a sweep.
inline FitResult fit_full(const SweepDataset& data, const FitConfig& config) {
  std::array<double, 7> fixed{};
  std::array<bool, 7> is_free;
  is_free.fill(true);
  for (const auto& [name, value] : config.frozen) {
    bool known = false;
    for (std::size_t i = 0; i < 7; ++i) {
      if (name == kParameterNames[i]) {
        fixed[i] = value;
        is_free[i] = false;
        known = true;
      }
    }
    require(known, errc::invalid_argument, "unknown frozen parameter " + name);
  }
  return detail::run_fit(data, config, fixed, is_free);
}

// Refits only the sparsity coefficients a_S, b_S, c_S against a known dense
// base scaling; b_N, a_D, b_D and c are frozen to the given values. Suited
// to reduced sweeps (for example only the smallest model and shortest runs)
// and to structured-pattern refits.
inline FitResult fit_sparsity_only(const SweepDataset& data,
                                   const ScalingLawCoefficients& dense_coeffs,
                                   const FitConfig& config) {
  dense_coeffs.validate();
  FitConfig reduced = config;
  reduced.frozen["b_N"] = dense_coeffs.b_N;
  reduced.frozen["a_D"] = dense_coeffs.a_D;
  reduced.frozen["b_D"] = dense_coeffs.b_D;
  reduced.frozen["c"] = dense_coeffs.c;
  FitResult result = fit_full(data, reduced);
  // Guarantee bit-for-bit frozen values in the output.
  result.coefficients.b_N = dense_coeffs.b_N;
  result.coefficients.a_D = dense_coeffs.a_D;
  result.coefficients.b_D = dense_coeffs.b_D;
  result.coefficients.c = dense_coeffs.c;
  return result;
}

}  // namespace sparselaw
