#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sparselaw/error.hpp"
#include "sparselaw/law.hpp"
#include "sparselaw/minimize.hpp"

namespace sparselaw {

enum class CostMode { dense, sparse };

inline const char* cost_mode_name(CostMode mode) {
  return mode == CostMode::dense ? "dense" : "sparse";
}

inline CostMode parse_cost_mode(const std::string& name) {
  if (name == "dense") return CostMode::dense;
  if (name == "sparse") return CostMode::sparse;
  raise(errc::invalid_argument, "cost mode must be 'dense' or 'sparse'");
}

// Training-cost multiplier of gradual sparsification relative to a dense
// reference model of the final non-zero size, assuming sparsity is exploited
// as soon as it appears. The run starts dense at size N/(1-S), prunes along
// a cubic schedule over the middle window, and finishes at sparsity S:
//
//   c_mul(S) = start/(1-S)
//            + (end-start) * (1 - S*k/(k+1)) / (1-S)
//            + (1 - end)
//
// where k is the cubic exponent; the middle term is the window's average
// density. With the default 25%-75% window and k=3 this is
// (0.25 + 0.50*(1 - 0.75*S))/(1-S) + 0.25.
inline double schedule_cost_multiplier(double S, double schedule_start,
                                       double schedule_end, int cubic_exponent) {
  detail::check_sparsity(S);
  const double sigma = static_cast<double>(cubic_exponent) /
                       (cubic_exponent + 1.0);
  return schedule_start / (1.0 - S) +
         (schedule_end - schedule_start) * (1.0 - sigma * S) / (1.0 - S) +
         (1.0 - schedule_end);
}

inline double schedule_cost_multiplier_derivative(double S,
                                                  double schedule_start,
                                                  double schedule_end,
                                                  int cubic_exponent) {
  detail::check_sparsity(S);
  const double sigma = static_cast<double>(cubic_exponent) /
                       (cubic_exponent + 1.0);
  const double numer =
      schedule_start + (schedule_end - schedule_start) * (1.0 - sigma);
  return numer / ((1.0 - S) * (1.0 - S));
}

// Sparse-cost multiplier with the default pruning window.
inline double cmul(double S) { return schedule_cost_multiplier(S, 0.25, 0.75, 3); }

// FLOP accounting rules. "dense" charges a run at sparsity S as a dense
// model of size N/(1-S); "sparse" credits sparsity during training via the
// schedule multiplier above.
struct CostModel {
  double flops_per_param_datum = 6.0;  // half for encoder-decoder models
  CostMode cost_mode = CostMode::dense;
  double schedule_start = 0.25;
  double schedule_end = 0.75;
  int cubic_exponent = 3;

  void validate() const {
    require(std::isfinite(flops_per_param_datum) && flops_per_param_datum > 0.0,
            errc::invalid_argument, "flops_per_param_datum must be positive");
    require(schedule_start >= 0.0 && schedule_start < schedule_end &&
                schedule_end <= 1.0,
            errc::invalid_argument,
            "require 0 <= schedule_start < schedule_end <= 1");
    require(cubic_exponent >= 1, errc::invalid_argument,
            "cubic_exponent must be >= 1");
  }

  double multiplier(double S) const {
    detail::check_sparsity(S);
    if (cost_mode == CostMode::dense) return 1.0 / (1.0 - S);
    return schedule_cost_multiplier(S, schedule_start, schedule_end,
                                    cubic_exponent);
  }

  double multiplier_derivative(double S) const {
    detail::check_sparsity(S);
    if (cost_mode == CostMode::dense) return 1.0 / ((1.0 - S) * (1.0 - S));
    return schedule_cost_multiplier_derivative(S, schedule_start, schedule_end,
                                               cubic_exponent);
  }
};

inline double training_flops(const CostModel& model, double N, double D,
                             double S) {
  detail::check_positive(N, "N");
  detail::check_positive(D, "D");
  return model.flops_per_param_datum * N * D * model.multiplier(S);
}

// Inverse of training_flops in D: the data budget a compute budget C buys at
// size N and sparsity S.
inline double data_for_compute(const CostModel& model, double C, double N,
                               double S) {
  detail::check_positive(C, "C");
  detail::check_positive(N, "N");
  return C / (model.flops_per_param_datum * N * model.multiplier(S));
}

struct ComputeOptimal {
  double nonzero_params = 0.0;
  double data = 0.0;
};

// Dense compute-optimal allocation: the (N, D) minimizing the dense law at
// fixed C = flops_per_param_datum * N * D. Stationarity balances the size
// and data terms, b_N*(a_S+c_S)*N^-b_N = b_D*(a_D/D)^b_D, which gives
// N_opt proportional to C^(b_D/(b_N+b_D)).
inline ComputeOptimal chinchilla_optimal(const ScalingLawCoefficients& k,
                                         const CostModel& model, double C) {
  detail::check_positive(C, "C");
  const double dense_coeff = k.a_S + k.c_S;
  const double log_c_per = std::log(C / model.flops_per_param_datum);
  const double log_n =
      (std::log(k.b_N * dense_coeff) - std::log(k.b_D) - k.b_D * std::log(k.a_D) +
       k.b_D * log_c_per) /
      (k.b_N + k.b_D);
  ComputeOptimal opt;
  opt.nonzero_params = std::exp(log_n);
  opt.data = C / (model.flops_per_param_datum * opt.nonzero_params);
  return opt;
}

// Data budget on the dense compute-optimal frontier at a given size.
inline double chinchilla_data_at_size(const ScalingLawCoefficients& k,
                                      double N) {
  detail::check_positive(N, "N");
  const double dense_coeff = k.a_S + k.c_S;
  const double log_d =
      std::log(k.a_D) -
      (std::log(k.b_N * dense_coeff / k.b_D) - k.b_N * std::log(N)) / k.b_D;
  return std::exp(log_d);
}

// Closed-form optimal sparsity for dense cost accounting, clamped at 0:
// solve the sparsity stationarity of the law under D = (C/(f*N))*(1-S).
inline double optimal_sparsity_closed(const ScalingLawCoefficients& k,
                                      const CostModel& model, double N,
                                      double C) {
  require(model.cost_mode == CostMode::dense, errc::invalid_argument,
          "closed-form optimal sparsity applies to dense cost accounting");
  detail::check_positive(N, "N");
  detail::check_positive(C, "C");
  const double log_density =
      (std::log(k.b_D) + k.b_D * std::log(k.a_D) - std::log(k.a_S * k.b_S) +
       k.b_N * std::log(N) -
       k.b_D * std::log(C / (model.flops_per_param_datum * N))) /
      (k.b_S + k.b_D);
  return std::max(1.0 - std::exp(log_density), 0.0);
}

// Loss at (N, C) as a function of sparsity, with the data budget scaled down
// by the cost multiplier of the chosen accounting mode.
inline double loss_at_compute(const ScalingLawCoefficients& k,
                              const CostModel& model, double N, double C,
                              double S) {
  return eval_law(k, S, N, data_for_compute(model, C, N, S));
}

// Numeric optimal sparsity: bounded scalar minimization of loss_at_compute
// over S in [0, 0.999], either cost mode.
inline double optimal_sparsity_numeric(const ScalingLawCoefficients& k,
                                       const CostModel& model, double N,
                                       double C) {
  detail::check_positive(N, "N");
  detail::check_positive(C, "C");
  auto objective = [&](double S) { return loss_at_compute(k, model, N, C, S); };
  return minimize_unimodal_scan(objective, 0.0, 0.999);
}

// Iso-sparsity contour: the data budget D_S at which sparsity S is exactly
// stationary-optimal for size N, from
//
//   b_D * (a_D/D_S)^b_D * c'_mul(S)/c_mul(S) = a_S*b_S*(1-S)^(b_S-1)*N^-b_N
//
// which is a pure power law in D_S, so D_S ~ N^(b_N/b_D) and all contours
// (and the dense compute-optimal frontier) are parallel in log-log.
inline double contour_data_at_size(const ScalingLawCoefficients& k,
                                   const CostModel& model, double S, double N) {
  require(S > 0.0 && S < 1.0, errc::invalid_argument,
          "contour sparsity must lie in (0, 1)");
  detail::check_positive(N, "N");
  const double rhs = k.a_S * k.b_S * std::pow(1.0 - S, k.b_S - 1.0) *
                     std::pow(N, -k.b_N);
  const double ratio = model.multiplier_derivative(S) / model.multiplier(S);
  const double scaled = rhs / (k.b_D * ratio);
  require(scaled > 0.0 && std::isfinite(scaled), errc::no_solution,
          "contour equation has no positive solution");
  // (a_D/D_S)^b_D = scaled
  return k.a_D * std::pow(scaled, -1.0 / k.b_D);
}

struct ContourPoint {
  double sparsity = 0.0;
  double nonzero_params = 0.0;
  double data = 0.0;
  double compute = 0.0;
  double loss = 0.0;
};

inline std::vector<ContourPoint> sparsity_contour(
    const ScalingLawCoefficients& k, const CostModel& model, double S,
    std::span<const double> sizes) {
  require(!sizes.empty(), errc::empty_input, "contour needs at least one size");
  std::vector<ContourPoint> points;
  points.reserve(sizes.size());
  for (double N : sizes) {
    ContourPoint p;
    p.sparsity = S;
    p.nonzero_params = N;
    p.data = contour_data_at_size(k, model, S, N);
    p.compute = model.flops_per_param_datum * N * p.data * model.multiplier(S);
    p.loss = eval_law(k, S, N, p.data);
    points.push_back(p);
  }
  return points;
}

// Chinchilla frontier sampled over a compute range, in the same point format
// as the contours (sparsity 0).
inline std::vector<ContourPoint> chinchilla_frontier(
    const ScalingLawCoefficients& k, const CostModel& model,
    std::span<const double> computes) {
  require(!computes.empty(), errc::empty_input,
          "frontier needs at least one compute budget");
  std::vector<ContourPoint> points;
  points.reserve(computes.size());
  for (double C : computes) {
    const ComputeOptimal opt = chinchilla_optimal(k, model, C);
    ContourPoint p;
    p.sparsity = 0.0;
    p.nonzero_params = opt.nonzero_params;
    p.data = opt.data;
    p.compute = C;
    p.loss = eval_law(k, 0.0, opt.nonzero_params, opt.data);
    points.push_back(p);
  }
  return points;
}

// Numeric contour point: finds the compute budget whose numeric optimal
// sparsity equals S by bisection in log C, then converts back to data.
// Independent route for cross-checking the closed form.
inline double contour_data_at_size_numeric(const ScalingLawCoefficients& k,
                                           const CostModel& model, double S,
                                           double N) {
  require(S > 0.0 && S < 0.999, errc::invalid_argument,
          "numeric contour sparsity must lie in (0, 0.999)");
  const double base = model.flops_per_param_datum * N;
  double log_lo = std::log(base * 1e-6);
  double log_hi = std::log(base * 1e6);
  auto opt_at = [&](double log_c) {
    return optimal_sparsity_numeric(k, model, N, std::exp(log_c));
  };
  for (int i = 0; i < 80 && opt_at(log_lo) > S; ++i) log_lo -= 2.0;
  for (int i = 0; i < 80 && opt_at(log_hi) < S; ++i) log_hi += 2.0;
  require(opt_at(log_lo) <= S && opt_at(log_hi) >= S, errc::no_solution,
          "could not bracket the requested sparsity level");
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (log_lo + log_hi);
    if (opt_at(mid) < S)
      log_lo = mid;
    else
      log_hi = mid;
  }
  return data_for_compute(model, std::exp(0.5 * (log_lo + log_hi)), N, S);
}

// How many times past the dense compute-optimal data budget training must
// run before sparsity S becomes optimal: D_S on the S-contour divided by the
// frontier data budget at the same N. Constant in N since the contour and
// frontier are parallel.
inline double chinchilla_data_multiple(const ScalingLawCoefficients& k,
                                       const CostModel& model, double S,
                                       double reference_size = 1e8) {
  return contour_data_at_size(k, model, S, reference_size) /
         chinchilla_data_at_size(k, reference_size);
}

}  // namespace sparselaw
