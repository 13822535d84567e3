#pragma once

#include <cmath>
#include <string>

#include "sparselaw/error.hpp"

namespace sparselaw {

// Joint sparsity scaling law
//
//   L(S, N, D) = (a_S * (1 - S)^b_S + c_S) * N^-b_N + (a_D / D)^b_D + c
//
// S is the fraction of zero weights, N the number of non-zero parameters and
// D the amount of training data. The first summand is the capacity term (its
// loss floor at infinite data), the second the data term, c the irreducible
// loss. At S = 0 the law reduces to the dense form with a_N^b_N = a_S + c_S.
struct ScalingLawCoefficients {
  double a_S = 0.0;
  double b_S = 0.0;
  double c_S = 0.0;
  double b_N = 0.0;
  double a_D = 0.0;
  double b_D = 0.0;
  double c = 0.0;
  std::string family;
  std::string pattern = "unstructured";

  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    require(positive(a_S), errc::invalid_argument, "a_S must be positive");
    require(positive(b_S), errc::invalid_argument, "b_S must be positive");
    require(positive(c_S), errc::invalid_argument, "c_S must be positive");
    require(positive(b_N), errc::invalid_argument, "b_N must be positive");
    require(positive(a_D), errc::invalid_argument, "a_D must be positive");
    require(positive(b_D), errc::invalid_argument, "b_D must be positive");
    require(std::isfinite(c) && c >= 0.0, errc::invalid_argument,
            "c must be non-negative");
  }
};

namespace detail {

inline void check_sparsity(double S) {
  require(std::isfinite(S) && S >= 0.0 && S < 1.0, errc::invalid_argument,
          "sparsity must lie in [0, 1)");
}

inline void check_positive(double v, const char* what) {
  require(std::isfinite(v) && v > 0.0, errc::invalid_argument,
          std::string(what) + " must be positive and finite");
}

}  // namespace detail

// Capacity coefficient a_S * (1 - S)^b_S + c_S.
inline double capacity_coefficient(const ScalingLawCoefficients& k, double S) {
  detail::check_sparsity(S);
  return k.a_S * std::pow(1.0 - S, k.b_S) + k.c_S;
}

// Size- and sparsity-limited loss floor (a_S (1-S)^b_S + c_S) * N^-b_N.
inline double capacity_term(const ScalingLawCoefficients& k, double S, double N) {
  detail::check_positive(N, "N");
  return capacity_coefficient(k, S) * std::pow(N, -k.b_N);
}

inline double data_term(const ScalingLawCoefficients& k, double D) {
  detail::check_positive(D, "D");
  return std::pow(k.a_D / D, k.b_D);
}

inline double eval_law(const ScalingLawCoefficients& k, double S, double N,
                       double D) {
  return capacity_term(k, S, N) + data_term(k, D) + k.c;
}

// Equivalent dense size multiplier: the factor on the non-zero parameter
// count a dense model needs to match the capacity term of a sparse model,
//   gain(S) = ((a_S (1-S)^b_S + c_S) / (a_S + c_S))^(-1/b_N).
inline double gain(const ScalingLawCoefficients& k, double S) {
  detail::check_sparsity(S);
  const double dense = k.a_S + k.c_S;
  return std::pow(capacity_coefficient(k, S) / dense, -1.0 / k.b_N);
}

// Unique D with eval_law(k, S, N, D) = L. The loss must exceed the
// capacity term plus irreducible loss or no finite D reaches it.
inline double invert_for_data(const ScalingLawCoefficients& k, double L,
                              double S, double N) {
  detail::check_positive(L, "L");
  const double residual = L - capacity_term(k, S, N) - k.c;
  require(residual > 0.0, errc::unreachable_loss,
          "target loss is at or below the capacity limit; no finite amount "
          "of data reaches it");
  return k.a_D * std::pow(residual, -1.0 / k.b_D);
}

// Dual of invert_for_data: the unique N with eval_law(k, S, N, D) = L.
inline double invert_for_size(const ScalingLawCoefficients& k, double L,
                              double S, double D) {
  detail::check_positive(L, "L");
  const double residual = L - data_term(k, D) - k.c;
  require(residual > 0.0, errc::unreachable_loss,
          "target loss is at or below the data-limited floor; no finite "
          "model size reaches it");
  return std::pow(capacity_coefficient(k, S) / residual, 1.0 / k.b_N);
}

// Bundled coefficient sets for the two reference model families, plus the
// structured-sparsity refit of the language family (only the three sparsity
// coefficients differ from the unstructured row).
namespace presets {

inline ScalingLawCoefficients vit_jft() {
  return {2.94e2, 0.821, 4.68e2, 0.392, 2.37e8, 0.890, 4.517,
          "vit-jft", "unstructured"};
}

inline ScalingLawCoefficients t5_c4() {
  return {1.68e1, 0.722, 4.50e1, 0.245, 6.90e8, 0.203, 0.651,
          "t5-c4", "unstructured"};
}

inline ScalingLawCoefficients t5_c4_nm() {
  ScalingLawCoefficients k = t5_c4();
  k.a_S = 8.64e1;
  k.b_S = 2.752;
  k.c_S = 5.36e2;
  k.pattern = "n:m";
  return k;
}

}  // namespace presets

}  // namespace sparselaw
