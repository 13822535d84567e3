#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "sparselaw/error.hpp"

namespace sparselaw {

struct BfgsOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-10;
  double step_tolerance = 1e-10;
};

struct BfgsResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

// Quasi-Newton minimizer with an Armijo backtracking line search (with a
// doubling expansion so long treks through nearly-linear regions do not
// crawl). The objective is called as f(x, grad) and must fill the gradient;
// it may return +inf to reject a trial point. Dimension is small here, so
// the dense inverse-Hessian update is fine.
template <typename F>
BfgsResult bfgs_minimize(F&& objective, std::vector<double> x0,
                         const BfgsOptions& opt = {}) {
  const std::size_t n = x0.size();
  BfgsResult result;
  result.x = std::move(x0);

  std::vector<double> grad(n), grad_next(n), direction(n), x_next(n);
  std::vector<double> s(n), y(n), hy(n);
  std::vector<double> hessian_inv(n * n, 0.0);
  auto reset_hessian = [&](double scale) {
    std::fill(hessian_inv.begin(), hessian_inv.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) hessian_inv[i * n + i] = scale;
  };
  reset_hessian(1.0);

  double fx = objective(std::span<const double>(result.x), std::span<double>(grad));
  if (!std::isfinite(fx)) {
    result.value = fx;
    return result;
  }
  result.value = fx;
  bool first_update = true;

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    result.iterations = iter;
    if (detail::inf_norm(grad) <= opt.gradient_tolerance) {
      result.converged = true;
      break;
    }

    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      for (std::size_t j = 0; j < n; ++j) d -= hessian_inv[i * n + j] * grad[j];
      direction[i] = d;
    }
    double slope = detail::dot(direction, grad);
    if (slope >= 0.0) {  // stale curvature; fall back to steepest descent
      reset_hessian(1.0);
      for (std::size_t i = 0; i < n; ++i) direction[i] = -grad[i];
      slope = detail::dot(direction, grad);
      if (slope >= 0.0) {
        result.converged = true;
        break;
      }
    }

    constexpr double armijo = 1e-4;
    double step = 1.0;
    double f_trial = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int backtrack = 0; backtrack < 60; ++backtrack) {
      for (std::size_t i = 0; i < n; ++i)
        x_next[i] = result.x[i] + step * direction[i];
      f_trial = objective(std::span<const double>(x_next), std::span<double>(grad_next));
      if (std::isfinite(f_trial) && f_trial <= fx + armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (accepted && step == 1.0) {
      // Expand while the objective keeps dropping.
      std::vector<double> x_best = x_next, g_best = grad_next;
      double f_best = f_trial;
      double wide = 2.0;
      for (int grow = 0; grow < 24; ++grow, wide *= 2.0) {
        for (std::size_t i = 0; i < n; ++i)
          x_next[i] = result.x[i] + wide * direction[i];
        const double f_wide =
            objective(std::span<const double>(x_next), std::span<double>(grad_next));
        if (!std::isfinite(f_wide) || f_wide >= f_best) break;
        f_best = f_wide;
        x_best = x_next;
        g_best = grad_next;
        step = wide;
      }
      x_next = x_best;
      grad_next = g_best;
      f_trial = f_best;
    }
    if (!accepted) {
      // Line search exhausted; at rounding scale of the optimum this is
      // normal termination.
      result.converged = detail::inf_norm(grad) <= 1e2 * opt.gradient_tolerance ||
                         std::abs(slope) <= opt.step_tolerance;
      break;
    }

    double step_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_next[i] - result.x[i];
      y[i] = grad_next[i] - grad[i];
      step_norm = std::max(step_norm, std::abs(s[i]));
    }
    result.x = x_next;
    fx = f_trial;
    result.value = fx;
    grad = grad_next;

    if (step_norm <= opt.step_tolerance * (1.0 + detail::inf_norm(result.x))) {
      result.converged = true;
      break;
    }

    const double sy = detail::dot(s, y);
    const double yy = detail::dot(y, y);
    if (sy > 1e-12 * std::sqrt(detail::dot(s, s) * yy)) {
      if (first_update) {
        reset_hessian(sy / yy);
        first_update = false;
      }
      for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (std::size_t j = 0; j < n; ++j) v += hessian_inv[i * n + j] * y[j];
        hy[i] = v;
      }
      const double yhy = detail::dot(y, hy);
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          hessian_inv[i * n + j] +=
              (1.0 + rho * yhy) * rho * s[i] * s[j] -
              rho * (s[i] * hy[j] + hy[i] * s[j]);
        }
      }
    }
  }
  return result;
}

// Golden-section search on [lo, hi]; assumes a single minimum inside.
template <typename F>
double golden_section_minimize(F&& f, double lo, double hi, double xtol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > xtol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

struct UnimodalOptions {
  int scan_points = 129;
  double xtol = 1e-9;
};

// Bounded scalar minimization for empirically unimodal objectives: a coarse
// scan brackets the valley, golden-section refines it. A scan that shows
// more than one strict valley raises errc::non_unimodal instead of silently
// returning one of them.
template <typename F>
double minimize_unimodal_scan(F&& f, double lo, double hi,
                              const UnimodalOptions& opt = {}) {
  require(hi > lo && opt.scan_points >= 3, errc::invalid_argument,
          "bad scan interval");
  const int k = opt.scan_points;
  std::vector<double> xs(k), fs(k);
  for (int i = 0; i < k; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / (k - 1);
    fs[i] = f(xs[i]);
  }
  double fmin = fs[0], fmax = fs[0];
  int imin = 0;
  for (int i = 1; i < k; ++i) {
    if (fs[i] < fmin) {
      fmin = fs[i];
      imin = i;
    }
    fmax = std::max(fmax, fs[i]);
  }
  const double margin = 1e-12 * (fmax - fmin) + 1e-300;
  int valleys = 0;
  for (int i = 0; i < k; ++i) {
    const bool below_left = i == 0 || fs[i] < fs[i - 1] - margin;
    const bool below_right = i == k - 1 || fs[i] < fs[i + 1] - margin;
    if (below_left && below_right) ++valleys;
  }
  require(valleys <= 1, errc::non_unimodal,
          "objective is not unimodal over the scanned interval");

  const double a = xs[imin > 0 ? imin - 1 : 0];
  const double b = xs[imin < k - 1 ? imin + 1 : k - 1];
  return golden_section_minimize(f, a, b, opt.xtol);
}

}  // namespace sparselaw
