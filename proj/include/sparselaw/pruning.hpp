#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "sparselaw/error.hpp"
#include "sparselaw/rng.hpp"

namespace sparselaw {

// n non-zero weights in every group of m consecutive weights.
struct NmPattern {
  int n = 0;
  int m = 0;

  void validate() const {
    require(n > 0 && m > n, errc::invalid_argument,
            "n:m pattern requires 0 < n < m");
  }

  double pattern_sparsity() const {
    return 1.0 - static_cast<double>(n) / static_cast<double>(m);
  }
};

using Mask = std::vector<std::uint8_t>;  // 1 = kept, 0 = pruned

struct MaskedTensor {
  std::vector<double> values;
  Mask mask;
  std::optional<NmPattern> group;

  void validate() const {
    require(values.size() == mask.size(), errc::invalid_argument,
            "values and mask must have equal length");
    if (group) {
      group->validate();
      require(values.size() % static_cast<std::size_t>(group->m) == 0,
              errc::invalid_argument,
              "tensor length must be a multiple of the group size m");
    }
  }
};

// Number of entries a target sparsity keeps: ceil((1-s) * len), so realized
// sparsity never exceeds the target.
inline std::size_t kept_count(std::size_t len, double target_sparsity) {
  require(std::isfinite(target_sparsity) && target_sparsity >= 0.0 &&
              target_sparsity < 1.0,
          errc::invalid_argument, "target sparsity must lie in [0, 1)");
  return static_cast<std::size_t>(
      std::ceil((1.0 - target_sparsity) * static_cast<double>(len)));
}

inline double mask_sparsity(const Mask& mask) {
  const std::size_t kept = static_cast<std::size_t>(
      std::count(mask.begin(), mask.end(), std::uint8_t{1}));
  return 1.0 - static_cast<double>(kept) / static_cast<double>(mask.size());
}

namespace detail {

// Indices ordered by descending magnitude, ties by lowest index.
inline std::vector<std::size_t> magnitude_order(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return std::abs(values[a]) > std::abs(values[b]);
                   });
  return order;
}

}  // namespace detail

// Magnitude pruning: keeps the ceil((1-s)*len) largest-magnitude entries,
// deterministic tie-break by lowest index.
inline Mask gmp_mask(std::span<const double> values, double target_sparsity) {
  require(!values.empty(), errc::invalid_argument, "cannot mask an empty array");
  const std::size_t keep = kept_count(values.size(), target_sparsity);
  const std::vector<std::size_t> order = detail::magnitude_order(values);
  Mask mask(values.size(), 0);
  for (std::size_t i = 0; i < keep; ++i) mask[order[i]] = 1;
  return mask;
}

// Gradual n:m mask: the top n entries of every group of m are always kept
// (realized as a forced-kept flag rather than an infinity sentinel), then
// the largest remaining entries top the kept set up to ceil((1-s)*len).
// At s = 1 - n/m this is exactly the n:m pattern; for smaller s every group
// still retains at least n entries.
inline Mask nm_gradual_mask(std::span<const double> values, NmPattern pattern,
                            double target_sparsity) {
  pattern.validate();
  require(!values.empty(), errc::invalid_argument, "cannot mask an empty array");
  const std::size_t m = static_cast<std::size_t>(pattern.m);
  require(values.size() % m == 0, errc::invalid_argument,
          "array length must be a multiple of the group size m");
  require(target_sparsity <= pattern.pattern_sparsity() + 1e-15,
          errc::invalid_argument,
          "target sparsity exceeds what the n:m pattern allows");

  const std::size_t keep = kept_count(values.size(), target_sparsity);
  Mask mask(values.size(), 0);
  std::size_t kept = 0;

  std::vector<std::size_t> group(m);
  for (std::size_t base = 0; base < values.size(); base += m) {
    std::iota(group.begin(), group.end(), base);
    std::stable_sort(group.begin(), group.end(),
                     [&](std::size_t a, std::size_t b) {
                       return std::abs(values[a]) > std::abs(values[b]);
                     });
    for (int i = 0; i < pattern.n; ++i) {
      mask[group[static_cast<std::size_t>(i)]] = 1;
      ++kept;
    }
  }

  for (std::size_t idx : detail::magnitude_order(values)) {
    if (kept >= keep) break;
    if (!mask[idx]) {
      mask[idx] = 1;
      ++kept;
    }
  }
  return mask;
}

// Root-mean-square over kept entries only. A tensor with many zeros would
// otherwise report a deflated RMS and shrink relative learning rates.
inline double sparsity_aware_rms(const MaskedTensor& t) {
  t.validate();
  double sum = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    if (t.mask[i]) {
      sum += t.values[i] * t.values[i];
      ++kept;
    }
  }
  require(kept > 0, errc::empty_support,
          "all entries are pruned; RMS has empty support");
  return std::sqrt(sum / static_cast<double>(kept));
}

// Zeroes pruned positions. Idempotent.
inline MaskedTensor apply_mask(MaskedTensor t) {
  t.validate();
  for (std::size_t i = 0; i < t.values.size(); ++i)
    if (!t.mask[i]) t.values[i] = 0.0;
  return t;
}

// Cubic gradual-sparsification schedule over normalized training time.
struct PruneSchedule {
  double start_frac = 0.25;
  double end_frac = 0.75;
  int update_every = 100;  // steps between mask recomputations
  double final_sparsity = 0.0;
  int cubic_exponent = 3;

  void validate() const {
    require(start_frac >= 0.0 && start_frac < end_frac && end_frac <= 1.0,
            errc::invalid_argument, "require 0 <= start_frac < end_frac <= 1");
    require(update_every > 0, errc::invalid_argument,
            "update_every must be positive");
    require(std::isfinite(final_sparsity) && final_sparsity >= 0.0 &&
                final_sparsity < 1.0,
            errc::invalid_argument, "final_sparsity must lie in [0, 1)");
    require(cubic_exponent >= 1, errc::invalid_argument,
            "cubic_exponent must be >= 1");
  }
};

// Target sparsity at normalized time t in [0, 1]: zero before the window,
// final after it, and final * (1 - (1-tau)^k) inside.
inline double schedule_sparsity(const PruneSchedule& sched, double t) {
  sched.validate();
  require(std::isfinite(t) && t >= 0.0 && t <= 1.0, errc::invalid_argument,
          "schedule time must lie in [0, 1]");
  if (t <= sched.start_frac) return 0.0;
  if (t >= sched.end_frac) return sched.final_sparsity;
  const double tau =
      (t - sched.start_frac) / (sched.end_frac - sched.start_frac);
  return sched.final_sparsity *
         (1.0 - std::pow(1.0 - tau, static_cast<double>(sched.cubic_exponent)));
}

// Synthetic least-squares problem: loss(w) = ||Xw - y||^2 / (2n).
struct RegressionProblem {
  std::size_t sample_count = 0;
  std::size_t dim = 0;
  std::vector<double> features;  // row-major sample_count x dim
  std::vector<double> targets;
  std::vector<double> initial_weights;

  double loss(std::span<const double> w) const {
    double total = 0.0;
    for (std::size_t i = 0; i < sample_count; ++i) {
      double pred = 0.0;
      for (std::size_t j = 0; j < dim; ++j)
        pred += features[i * dim + j] * w[j];
      const double r = pred - targets[i];
      total += r * r;
    }
    return total / (2.0 * static_cast<double>(sample_count));
  }

  void gradient(std::span<const double> w, std::span<double> g) const {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < sample_count; ++i) {
      double pred = 0.0;
      for (std::size_t j = 0; j < dim; ++j)
        pred += features[i * dim + j] * w[j];
      const double r = pred - targets[i];
      for (std::size_t j = 0; j < dim; ++j)
        g[j] += r * features[i * dim + j] / static_cast<double>(sample_count);
    }
  }

  // Frobenius bound on the gradient Lipschitz constant lambda_max(X'X)/n.
  double lipschitz_bound() const {
    double sq = 0.0;
    for (double v : features) sq += v * v;
    return sq / static_cast<double>(sample_count);
  }
};

inline RegressionProblem make_regression(std::size_t samples, std::size_t dim,
                                         std::uint64_t seed) {
  require(samples > 0 && dim > 0, errc::invalid_argument,
          "regression needs positive sample count and dimension");
  RegressionProblem p;
  p.sample_count = samples;
  p.dim = dim;
  p.features.resize(samples * dim);
  p.targets.resize(samples);
  p.initial_weights.resize(dim);
  SplitMix64 rng(mix_seed(seed, 0));
  for (double& v : p.features) v = rng.next_normal();
  std::vector<double> truth(dim);
  for (double& v : truth) v = rng.next_normal() * 0.5;
  for (std::size_t i = 0; i < samples; ++i) {
    double t = 0.0;
    for (std::size_t j = 0; j < dim; ++j) t += p.features[i * dim + j] * truth[j];
    p.targets[i] = t + 0.01 * rng.next_normal();
  }
  for (double& v : p.initial_weights) v = rng.next_normal() * 0.5;
  return p;
}

struct ToyOptimizer {
  int steps = 1000;
  double base_lr = 0.05;
  double rms_epsilon = 1e-8;  // floor for the relative learning rate
  double rms_clip = 1.0;      // clip update RMS over kept entries; <= 0 disables
};

struct TraceRow {
  int step = 0;
  double sparsity = 0.0;
  double loss = 0.0;
  double rms = 0.0;
};

struct TrainingTrace {
  std::vector<TraceRow> rows;
  std::vector<Mask> masks;  // one snapshot per mask recomputation
  std::vector<double> final_weights;
};

// Gradient descent with gradual magnitude pruning. The learning rate is
// relative (base_lr times the RMS over unpruned weights), masks are
// recomputed every update_every steps at the schedule's current target, and
// pruned weights are hard-zeroed: they receive no updates, so recomputed
// masks can never revive them while the target is non-decreasing.
inline TrainingTrace toy_train(const RegressionProblem& problem,
                               const PruneSchedule& sched,
                               const ToyOptimizer& opt,
                               std::optional<NmPattern> pattern = {}) {
  sched.validate();
  require(opt.steps > 0, errc::invalid_argument, "steps must be positive");
  require(opt.steps >= sched.update_every, errc::invalid_argument,
          "training shorter than one mask update");
  require(opt.base_lr > 0.0 && opt.rms_epsilon > 0.0, errc::invalid_argument,
          "base_lr and rms_epsilon must be positive");
  if (pattern) {
    pattern->validate();
    require(problem.dim % static_cast<std::size_t>(pattern->m) == 0,
            errc::invalid_argument,
            "weight dimension must be a multiple of the group size m");
    require(sched.final_sparsity <= pattern->pattern_sparsity() + 1e-15,
            errc::invalid_argument,
            "final sparsity exceeds what the n:m pattern allows");
  }

  MaskedTensor weights;
  weights.values = problem.initial_weights;
  weights.mask.assign(problem.dim, 1);
  weights.group = pattern;

  TrainingTrace trace;
  std::vector<double> grad(problem.dim);
  double initial_loss = 0.0;

  for (int step = 0; step <= opt.steps; ++step) {
    const double t = static_cast<double>(step) / opt.steps;
    const double target = schedule_sparsity(sched, t);
    if (step % sched.update_every == 0 || step == opt.steps) {
      weights.mask = pattern ? nm_gradual_mask(weights.values, *pattern, target)
                             : gmp_mask(weights.values, target);
      weights = apply_mask(std::move(weights));
      trace.masks.push_back(weights.mask);
    }

    const double loss = problem.loss(weights.values);
    const double rms = sparsity_aware_rms(weights);
    trace.rows.push_back({step, target, loss, rms});
    if (step == 0) initial_loss = loss;
    require(loss <= 1e6 * initial_loss, errc::diverged,
            "training diverged at step " + std::to_string(step));
    if (step == opt.steps) break;

    problem.gradient(weights.values, grad);
    const double lr = opt.base_lr * std::max(rms, opt.rms_epsilon);
    double update_sq = 0.0;
    std::size_t kept = 0;
    for (std::size_t j = 0; j < problem.dim; ++j) {
      if (!weights.mask[j]) continue;
      const double u = lr * grad[j];
      update_sq += u * u;
      ++kept;
    }
    double scale = 1.0;
    if (opt.rms_clip > 0.0 && kept > 0) {
      const double update_rms = std::sqrt(update_sq / static_cast<double>(kept));
      if (update_rms > opt.rms_clip) scale = opt.rms_clip / update_rms;
    }
    for (std::size_t j = 0; j < problem.dim; ++j) {
      if (!weights.mask[j]) continue;
      weights.values[j] -= scale * lr * grad[j];
    }
  }
  trace.final_weights = std::move(weights.values);
  return trace;
}

}  // namespace sparselaw
