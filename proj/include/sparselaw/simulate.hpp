#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sparselaw/dataset.hpp"
#include "sparselaw/error.hpp"
#include "sparselaw/law.hpp"
#include "sparselaw/rng.hpp"

namespace sparselaw {

// Cartesian sweep grid over model size, data amount and sparsity.
struct SweepGrid {
  std::vector<double> nonzero_param_levels;
  std::vector<double> data_levels;
  std::vector<double> sparsity_levels;
  std::string pattern = "unstructured";

  void validate() const {
    require(!nonzero_param_levels.empty() && !data_levels.empty() &&
                !sparsity_levels.empty(),
            errc::invalid_argument, "grid axes must be non-empty");
    for (double n : nonzero_param_levels)
      detail::check_positive(n, "size level");
    for (double d : data_levels) detail::check_positive(d, "data level");
    for (double s : sparsity_levels) detail::check_sparsity(s);
  }

  std::size_t run_count() const {
    return nonzero_param_levels.size() * data_levels.size() *
           sparsity_levels.size();
  }
};

namespace presets {

// Step-to-data conversion constants for the preset grids; editable if a
// different batch regime is wanted.
inline constexpr double vit_images_per_step = 4096.0;
inline constexpr double t5_tokens_per_step = 128.0 * 512.0;  // batch x seq len

// Vision sweep: 7 sizes in 2x increments, 4 training lengths (the longest
// about 1.8 billion images), sparsities up to 8x compression. 112 runs.
inline SweepGrid vit_grid() {
  SweepGrid g;
  for (int i = 0; i < 7; ++i) g.nonzero_param_levels.push_back(0.66e6 * (1 << i));
  for (double steps : {55e3, 110e3, 220e3, 440e3})
    g.data_levels.push_back(steps * vit_images_per_step);
  g.sparsity_levels = {0.0, 0.5, 0.75, 0.875};
  return g;
}

// Language sweep: 4 sizes in 4x increments, 3 training lengths (up to about
// 65 billion tokens), same sparsity targets. 48 runs.
inline SweepGrid t5_grid() {
  SweepGrid g;
  for (int i = 0; i < 4; ++i) g.nonzero_param_levels.push_back(1.3e6 * (1 << (2 * i)));
  for (double steps : {250e3, 500e3, 1000e3})
    g.data_levels.push_back(steps * t5_tokens_per_step);
  g.sparsity_levels = {0.0, 0.5, 0.75, 0.875};
  return g;
}

}  // namespace presets

// Generates one record per grid point with loss = L(S, N, D) * exp(eps),
// eps ~ Normal(0, noise_sigma^2). Noise streams are derived from
// (seed, record index), so the output is independent of evaluation order and
// identical across platforms. Multiplicative log-normal noise keeps losses
// positive for any sigma.
inline SweepDataset simulate_sweep(const ScalingLawCoefficients& truth,
                                   const SweepGrid& grid, double noise_sigma,
                                   std::uint64_t seed) {
  truth.validate();
  grid.validate();
  require(std::isfinite(noise_sigma) && noise_sigma >= 0.0,
          errc::invalid_argument, "noise_sigma must be non-negative");

  SweepDataset out;
  out.family = truth.family;
  out.data_unit = truth.family.find("vit") != std::string::npos ? "images"
                                                                : "tokens";
  out.records.reserve(grid.run_count());
  std::uint64_t index = 0;
  for (double n : grid.nonzero_param_levels) {
    for (double d : grid.data_levels) {
      for (double s : grid.sparsity_levels) {
        RunRecord r;
        r.sparsity = s;
        r.nonzero_params = n;
        r.data = d;
        r.pattern = grid.pattern;
        double loss = eval_law(truth, s, n, d);
        if (noise_sigma > 0.0) {
          SplitMix64 rng(mix_seed(seed, index));
          loss *= std::exp(noise_sigma * rng.next_normal());
        }
        r.loss = loss;
        out.records.push_back(r);
        ++index;
      }
    }
  }
  return out;
}

// The sub-sweep used for refitting sparsity coefficients against a known
// dense base: every run involving either the smallest model or the least
// amount of data.
inline SweepDataset reduced_sweep(const SweepDataset& data) {
  data.validate();
  double min_n = data.records.front().nonzero_params;
  double min_d = data.records.front().data;
  for (const RunRecord& r : data.records) {
    min_n = std::min(min_n, r.nonzero_params);
    min_d = std::min(min_d, r.data);
  }
  SweepDataset out;
  out.family = data.family;
  out.data_unit = data.data_unit;
  for (const RunRecord& r : data.records)
    if (r.nonzero_params == min_n || r.data == min_d) out.records.push_back(r);
  return out;
}

}  // namespace sparselaw
