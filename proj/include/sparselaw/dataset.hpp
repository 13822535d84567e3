#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sparselaw/error.hpp"

namespace sparselaw {

// One observed training run: sparsity, non-zero parameter count, amount of
// training data and the resulting validation loss.
struct RunRecord {
  double sparsity = 0.0;
  double nonzero_params = 0.0;
  double data = 0.0;
  double loss = 0.0;
  std::string pattern = "unstructured";

  void validate() const {
    require(std::isfinite(sparsity) && sparsity >= 0.0 && sparsity < 1.0,
            errc::invalid_argument, "sparsity must lie in [0, 1)");
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    require(positive(nonzero_params), errc::invalid_argument,
            "nonzero_params must be positive and finite");
    require(positive(data), errc::invalid_argument,
            "data must be positive and finite");
    require(positive(loss), errc::invalid_argument,
            "loss must be positive and finite");
  }
};

struct SweepDataset {
  std::vector<RunRecord> records;
  std::string family;
  std::string data_unit = "unspecified";  // images | tokens

  void validate() const {
    require(!records.empty(), errc::empty_table, "dataset has no records");
    for (const RunRecord& r : records) r.validate();
  }
};

}  // namespace sparselaw
