#pragma once

#include "sparselaw/cost.hpp"
#include "sparselaw/dataset.hpp"
#include "sparselaw/error.hpp"
#include "sparselaw/fitting.hpp"
#include "sparselaw/io.hpp"
#include "sparselaw/law.hpp"
#include "sparselaw/minimize.hpp"
#include "sparselaw/pruning.hpp"
#include "sparselaw/rng.hpp"
#include "sparselaw/simulate.hpp"
#include "sparselaw/svg.hpp"
