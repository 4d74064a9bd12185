#pragma once

#include <cstddef>
#include <vector>

#include "swapsim/engine.h"

namespace swapsim {

// Per-pulse coincidence probabilities computed without sampling: every
// pair-number configuration allowed by the engine's limits, every relabel and
// admixture branch, every loss branch and every detector outcome is summed
// with its probability.
struct ExactResult {
  std::vector<double> probs;  // one per coincidence
  double included_mass = 0.0;  // unconditioned probability of the enumerated configurations
  std::size_t configurations = 0;
};

// Requires limits.max_pairs_per_source > 0 and same-slot coincidences only.
// Throws ValidationError when more than `config_cap` resolved configurations
// would be needed.
ExactResult enumerate_exact(const Engine& engine, std::size_t config_cap = 2'000'000);

}  // namespace swapsim
