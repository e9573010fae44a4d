#pragma once

// Invariant checks shared by the `selftest` command and the acceptance suite.

#include <cstdint>
#include <string>
#include <vector>

#include "risbin/harness.hpp"

namespace risbin::check {

struct Result {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// For every n_ctrl in 1..max_ctrl and `trials` random dual-head networks and
/// states: Q of the thresholded action equals the brute-force maximum over
/// all 2^n_ctrl actions, bit for bit, and greedy() returns that threshold.
Result decomposition(int max_ctrl, int trials, std::uint64_t seed);

/// Central differences (step 1e-6) against backward() on random networks of
/// at most 3 layers and 16 units; norm-wise relative error per network.
Result gradients(int networks, double tolerance, std::uint64_t seed);

/// Exhaustive rate >= random-action rate on every realization, and the
/// complement of the best action reaches the best rate exactly.
Result oracle_symmetry(int realizations, int n_ctrl, std::uint64_t seed);

/// Ricean power split and free-space pathloss power, 3-standard-error bounds.
Result channel_statistics(int draws, std::uint64_t seed);

/// Two identical runs give identical CSV rows apart from wall time.
Result determinism(const ExperimentConfig& config, AgentKind agent, int n, std::uint64_t seed);

/// Reduced-size versions of every check above.
std::vector<Result> quick_suite();

}  // namespace risbin::check
