#pragma once

#include <cstdint>

#include "risbin/channel.hpp"
#include "risbin/env.hpp"
#include "risbin/rng.hpp"

namespace risbin {

/// Each bit IID Bernoulli(1/2).
RisAction random_action(int n_ctrl, Rng& rng);

struct OracleResult {
  RisAction best_action;
  double best_rate = 0.0;
  std::uint64_t best_index = 0;
  std::uint64_t evaluations = 0;
};

struct OracleOptions {
  int n_group = 1;
  int max_ctrl = 22;
  /// Visit configurations in Gray-code order, updating the received
  /// amplitude in O(1) per step. Candidates are re-scored with the exact
  /// per-element sum, so the result is bitwise identical to the naive path.
  bool gray_code = true;
};

/// Maximum-rate configuration over all 2^n_ctrl actions; ties go to the
/// smallest configuration index (see action_from_index). Throws
/// RefusalError above max_ctrl.
OracleResult exhaustive_search(const ChannelRealization& ch, const ChannelParams& params,
                               const OracleOptions& options = {});

}  // namespace risbin
