#pragma once

// Versioned agent checkpoints.
//
// Layout: the line "risbin-checkpoint <version>\n", a decimal byte count and
// newline, that many bytes of JSON metadata (network specs, array shapes,
// optimizer settings, step counter), then every array's doubles as raw
// little-endian IEEE-754 in metadata order. Lossless at 64-bit precision.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "risbin/approximator.hpp"

namespace risbin {

inline constexpr int kCheckpointVersion = 1;

struct OptimizerSnapshot {
  nn::OptimizerConfig config;
  std::int64_t steps = 0;
  nn::ParamSet first_moment;
  nn::ParamSet second_moment;
};

struct NetworkState {
  std::string name;
  nn::NetworkSpec spec;
  nn::NetworkParams params;
  std::optional<OptimizerSnapshot> optimizer;
};

struct Checkpoint {
  std::string agent;
  std::int64_t step = 0;
  std::vector<NetworkState> networks;

  const NetworkState& network(const std::string& name) const;
};

OptimizerSnapshot snapshot(const nn::Optimizer& opt);
nn::Optimizer restore_optimizer(const OptimizerSnapshot& snap);

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace risbin
