#pragma once

#include <array>
#include <cstdint>

namespace risbin {

/// Named sub-streams of a run. A (seed, stream) pair fully determines a
/// generator, so the same run seed gives independent sequences per purpose.
enum class Stream : std::uint64_t {
  init = 1,      // network weight initialization
  train = 2,     // training-phase channel realizations
  eval = 3,      // evaluation-phase channel realizations (shared by all agents)
  explore = 4,   // exploration decisions, dropout masks, replay sampling
  baseline = 5,  // random-configuration baseline draws
};

/// xoshiro256** with splitmix64 seeding.
///
/// Distributions are implemented here instead of through <random> so that
/// every stream is bit-identical across standard library implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);
  Rng(std::uint64_t seed, Stream stream) : Rng(seed, static_cast<std::uint64_t>(stream)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Marsaglia polar method).
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Derives an independent generator for a child stream.
  Rng fork(std::uint64_t stream);

 private:
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace risbin
