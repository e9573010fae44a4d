#include "risbin/baselines.hpp"

#include <bit>
#include <complex>
#include <string>
#include <vector>

#include "risbin/errors.hpp"

namespace risbin {

RisAction random_action(int n_ctrl, Rng& rng) {
  if (n_ctrl < 1) throw ConfigError("n_ctrl must be >= 1");
  RisAction a = RisAction::zeros(n_ctrl);
  for (auto& b : a.bits) b = static_cast<std::uint8_t>(rng() >> 63);
  return a;
}

namespace {

struct Best {
  double rate = -1.0;
  std::uint64_t index = 0;

  void offer(double r, std::uint64_t idx) {
    if (r > rate || (r == rate && idx < index)) {
      rate = r;
      index = idx;
    }
  }
};

double exact_rate(const Eigen::VectorXcd& c, std::uint64_t index, int n_ctrl, int n_group, double snr_scale) {
  return rate(snr_from_cascade(c, action_to_reflection(action_from_index(index, n_ctrl), n_group), snr_scale));
}

}  // namespace

OracleResult exhaustive_search(const ChannelRealization& ch, const ChannelParams& params,
                               const OracleOptions& options) {
  params.validate();
  if (options.n_group < 1) throw ConfigError("n_group must be >= 1");
  const auto n = static_cast<int>(ch.g.size());
  if (n % options.n_group != 0) throw ConfigError("N must be divisible by n_group");
  const int n_ctrl = n / options.n_group;
  if (n_ctrl > options.max_ctrl || n_ctrl > 62)
    throw RefusalError("exhaustive search over 2^" + std::to_string(n_ctrl) + " configurations exceeds the cap 2^" +
                       std::to_string(options.max_ctrl));

  const Eigen::VectorXcd c = cascade(ch.H, ch.g);
  const double scale = params.snr_scale();
  const std::uint64_t total = std::uint64_t{1} << n_ctrl;
  Best best;

  if (!options.gray_code) {
    for (std::uint64_t idx = 0; idx < total; ++idx) best.offer(exact_rate(c, idx, n_ctrl, options.n_group, scale), idx);
  } else {
    // Group sums; bit i of the configuration index (MSB first) controls group i.
    std::vector<std::complex<double>> group(static_cast<std::size_t>(n_ctrl), 0.0);
    for (int i = 0; i < n_ctrl; ++i)
      for (int e = 0; e < options.n_group; ++e) group[static_cast<std::size_t>(i)] += c(i * options.n_group + e);

    std::complex<double> amp = 0.0;  // all bits zero: every phase +1
    for (const auto& gsum : group) amp += gsum;

    // Each incremental update adds at most a few ulps of sum|c| to the
    // running amplitude, so |amp_exact| <= |amp| + drift for every index
    // visited. Skip an index only when even that bound cannot reach the
    // current best rate.
    double magnitude = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) magnitude += std::abs(c(i));
    const double drift = 1e-8 * magnitude;

    std::uint64_t gray = 0;
    for (std::uint64_t step = 0; step < total; ++step) {
      if (step > 0) {
        const int flipped_bit = std::countr_zero(step);  // Gray code flips this bit of the index
        gray ^= std::uint64_t{1} << flipped_bit;
        const auto g = static_cast<std::size_t>(n_ctrl - 1 - flipped_bit);
        const bool now_set = (gray >> flipped_bit) & 1U;
        amp += (now_set ? -2.0 : 2.0) * group[g];
      }
      const double bound = std::abs(amp) + drift;
      if (rate(scale * bound * bound) >= best.rate) {
        best.offer(exact_rate(c, gray, n_ctrl, options.n_group, scale), gray);
      }
    }
  }

  OracleResult result;
  result.best_index = best.index;
  result.best_action = action_from_index(best.index, n_ctrl);
  result.best_rate = best.rate;
  result.evaluations = total;
  return result;
}

}  // namespace risbin
