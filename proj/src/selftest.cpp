#include "risbin/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "risbin/approximator.hpp"
#include "risbin/baselines.hpp"
#include "risbin/channel.hpp"
#include "risbin/env.hpp"

namespace risbin::check {

namespace {

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

Eigen::VectorXd normal_vector(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

// Scalar loss sum(w_h .* out_h) over heads.
double weighted_loss(const nn::ParamSet& p, const nn::NetworkSpec& spec, const Eigen::MatrixXd& x,
                     const std::vector<Eigen::MatrixXd>& w, const Rng& mask_rng) {
  Rng r = mask_rng;
  const auto out = nn::forward(p, nn::Mode::train, spec, x, &r);
  double s = 0.0;
  for (std::size_t h = 0; h < out.size(); ++h) s += out[h].cwiseProduct(w[h]).sum();
  return s;
}

nn::NetworkSpec random_small_spec(Rng& rng) {
  nn::NetworkSpec spec;
  const nn::Activation acts[] = {nn::Activation::tanh, nn::Activation::relu, nn::Activation::linear};
  spec.input_dim = 4 + static_cast<int>(rng.below(13));
  const int hidden = 1 + static_cast<int>(rng.below(2));
  int length = spec.input_dim;
  for (int l = 0; l < hidden; ++l) {
    switch (rng.below(4)) {
      case 0:  // conv + pool block
        if (length >= 6) {
          const int k = 2 + static_cast<int>(rng.below(2));
          spec.layers.push_back(nn::LayerSpec::conv1d(1 + static_cast<int>(rng.below(3)), k));
          length -= k - 1;
          // both activation placements: before the pool, or after it as in conv_trunk
          const bool act_first = rng.bernoulli(0.5);
          if (act_first) spec.layers.push_back(nn::LayerSpec::act(acts[rng.below(3)]));
          spec.layers.push_back(nn::LayerSpec::maxpool1d(2));
          length /= 2;
          if (!act_first) spec.layers.push_back(nn::LayerSpec::act(acts[rng.below(3)]));
          break;
        }
        [[fallthrough]];
      default: {
        const int units = 2 + static_cast<int>(rng.below(15));
        spec.layers.push_back(nn::LayerSpec::dense(units));
        spec.layers.push_back(nn::LayerSpec::act(acts[rng.below(3)]));
        if (rng.bernoulli(0.5)) spec.layers.push_back(nn::LayerSpec::dropout(0.2));
        length = units;
      }
    }
  }
  spec.heads.push_back({"a", 1, nn::Activation::linear});
  spec.heads.push_back({"b", 1 + static_cast<int>(rng.below(4)), rng.bernoulli(0.5) ? nn::Activation::tanh
                                                                                   : nn::Activation::linear});
  return spec;
}

}  // namespace

Result decomposition(int max_ctrl, int trials, std::uint64_t seed) {
  Result res{"decomposition", true, ""};
  Rng rng(seed, Stream::init);
  long mismatches = 0;
  for (int n = 1; n <= max_ctrl; ++n) {
    BinDqnConfig cfg;
    cfg.obs_dim = 6;
    cfg.n_ctrl = n;
    cfg.trunk = nn::dense_trunk(2, 16, 0.0, nn::Activation::tanh);
    const std::uint64_t total = std::uint64_t{1} << n;
    for (int t = 0; t < trials; ++t) {
      BinDqnAgent agent(cfg, rng);
      const Observation obs = normal_vector(cfg.obs_dim, rng);
      const auto heads = agent.heads(obs);
      const RisAction chosen = binq::threshold(heads.q);
      const double chosen_q = binq::q_value(heads.q0, heads.q, chosen);
      double brute = -INFINITY;
      for (std::uint64_t idx = 0; idx < total; ++idx)
        brute = std::max(brute, binq::q_value(heads.q0, heads.q, action_from_index(idx, n)));
      if (chosen_q != brute || binq::max_q(heads.q0, heads.q) != brute || !(agent.greedy(obs) == chosen)) {
        ++mismatches;
        if (res.detail.empty()) res.detail = "first mismatch at n_ctrl " + std::to_string(n);
      }
    }
  }
  res.passed = mismatches == 0;
  res.detail = std::to_string(mismatches) + " mismatches over " + std::to_string(max_ctrl * trials) + " cases" +
               (res.detail.empty() ? "" : "; " + res.detail);
  return res;
}

Result gradients(int networks, double tolerance, std::uint64_t seed) {
  Rng rng(seed, Stream::init);
  double worst = 0.0;
  int failures = 0;
  constexpr double h = 1e-6;
  for (int net = 0; net < networks; ++net) {
    const nn::NetworkSpec spec = random_small_spec(rng);
    nn::ParamSet p = nn::init_params(spec, rng).values;
    const int batch = 1 + static_cast<int>(rng.below(3));
    Eigen::MatrixXd x(spec.input_dim, batch);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    std::vector<Eigen::MatrixXd> w;
    for (const auto& hs : spec.heads) {
      Eigen::MatrixXd m(hs.output_dim, batch);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
      w.push_back(m);
    }
    const Rng mask_rng = rng.fork(static_cast<std::uint64_t>(net) + 100);

    nn::Tape tape;
    Rng r = mask_rng;
    nn::forward(p, nn::Mode::train, spec, x, &r, &tape);
    const nn::Gradients g = nn::backward(p, spec, tape, w);

    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    auto probe = [&](double& slot, double analytic) {
      const double orig = slot;
      slot = orig + h;
      const double up = weighted_loss(p, spec, x, w, mask_rng);
      slot = orig - h;
      const double down = weighted_loss(p, spec, x, w, mask_rng);
      slot = orig;
      const double numeric = (up - down) / (2 * h);
      diff2 += (analytic - numeric) * (analytic - numeric);
      a2 += analytic * analytic;
      n2 += numeric * numeric;
    };
    for (std::size_t s = 0; s < p.weights.size(); ++s) {
      for (Eigen::Index i = 0; i < p.weights[s].size(); ++i) probe(p.weights[s].data()[i], g.params.weights[s].data()[i]);
      for (Eigen::Index i = 0; i < p.biases[s].size(); ++i) probe(p.biases[s].data()[i], g.params.biases[s].data()[i]);
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) probe(x.data()[i], g.input.data()[i]);

    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
    const double rel = std::sqrt(diff2) / denom;
    worst = std::max(worst, rel);
    if (!(rel <= tolerance)) ++failures;
  }
  return {"gradients", failures == 0,
          "worst relative error " + fmt(worst) + " over " + std::to_string(networks) + " networks, " +
              std::to_string(failures) + " above " + fmt(tolerance)};
}

Result oracle_symmetry(int realizations, int n_ctrl, std::uint64_t seed) {
  Geometry geom;
  geom.ris_elements = n_ctrl;
  ChannelParams params;
  const ChannelModel model(geom, params);
  Rng rng(seed, Stream::eval);
  Rng coin(seed, Stream::baseline);
  int dominance = 0, symmetry = 0;
  for (int t = 0; t < realizations; ++t) {
    const ChannelRealization ch = model.sample(rng);
    const OracleResult best = exhaustive_search(ch, params);
    const Eigen::VectorXcd c = cascade(ch.H, ch.g);
    const double r_rand = rate(snr_from_cascade(c, action_to_reflection(random_action(n_ctrl, coin), 1), params.snr_scale()));
    const double r_comp =
        rate(snr_from_cascade(c, action_to_reflection(best.best_action.complement(), 1), params.snr_scale()));
    if (!(best.best_rate >= r_rand)) ++dominance;
    if (r_comp != best.best_rate) ++symmetry;
  }
  return {"oracle-symmetry", dominance == 0 && symmetry == 0,
          std::to_string(dominance) + " dominance and " + std::to_string(symmetry) + " complement violations over " +
              std::to_string(realizations) + " realizations"};
}

Result channel_statistics(int draws, std::uint64_t seed) {
  Rng rng(seed, Stream::train);
  std::ostringstream detail;
  bool ok = true;
  auto within = [&](const char* what, double est, double expected, double se) {
    const double z = (est - expected) / se;
    detail << what << " z=" << fmt(z) << "; ";
    if (!(std::abs(z) <= 3.0)) ok = false;
  };

  // Power split: residual after removing the LoS term has variance 1/(k+1).
  const double kappa = 1000.0;
  Eigen::MatrixXcd los(1, 1);
  los(0, 0) = std::polar(1.0, 0.7);
  const double los_amp = std::sqrt(kappa / (kappa + 1.0));
  double s1 = 0.0, s2 = 0.0;
  std::complex<double> mean = 0.0;
  for (int t = 0; t < draws; ++t) {
    const auto out = sample_ricean(los, kappa, 1.0, rng)(0, 0);
    const double p = std::norm(out - los_amp * los(0, 0));
    s1 += p;
    s2 += p * p;
    mean += out;
  }
  const double m = s1 / draws;
  const double var_p = s2 / draws - m * m;
  within("scatter power", m, 1.0 / (kappa + 1.0), std::sqrt(var_p / draws));
  mean /= static_cast<double>(draws);
  const double mean_se = std::sqrt(0.5 / (kappa + 1.0) / draws);
  within("mean re", mean.real(), los_amp * los(0, 0).real(), mean_se);
  within("mean im", mean.imag(), los_amp * los(0, 0).imag(), mean_se);

  // Pathloss: per-entry mean power equals (lambda / 4 pi d)^2 for both links.
  Geometry geom;
  geom.ris_elements = 4;
  geom.bs_antennas = 2;
  ChannelParams params;
  const ChannelModel model(geom, params);
  double h1 = 0.0, h2 = 0.0, g1 = 0.0, g2 = 0.0;
  for (int t = 0; t < draws; ++t) {
    const auto ch = model.sample(rng);
    const double ph = std::norm(ch.H(0, 0)), pg = std::norm(ch.g(0));
    h1 += ph;
    h2 += ph * ph;
    g1 += pg;
    g2 += pg * pg;
  }
  const double d_h = (geom.ris_pos - geom.bs_pos).norm();
  const double d_g = (geom.ue_pos - geom.ris_pos).norm();
  const double mh = h1 / draws, mg = g1 / draws;
  within("BS-RIS power", mh, std::pow(pathloss(d_h, params.carrier_freq), 2), std::sqrt((h2 / draws - mh * mh) / draws));
  within("RIS-UE power", mg, std::pow(pathloss(d_g, params.carrier_freq), 2), std::sqrt((g2 / draws - mg * mg) / draws));
  return {"channel-statistics", ok, detail.str()};
}

Result determinism(const ExperimentConfig& config, AgentKind agent, int n, std::uint64_t seed) {
  auto row = [&] {
    RunRecord r = run_single(config, agent, n, seed);
    r.wall_time_s = 0.0;
    return to_csv_row(r);
  };
  const std::string a = row();
  const std::string b = row();
  return {"determinism", a == b, a == b ? "identical rows: " + a : "rows differ:\n  " + a + "\n  " + b};
}

std::vector<Result> quick_suite() {
  std::vector<Result> out;
  out.push_back(decomposition(8, 100, 11));
  out.push_back(gradients(20, 1e-4, 12));
  out.push_back(oracle_symmetry(100, 8, 13));
  out.push_back(channel_statistics(20000, 14));
  ExperimentConfig cfg;
  cfg.n_values = {8};
  cfg.train_steps = 300;
  cfg.eval_steps = 50;
  cfg.bin_dqn.trunk = nn::dense_trunk(2, 32, 0.2);
  cfg.bin_dqn.batch_size = 16;
  out.push_back(determinism(cfg, AgentKind::bin_dqn, 8, 15));
  return out;
}

}  // namespace risbin::check
