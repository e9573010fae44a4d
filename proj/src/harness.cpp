#include "risbin/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#if defined(__GLIBC__)
#include <malloc.h>
#endif
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "risbin/baselines.hpp"
#include "risbin/errors.hpp"

namespace risbin {

namespace {

constexpr std::pair<AgentKind, std::string_view> kAgentNames[] = {
    {AgentKind::bin_dqn, "bin-dqn"},
    {AgentKind::bin_ddpg, "bin-ddpg"},
    {AgentKind::dqn, "dqn"},
    {AgentKind::random, "random"},
    {AgentKind::exhaustive, "exhaustive"},
};

// Per-cell seed so that (seed, N, K) cells draw unrelated sequences while
// every agent in the cell shares them.
std::uint64_t cell_seed(std::uint64_t seed, int n, int k) {
  std::uint64_t state = seed;
  std::uint64_t h = splitmix64(state);
  state = h ^ (static_cast<std::uint64_t>(n) << 20) ^ static_cast<std::uint64_t>(k);
  return splitmix64(state);
}

class Fnv {
 public:
  void add(const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h_ ^= p[i];
      h_ *= 1099511628211ULL;
    }
  }
  void add(const ChannelRealization& ch) {
    add(ch.H.data(), sizeof(std::complex<double>) * static_cast<std::size_t>(ch.H.size()));
    add(ch.g.data(), sizeof(std::complex<double>) * static_cast<std::size_t>(ch.g.size()));
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 1469598103934665603ULL;
};

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw NumericError("cannot format number");
  return std::string(buf, end);
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size())
    throw ConfigError("malformed " + std::string(what) + ": '" + std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Eigen::Vector3d json_vec3(const nlohmann::json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 3) throw ConfigError(key + " must be an array of three numbers");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

std::optional<std::pair<double, double>> json_clip(const nlohmann::json& v, const std::string& key) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_array() || v.size() != 2) throw ConfigError(key + " must be null or [lo, hi]");
  return std::pair{v[0].get<double>(), v[1].get<double>()};
}

nn::OptimizerKind json_optimizer(const nlohmann::json& v, const std::string& key) {
  const auto s = v.get<std::string>();
  if (s == "sgd") return nn::OptimizerKind::sgd;
  if (s == "adam") return nn::OptimizerKind::adam;
  throw ConfigError(key + " must be \"sgd\" or \"adam\"");
}

template <typename T>
std::vector<T> json_list(const nlohmann::json& v) {
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

// Settings shared by the two DQN flavours.
bool apply_dqn_like(const std::string& field, const nlohmann::json& v, const std::string& key,
                    std::vector<nn::LayerSpec>& trunk, nn::OptimizerConfig& opt, int& batch, double& epsilon,
                    int& period, double& tau, double& discount, std::size_t& capacity, bool& dropout_acting) {
  if (field == "learning_rate") opt.learning_rate = v.get<double>();
  else if (field == "optimizer") opt.kind = json_optimizer(v, key);
  else if (field == "clip") opt.clip = json_clip(v, key);
  else if (field == "batch_size") batch = v.get<int>();
  else if (field == "epsilon") epsilon = v.get<double>();
  else if (field == "target_period") period = v.get<int>();
  else if (field == "tau") tau = v.get<double>();
  else if (field == "discount") discount = v.get<double>();
  else if (field == "replay_capacity") capacity = v.get<std::size_t>();
  else if (field == "dropout_when_acting") dropout_acting = v.get<bool>();
  else if (field == "trunk") trunk = parse_trunk(v.get<std::string>(), false);
  else return false;
  return true;
}

}  // namespace

std::string_view to_string(AgentKind kind) {
  for (const auto& [k, name] : kAgentNames)
    if (k == kind) return name;
  return "?";
}

AgentKind agent_from_string(std::string_view name) {
  for (const auto& [k, n] : kAgentNames)
    if (n == name) return k;
  throw ConfigError("unknown agent '" + std::string(name) +
                    "' (expected bin-dqn, bin-ddpg, dqn, random or exhaustive)");
}

void ExperimentConfig::validate() const {
  if (agents.empty()) throw ConfigError("agent list is empty");
  if (n_values.empty()) throw ConfigError("N list is empty");
  if (seeds.empty()) throw ConfigError("seed list is empty");
  if (k < 1) throw ConfigError("K must be >= 1");
  if (n_group < 1) throw ConfigError("n_group must be >= 1");
  if (train_steps < 0) throw ConfigError("train_steps must be >= 0");
  if (eval_steps < 1) throw ConfigError("eval_steps must be >= 1");
  for (int n : n_values) {
    if (n < 1) throw ConfigError("N must be >= 1");
    if (n % n_group != 0)
      throw ConfigError("N = " + std::to_string(n) + " is not divisible by n_group = " + std::to_string(n_group));
  }
  channel.validate();
}

EnvConfig ExperimentConfig::env_for(int n) const {
  EnvConfig env;
  env.geometry = geometry;
  env.geometry.ris_elements = n;
  env.geometry.bs_antennas = k;
  env.channel = channel;
  env.n_group = n_group;
  env.normalize_observation = normalize_observation;
  env.validate();
  return env;
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  if (name == "default") return c;
  if (name == "toy") {
    c.agents = {AgentKind::bin_dqn, AgentKind::bin_ddpg, AgentKind::random, AgentKind::exhaustive};
    c.n_values = {8};
    c.k = 4;
    c.train_steps = 5000;
    c.seeds = {0, 1, 2};
    return c;
  }
  if (name == "small") {
    c.agents = {AgentKind::bin_dqn, AgentKind::bin_ddpg, AgentKind::dqn, AgentKind::random, AgentKind::exhaustive};
    c.n_values.clear();
    for (int n = 10; n <= 110; n += 10) c.n_values.push_back(n);
    c.n_group = 5;
    c.seeds = {0, 1, 2};
    return c;
  }
  if (name == "large") {
    c.agents = {AgentKind::bin_dqn, AgentKind::bin_ddpg, AgentKind::random};
    c.n_values.clear();
    // Squares below 9 are too short for the convolutional trunk.
    for (int r = 3; r * r <= 1500; ++r) c.n_values.push_back(r * r);
    c.n_group = 1;
    c.train_steps = 20000;
    c.seeds = {0, 1, 2};
    return c;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected default, toy, small or large)");
}

std::vector<nn::LayerSpec> parse_trunk(std::string_view text, bool ddpg) {
  if (text == "default") return ddpg ? default_ddpg_trunk() : default_dqn_trunk();
  const auto parts = split(text, ':');
  auto num = [&](std::size_t i) { return parse_number<int>(parts[i], "trunk field"); };
  auto drop = [&](std::size_t i) {
    if (parts.size() <= i) return 0.0;
    return parse_number<double>(parts[i], "trunk dropout");
  };
  if (parts[0] == "dense" && (parts.size() == 3 || parts.size() == 4)) return nn::dense_trunk(num(1), num(2), drop(3));
  if (parts[0] == "conv" && (parts.size() == 7 || parts.size() == 8))
    return nn::conv_trunk(num(1), num(2), num(3), num(4), num(5), num(6), drop(7));
  throw ConfigError("malformed trunk '" + std::string(text) + "'");
}

void apply_settings(ExperimentConfig& c, const nlohmann::json& settings) {
  if (!settings.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, v] : settings.items()) {
    try {
      const auto dot = key.find('.');
      if (dot != std::string::npos) {
        const std::string group = key.substr(0, dot);
        const std::string field = key.substr(dot + 1);
        bool known = false;
        if (group == "bin_dqn") {
          auto& a = c.bin_dqn;
          known = apply_dqn_like(field, v, key, a.trunk, a.optimizer, a.batch_size, a.epsilon, a.target_period,
                                 a.tau, a.discount, a.replay_capacity, a.dropout_when_acting);
        } else if (group == "dqn") {
          auto& a = c.dqn;
          known = apply_dqn_like(field, v, key, a.trunk, a.optimizer, a.batch_size, a.epsilon, a.target_period,
                                 a.tau, a.discount, a.replay_capacity, a.dropout_when_acting);
          if (!known && field == "max_ctrl") {
            a.max_ctrl = v.get<int>();
            known = true;
          }
        } else if (group == "bin_ddpg") {
          auto& a = c.bin_ddpg;
          known = true;
          if (field == "actor_learning_rate") a.actor_optimizer.learning_rate = v.get<double>();
          else if (field == "critic_learning_rate") a.critic_optimizer.learning_rate = v.get<double>();
          else if (field == "actor_optimizer") a.actor_optimizer.kind = json_optimizer(v, key);
          else if (field == "critic_optimizer") a.critic_optimizer.kind = json_optimizer(v, key);
          else if (field == "actor_clip") a.actor_optimizer.clip = json_clip(v, key);
          else if (field == "critic_clip") a.critic_optimizer.clip = json_clip(v, key);
          else if (field == "actor_trunk") a.actor_trunk = parse_trunk(v.get<std::string>(), true);
          else if (field == "critic_trunk") a.critic_trunk = parse_trunk(v.get<std::string>(), true);
          else if (field == "batch_size") a.batch_size = v.get<int>();
          else if (field == "target_period") a.target_period = v.get<int>();
          else if (field == "tau") a.tau = v.get<double>();
          else if (field == "discount") a.discount = v.get<double>();
          else if (field == "ou_mu") a.ou_mu = v.get<double>();
          else if (field == "ou_theta") a.ou_theta = v.get<double>();
          else if (field == "ou_sigma_start") a.ou_sigma_start = v.get<double>();
          else if (field == "ou_sigma_end") a.ou_sigma_end = v.get<double>();
          else if (field == "replay_capacity") a.replay_capacity = v.get<std::size_t>();
          else if (field == "dropout_when_acting") a.dropout_when_acting = v.get<bool>();
          else known = false;
        }
        if (!known) throw ConfigError("unknown config key '" + key + "'");
        continue;
      }
      if (key == "agent" || key == "agents") {
        c.agents.clear();
        for (const auto& name : json_list<std::string>(v)) c.agents.push_back(agent_from_string(name));
      } else if (key == "n" || key == "N") c.n_values = json_list<int>(v);
      else if (key == "k" || key == "K") c.k = v.get<int>();
      else if (key == "group" || key == "n_group") c.n_group = v.get<int>();
      else if (key == "seed" || key == "seeds") c.seeds = json_list<std::uint64_t>(v);
      else if (key == "train_steps") c.train_steps = v.get<int>();
      else if (key == "eval_steps") c.eval_steps = v.get<int>();
      else if (key == "bs_pos") c.geometry.bs_pos = json_vec3(v, key);
      else if (key == "ue_pos") c.geometry.ue_pos = json_vec3(v, key);
      else if (key == "ris_pos") c.geometry.ris_pos = json_vec3(v, key);
      else if (key == "element_spacing") {
        if (v.is_null()) c.geometry.element_spacing.reset();
        else c.geometry.element_spacing = v.get<double>();
      } else if (key == "carrier_freq_hz") c.channel.carrier_freq = v.get<double>();
      else if (key == "ricean_kappa") c.channel.ricean_kappa = v.get<double>();
      else if (key == "ricean_kappa_db") c.channel.ricean_kappa = db_to_linear(v.get<double>());
      else if (key == "tx_power_dbm") c.channel.tx_power = dbm_to_watts(v.get<double>());
      else if (key == "noise_power_dbm") c.channel.noise_power = dbm_to_watts(v.get<double>());
      else if (key == "normalize_observation") c.normalize_observation = v.get<bool>();
      else if (key == "oracle_max_ctrl") c.oracle_max_ctrl = v.get<int>();
      else if (key == "threads") c.threads = v.get<int>();
      else throw ConfigError("unknown config key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path, std::string_view base_preset) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  std::string base(base_preset);
  if (j.is_object() && j.contains("preset")) {
    base = j["preset"].get<std::string>();
    j.erase("preset");
  }
  ExperimentConfig c = preset(base);
  apply_settings(c, j);
  return c;
}

std::unique_ptr<Agent> make_agent(const ExperimentConfig& config, AgentKind kind, int n, Rng& init_rng) {
  const EnvConfig env = config.env_for(n);
  switch (kind) {
    case AgentKind::bin_dqn: {
      BinDqnConfig a = config.bin_dqn;
      a.obs_dim = env.obs_dim();
      a.n_ctrl = env.n_ctrl();
      return std::make_unique<BinDqnAgent>(std::move(a), init_rng);
    }
    case AgentKind::dqn: {
      DqnConfig a = config.dqn;
      a.obs_dim = env.obs_dim();
      a.n_ctrl = env.n_ctrl();
      return std::make_unique<VanillaDqnAgent>(std::move(a), init_rng);
    }
    case AgentKind::bin_ddpg: {
      BinDdpgConfig a = config.bin_ddpg;
      a.obs_dim = env.obs_dim();
      a.n_ctrl = env.n_ctrl();
      return std::make_unique<BinDdpgAgent>(std::move(a), init_rng);
    }
    default:
      throw UsageError(std::string(to_string(kind)) + " is not a learning agent");
  }
}

void configure_numerics() {
  static std::once_flag once;
  std::call_once(once, [] {
    Eigen::setCpuCacheSizes(32 * 1024, 1024 * 1024, 8 * 1024 * 1024);
#if defined(__GLIBC__)
    // Activation buffers of the convolutional trunk run to tens of MB; served
    // by mmap they are faulted in afresh on every pass, which doubles the
    // cost of a training step. Keep them on the heap and reuse them.
    mallopt(M_MMAP_MAX, 0);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  });
}

RunRecord run_single(const ExperimentConfig& config, AgentKind kind, int n, std::uint64_t seed,
                     const RunOptions& options) {
  configure_numerics();
  config.validate();
  const EnvConfig env_cfg = config.env_for(n);
  const std::uint64_t base = cell_seed(seed, n, config.k);
  const auto t0 = std::chrono::steady_clock::now();

  RunRecord rec;
  rec.agent = std::string(to_string(kind));
  rec.N = n;
  rec.K = config.k;
  rec.n_group = config.n_group;
  rec.seed = seed;
  rec.train_steps = (kind == AgentKind::random || kind == AgentKind::exhaustive) ? 0 : config.train_steps;
  rec.eval_steps = config.eval_steps;

  std::unique_ptr<Agent> agent;
  const bool learner = kind == AgentKind::bin_dqn || kind == AgentKind::bin_ddpg || kind == AgentKind::dqn;
  OracleOptions oracle{config.n_group, config.oracle_max_ctrl, true};
  if (kind == AgentKind::exhaustive && env_cfg.n_ctrl() > oracle.max_ctrl)
    throw RefusalError("exhaustive search over 2^" + std::to_string(env_cfg.n_ctrl()) +
                       " configurations exceeds the cap 2^" + std::to_string(oracle.max_ctrl));

  if (learner) {
    Rng init_rng(base, Stream::init);
    agent = make_agent(config, kind, n, init_rng);

    RisEnvironment env(env_cfg, Rng(base, Stream::train));
    Rng explore(base, Stream::explore);
    ReplayBuffer buffer(agent->replay_capacity());
    auto obs = std::make_shared<const Observation>(env.reset());
    double reward_sum = 0.0;
    for (int t = 0; t < config.train_steps; ++t) {
      agent->set_progress(static_cast<double>(t) / config.train_steps);
      const Decision d = agent->act(*obs, explore);
      StepResult sr = env.step(d.action);
      auto next = std::make_shared<const Observation>(std::move(sr.next_observation));
      buffer.push(Transition{obs, d.replay_action, sr.reward, next});
      reward_sum += sr.reward;
      try {
        agent->train_step(buffer, explore);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " [agent " + rec.agent + ", N " + std::to_string(n) + ", seed " +
                           std::to_string(seed) + ", step " + std::to_string(t) + "]");
      }
      obs = std::move(next);
      if (options.on_progress && options.progress_every > 0 && (t + 1) % options.progress_every == 0)
        options.on_progress(t + 1, reward_sum / (t + 1));
    }
    rec.params_before_eval = agent->parameter_checksum();
  }

  // Evaluation: same stream for every agent of the cell, greedy decisions.
  RisEnvironment env(env_cfg, Rng(base, Stream::eval));
  Rng baseline_rng(base, Stream::baseline);
  Observation obs = env.reset();
  Fnv seq;
  std::vector<double> rates;
  rates.reserve(static_cast<std::size_t>(config.eval_steps));
  for (int t = 0; t < config.eval_steps; ++t) {
    seq.add(env.current());
    RisAction action;
    switch (kind) {
      case AgentKind::random:
        action = random_action(env_cfg.n_ctrl(), baseline_rng);
        break;
      case AgentKind::exhaustive:
        action = exhaustive_search(env.current(), env_cfg.channel, oracle).best_action;
        break;
      default:
        action = agent->greedy(obs);
    }
    StepResult sr = env.step(action);
    rates.push_back(sr.reward);
    obs = std::move(sr.next_observation);
  }
  if (learner) rec.params_after_eval = agent->parameter_checksum();
  rec.eval_checksum = seq.value();

  double sum = 0.0;
  for (double r : rates) sum += r;
  rec.mean_rate = sum / static_cast<double>(rates.size());
  double ss = 0.0;
  for (double r : rates) ss += (r - rec.mean_rate) * (r - rec.mean_rate);
  rec.std_rate = std::sqrt(ss / static_cast<double>(rates.size()));
  if (!std::isfinite(rec.mean_rate)) throw NumericError("non-finite evaluation rate for " + rec.agent);
  if (options.keep_eval_rates) rec.eval_rates = std::move(rates);
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::string to_csv_row(const RunRecord& r) {
  std::string s;
  s += r.agent;
  s += ',' + std::to_string(r.N);
  s += ',' + std::to_string(r.K);
  s += ',' + std::to_string(r.n_group);
  s += ',' + std::to_string(r.seed);
  s += ',' + std::to_string(r.train_steps);
  s += ',' + std::to_string(r.eval_steps);
  s += ',' + format_double(r.mean_rate);
  s += ',' + format_double(r.std_rate);
  s += ',' + format_double(r.wall_time_s);
  return s;
}

RunRecord parse_csv_row(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto f = split(line, ',');
  if (f.size() != 10) throw ConfigError("CSV row has " + std::to_string(f.size()) + " fields, expected 10");
  RunRecord r;
  r.agent = std::string(f[0]);
  r.N = parse_number<int>(f[1], "N");
  r.K = parse_number<int>(f[2], "K");
  r.n_group = parse_number<int>(f[3], "n_group");
  r.seed = parse_number<std::uint64_t>(f[4], "seed");
  r.train_steps = parse_number<int>(f[5], "train_steps");
  r.eval_steps = parse_number<int>(f[6], "eval_steps");
  r.mean_rate = parse_number<double>(f[7], "mean_rate");
  r.std_rate = parse_number<double>(f[8], "std_rate");
  r.wall_time_s = parse_number<double>(f[9], "wall_time_s");
  return r;
}

std::vector<RunRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<RunRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("agent,", 0) == 0) continue;
    try {
      out.push_back(parse_csv_row(line));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

int worker_count(int fallback) {
  int n = fallback > 0 ? fallback : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("RISBINRL_THREADS"); env && *env) {
    const int cap = parse_number<int>(env, "RISBINRL_THREADS");
    if (cap < 1) throw ConfigError("RISBINRL_THREADS must be >= 1");
    n = std::min(n, cap);
  }
  return n;
}

std::vector<RunRecord> run_sweep(const ExperimentConfig& config, const std::filesystem::path& csv_path,
                                 const RunOptions& options) {
  config.validate();

  using Key = std::tuple<std::string, int, int, int, std::uint64_t, int, int>;
  auto key_of = [](const RunRecord& r) {
    return Key{r.agent, r.N, r.K, r.n_group, r.seed, r.train_steps, r.eval_steps};
  };
  std::set<Key> done;
  bool need_header = true;
  if (std::filesystem::exists(csv_path) && std::filesystem::file_size(csv_path) > 0) {
    need_header = false;
    for (const auto& r : read_csv(csv_path)) done.insert(key_of(r));
  }

  struct Cell {
    AgentKind agent;
    int n;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (AgentKind a : config.agents)
    for (int n : config.n_values)
      for (std::uint64_t s : config.seeds) {
        RunRecord probe;
        probe.agent = std::string(to_string(a));
        probe.N = n;
        probe.K = config.k;
        probe.n_group = config.n_group;
        probe.seed = s;
        probe.train_steps = (a == AgentKind::random || a == AgentKind::exhaustive) ? 0 : config.train_steps;
        probe.eval_steps = config.eval_steps;
        if (!done.count(key_of(probe))) cells.push_back({a, n, s});
      }

  std::mutex io;
  if (need_header) {
    if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
    std::ofstream out(csv_path, std::ios::binary | std::ios::app);
    out << kCsvHeader << '\n';
    if (!out) throw ConfigError("cannot write " + csv_path.string());
  }

  std::vector<std::optional<RunRecord>> results(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& cell = cells[i];
      try {
        RunRecord r = run_single(config, cell.agent, cell.n, cell.seed, options);
        const std::string row = to_csv_row(r) + '\n';
        std::lock_guard lock(io);
        std::ofstream out(csv_path, std::ios::binary | std::ios::app);
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
        out.flush();
        results[i] = std::move(r);
      } catch (const std::exception& e) {
        std::lock_guard lock(io);
        std::cerr << "run failed: agent " << to_string(cell.agent) << ", N " << cell.n << ", seed " << cell.seed
                  << ": " << e.what() << '\n';
      }
    }
  };

  const int n_workers = std::min<int>(worker_count(config.threads), static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  std::vector<RunRecord> out;
  for (auto& r : results)
    if (r) out.push_back(std::move(*r));
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records) {
  std::map<std::pair<std::string, int>, std::vector<double>> groups;
  for (const auto& r : records) groups[{r.agent, r.N}].push_back(r.mean_rate);
  std::vector<AggregateRow> out;
  for (const auto& [key, values] : groups) {
    AggregateRow row;
    row.agent = key.first;
    row.N = key.second;
    row.count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    row.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - row.mean) * (v - row.mean);
    row.std = std::sqrt(ss / static_cast<double>(values.size()));
    out.push_back(row);
  }
  return out;
}

}  // namespace risbin
