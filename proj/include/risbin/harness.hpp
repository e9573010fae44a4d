#pragma once

// Experiment orchestration: seeded train/evaluate runs, sweeps over agents x
// N x seeds, CSV output and per-(agent, N) aggregation.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "risbin/agents.hpp"
#include "risbin/channel.hpp"
#include "risbin/env.hpp"

namespace risbin {

enum class AgentKind { bin_dqn, bin_ddpg, dqn, random, exhaustive };

std::string_view to_string(AgentKind kind);
AgentKind agent_from_string(std::string_view name);

struct ExperimentConfig {
  std::vector<AgentKind> agents{AgentKind::bin_dqn};
  std::vector<int> n_values{16};
  int k = 4;
  int n_group = 1;
  int train_steps = 10000;
  int eval_steps = 1500;
  std::vector<std::uint64_t> seeds{0};

  Geometry geometry;  // ris_elements / bs_antennas are set per cell from N and k
  ChannelParams channel;
  bool normalize_observation = true;

  // obs_dim / n_ctrl are filled in per cell.
  BinDqnConfig bin_dqn;
  DqnConfig dqn;
  BinDdpgConfig bin_ddpg;
  int oracle_max_ctrl = 22;
  int threads = 0;  // 0: RISBINRL_THREADS, else hardware concurrency

  void validate() const;
  EnvConfig env_for(int n) const;
};

/// "default", "toy" (N = 8, 5000 steps), "small" (N = 10..110, groups of 5,
/// all agents) and "large" (square N up to 1500, bin agents + random,
/// 20000 steps).
ExperimentConfig preset(std::string_view name);

/// Applies flat key/value settings; unknown keys throw ConfigError.
void apply_settings(ExperimentConfig& config, const nlohmann::json& settings);
ExperimentConfig load_config(const std::filesystem::path& path, std::string_view base_preset = "default");

/// Trunk shorthand: "default", "dense:<layers>:<units>[:<dropout>]" or
/// "conv:<convs>:<channels>:<kernel>:<pool>:<dense layers>:<units>[:<dropout>]".
std::vector<nn::LayerSpec> parse_trunk(std::string_view text, bool ddpg);

struct RunRecord {
  std::string agent;
  int N = 0;
  int K = 0;
  int n_group = 1;
  std::uint64_t seed = 0;
  int train_steps = 0;
  int eval_steps = 0;
  double mean_rate = 0.0;
  double std_rate = 0.0;
  double wall_time_s = 0.0;
  // Not serialized: checks on the evaluation protocol.
  std::uint64_t eval_checksum = 0;           // hash of the evaluation channel sequence
  std::uint64_t params_before_eval = 0;
  std::uint64_t params_after_eval = 0;
  std::vector<double> eval_rates;             // per-step rewards, kept when requested
};

struct RunOptions {
  bool keep_eval_rates = false;
  /// Called every `progress_every` training steps with (step, mean reward so far).
  std::function<void(int, double)> on_progress;
  int progress_every = 1000;
};

std::unique_ptr<Agent> make_agent(const ExperimentConfig& config, AgentKind kind, int n, Rng& init_rng);

/// Trains (learning agents only) for train_steps with exploration, then
/// evaluates eval_steps greedy decisions on the evaluation sequence shared by
/// every agent with the same (N, K, seed).
RunRecord run_single(const ExperimentConfig& config, AgentKind agent, int n, std::uint64_t seed,
                     const RunOptions& options = {});

inline constexpr std::string_view kCsvHeader =
    "agent,N,K,n_group,seed,train_steps,eval_steps,mean_rate,std_rate,wall_time_s";

std::string to_csv_row(const RunRecord& r);
RunRecord parse_csv_row(std::string_view line);
/// Reads every data row; throws ConfigError naming the line on malformed input.
std::vector<RunRecord> read_csv(const std::filesystem::path& path);

/// Runs every agents x N x seeds cell not already present in `csv_path`,
/// appending one row per completed run. Failed cells are reported on stderr
/// and skipped. Returns the records of the runs executed, in cell order.
std::vector<RunRecord> run_sweep(const ExperimentConfig& config, const std::filesystem::path& csv_path,
                                 const RunOptions& options = {});

struct AggregateRow {
  std::string agent;
  int N = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation across seeds
};

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records);

/// Worker count: RISBINRL_THREADS when set, else `fallback`, else hardware.
int worker_count(int fallback = 0);

/// Pins Eigen's blocking parameters so matrix products sum in the same order
/// on every machine.
void configure_numerics();

}  // namespace risbin
