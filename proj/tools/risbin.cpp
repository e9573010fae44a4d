// risbin: train and evaluate RIS configuration agents from the command line.
//
//   risbin run      --agent bin-dqn --n 8 --seed 0
//   risbin sweep    --preset small --out results/small.csv
//   risbin oracle   --in realization.json        (or --dump with --n/--k/--seed)
//   risbin selftest

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "risbin/baselines.hpp"
#include "risbin/errors.hpp"
#include "risbin/harness.hpp"
#include "risbin/selftest.hpp"

using namespace risbin;

namespace {

struct CommonFlags {
  std::string config;
  std::string preset = "default";
  std::vector<std::string> agents;
  std::vector<int> n;
  std::optional<int> k;
  std::optional<int> group;
  std::vector<std::uint64_t> seeds;
  std::optional<int> train_steps;
  std::optional<int> eval_steps;
  std::string out;
  bool verbose = false;
};

void add_common(CLI::App* app, CommonFlags& f, bool with_preset) {
  app->add_option("--config", f.config, "JSON config file (flat keys)");
  if (with_preset) app->add_option("--preset", f.preset, "default, toy, small or large");
  app->add_option("--agent", f.agents, "bin-dqn, bin-ddpg, dqn, random, exhaustive")->delimiter(',');
  app->add_option("--n", f.n, "RIS elements")->delimiter(',');
  app->add_option("--k", f.k, "BS antennas");
  app->add_option("--group", f.group, "elements per control bit");
  app->add_option("--seed", f.seeds, "run seeds")->delimiter(',');
  app->add_option("--train-steps", f.train_steps);
  app->add_option("--eval-steps", f.eval_steps);
  app->add_option("--out", f.out, "CSV file to append to");
  app->add_flag("-v,--verbose", f.verbose, "report training progress on stderr");
}

ExperimentConfig build_config(const CommonFlags& f) {
  ExperimentConfig c = f.config.empty() ? preset(f.preset) : load_config(f.config, f.preset);
  if (!f.agents.empty()) {
    c.agents.clear();
    for (const auto& a : f.agents) c.agents.push_back(agent_from_string(a));
  }
  if (!f.n.empty()) c.n_values = f.n;
  if (f.k) c.k = *f.k;
  if (f.group) c.n_group = *f.group;
  if (!f.seeds.empty()) c.seeds = f.seeds;
  if (f.train_steps) c.train_steps = *f.train_steps;
  if (f.eval_steps) c.eval_steps = *f.eval_steps;
  c.validate();
  return c;
}

RunOptions progress_options(bool verbose) {
  RunOptions o;
  if (verbose)
    o.on_progress = [](int step, double mean) { std::cerr << "  step " << step << "  mean reward " << mean << '\n'; };
  return o;
}

int cmd_run(const CommonFlags& f) {
  const ExperimentConfig c = build_config(f);
  if (c.agents.size() != 1 || c.n_values.size() != 1 || c.seeds.size() != 1)
    throw ConfigError("run takes exactly one agent, one N and one seed; use sweep for more");
  const RunRecord r = run_single(c, c.agents[0], c.n_values[0], c.seeds[0], progress_options(f.verbose));
  std::cout << kCsvHeader << '\n' << to_csv_row(r) << '\n';
  if (!f.out.empty()) {
    const bool fresh = !std::filesystem::exists(f.out) || std::filesystem::file_size(f.out) == 0;
    std::ofstream out(f.out, std::ios::binary | std::ios::app);
    if (fresh) out << kCsvHeader << '\n';
    out << to_csv_row(r) << '\n';
    if (!out) throw ConfigError("cannot write " + f.out);
  }
  return 0;
}

int cmd_sweep(const CommonFlags& f) {
  const ExperimentConfig c = build_config(f);
  const std::string out = f.out.empty() ? "results.csv" : f.out;
  const auto records = run_sweep(c, out, progress_options(f.verbose));
  std::cerr << records.size() << " runs appended to " << out << '\n';
  const auto all = read_csv(out);
  std::cout << "agent,N,runs,mean_rate,std_rate\n";
  for (const auto& row : aggregate(all))
    std::cout << row.agent << ',' << row.N << ',' << row.count << ',' << row.mean << ',' << row.std << '\n';
  return 0;
}

nlohmann::json complex_array(const Eigen::MatrixXcd& m) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    arr.push_back(row);
  }
  return arr;
}

Eigen::MatrixXcd complex_matrix(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigError(std::string(what) + " must be a nested array");
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != j[0].size()) throw ConfigError(std::string(what) + " rows differ in length");
    for (std::size_t c = 0; c < j[i].size(); ++c) {
      const auto& z = j[i][c];
      if (!z.is_array() || z.size() != 2) throw ConfigError(std::string(what) + " entries must be [re, im]");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = {z[0].get<double>(), z[1].get<double>()};
    }
  }
  return m;
}

// Realization file: {"H": [[[re, im], ...] x K] x N, "g": [[[re, im]] x N]}
// plus optional "tx_power_dbm", "noise_power_dbm".
int cmd_oracle(const CommonFlags& f, const std::string& in, bool dump) {
  if (dump) {
    ExperimentConfig c = build_config(f);
    const EnvConfig env = c.env_for(c.n_values.at(0));
    const ChannelModel model(env.geometry, env.channel);
    Rng rng(c.seeds.at(0), Stream::eval);
    const ChannelRealization ch = model.sample(rng);
    nlohmann::json j;
    j["H"] = complex_array(ch.H);
    j["g"] = complex_array(ch.g);
    const std::string text = j.dump(1) + '\n';
    if (f.out.empty()) std::cout << text;
    else std::ofstream(f.out) << text;
    return 0;
  }
  if (in.empty()) throw ConfigError("oracle needs --in FILE (or --dump)");
  std::ifstream file(in);
  if (!file) throw ConfigError("cannot open " + in);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(file);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(in + ": " + e.what());
  }
  ChannelRealization ch;
  ch.H = complex_matrix(j.at("H"), "H");
  ch.g = complex_matrix(j.at("g"), "g").col(0);
  if (ch.g.size() != ch.H.rows()) throw ConfigError("g must have one entry per row of H");
  ChannelParams params;
  if (j.contains("tx_power_dbm")) params.tx_power = dbm_to_watts(j["tx_power_dbm"].get<double>());
  if (j.contains("noise_power_dbm")) params.noise_power = dbm_to_watts(j["noise_power_dbm"].get<double>());
  OracleOptions opts;
  opts.n_group = f.group.value_or(1);
  const OracleResult r = exhaustive_search(ch, params, opts);
  std::string bits;
  for (auto b : r.best_action.bits) bits += b ? '1' : '0';
  nlohmann::json out{{"action", bits}, {"index", r.best_index}, {"rate", r.best_rate}, {"evaluations", r.evaluations}};
  std::cout << out.dump() << '\n';
  return 0;
}

int cmd_selftest() {
  bool ok = true;
  for (const auto& r : check::quick_suite()) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary-action reinforcement learning for 1-bit RIS configuration"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, oracle_flags;
  auto* run = app.add_subcommand("run", "train and evaluate one (agent, N, seed) cell");
  add_common(run, run_flags, true);
  auto* sweep = app.add_subcommand("sweep", "run agents x N x seeds, appending to a CSV");
  add_common(sweep, sweep_flags, true);
  auto* oracle = app.add_subcommand("oracle", "exhaustive search on a dumped channel realization");
  add_common(oracle, oracle_flags, false);
  std::string oracle_in;
  bool oracle_dump = false;
  oracle->add_option("--in", oracle_in, "realization JSON");
  oracle->add_flag("--dump", oracle_dump, "write a sampled realization instead (uses --n, --k, --seed)");
  auto* selftest = app.add_subcommand("selftest", "quick invariant checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_flags);
    if (*sweep) return cmd_sweep(sweep_flags);
    if (*oracle) return cmd_oracle(oracle_flags, oracle_in, oracle_dump);
    if (*selftest) return cmd_selftest();
  } catch (const RefusalError& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
