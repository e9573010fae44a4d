// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   risbin-acceptance [--only A1,A4] [--results DIR] [-v]
//
// Learning runs are appended to CSVs under --results and reused on the next
// invocation (runs are deterministic); delete the directory to recompute.

#include <array>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "risbin/harness.hpp"
#include "risbin/selftest.hpp"

using namespace risbin;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed;
  std::string detail;
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

// mean_rate per (agent, seed) for the given N.
using Table = std::map<std::string, std::map<std::uint64_t, double>>;

Table sweep(const ExperimentConfig& c, const fs::path& csv, bool verbose) {
  RunOptions opts;
  if (verbose) opts.on_progress = [](int step, double mean) { std::cerr << "    step " << step << "  " << mean << '\n'; };
  run_sweep(c, csv, opts);
  Table t;
  for (const auto& r : read_csv(csv)) {
    if (r.N != c.n_values.at(0) || r.K != c.k || r.n_group != c.n_group) continue;
    const bool learner = r.agent != "random" && r.agent != "exhaustive";
    if (learner && r.train_steps != c.train_steps) continue;
    if (r.eval_steps != c.eval_steps) continue;
    t[r.agent][r.seed] = r.mean_rate;
  }
  return t;
}

Outcome from_check(const check::Result& r) { return {r.passed, r.detail}; }

Outcome a4(const fs::path& dir, bool verbose) {
  ExperimentConfig c = preset("toy");
  const Table t = sweep(c, dir / "a4_toy.csv", verbose);
  bool ok = true;
  std::string detail;
  for (const char* agent : {"bin-dqn", "bin-ddpg"}) {
    int good = 0;
    detail += std::string(agent) + " [";
    for (std::uint64_t s : c.seeds) {
      const double v = t.at(agent).at(s);
      const double ex = v / t.at("exhaustive").at(s);
      const double rnd = v / t.at("random").at(s);
      good += ex >= 0.85 && rnd >= 1.10;
      detail += " " + fmt(100 * ex, 3) + "%/" + fmt(100 * rnd, 3) + "%";
    }
    detail += " ] " + std::to_string(good) + "/3 seeds; ";
    ok = ok && good >= 2;
  }
  return {ok, detail + "of exhaustive/of random, need >= 85%/110% in 2 of 3"};
}

Outcome a5(const fs::path& dir, bool verbose) {
  ExperimentConfig c = preset("default");
  c.agents = {AgentKind::random, AgentKind::bin_ddpg, AgentKind::bin_dqn};
  c.n_values = {64};
  c.k = 8;
  c.seeds = {0, 1, 2};
  const Table t = sweep(c, dir / "a5_n64.csv", verbose);
  bool ok = true;
  std::string detail;
  for (const char* agent : {"bin-dqn", "bin-ddpg"}) {
    int good = 0;
    detail += std::string(agent) + " [";
    for (std::uint64_t s : c.seeds) {
      const double ratio = t.at(agent).at(s) / t.at("random").at(s);
      good += ratio >= 1.5;
      detail += " " + fmt(ratio, 3) + "x";
    }
    detail += " ] " + std::to_string(good) + "/3 seeds; ";
    ok = ok && good >= 2;
  }
  return {ok, detail + "need >= 1.5x random in 2 of 3"};
}

Outcome a6(const fs::path& dir, bool verbose) {
  ExperimentConfig c = preset("default");
  c.agents = {AgentKind::random, AgentKind::exhaustive, AgentKind::dqn, AgentKind::bin_dqn};
  c.n_values = {20};
  c.n_group = 5;
  c.seeds = {0, 1, 2};
  const Table t = sweep(c, dir / "a6_grouped.csv", verbose);
  auto mean = [&](const char* agent) {
    double s = 0;
    for (std::uint64_t seed : c.seeds) s += t.at(agent).at(seed);
    return s / static_cast<double>(c.seeds.size());
  };
  const double b = mean("bin-dqn"), d = mean("dqn");
  const double gap = std::abs(b - d) / d;
  return {gap <= 0.10, "bin-dqn " + fmt(b) + ", dqn " + fmt(d) + ", gap " + fmt(100 * gap, 3) +
                           "% (need <= 10%); exhaustive " + fmt(mean("exhaustive")) + ", random " + fmt(mean("random"))};
}

std::string capture(const std::string& cmd, int& status) {
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) {
    status = -1;
    return out;
  }
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  status = pclose(p);
  return out;
}

std::string strip_wall_time(const std::string& output) {
  std::istringstream in(output);
  std::string line, body;
  while (std::getline(in, line)) body += line.substr(0, line.rfind(',')) + '\n';
  return body;
}

Outcome a8() {
  std::string detail;
  bool ok = true;
  for (const char* agent : {"bin-dqn", "bin-ddpg"}) {
    const std::string cmd = std::string("'") + RISBIN_CLI_PATH + "' run --agent " + agent +
                            " --n 8 --k 4 --seed 3 --train-steps 1000 --eval-steps 300 2>/dev/null";
    int s1 = 0, s2 = 0;
    const std::string a = capture(cmd, s1), b = capture(cmd, s2);
    const bool same = s1 == 0 && s2 == 0 && !a.empty() && strip_wall_time(a) == strip_wall_time(b);
    ok = ok && same;
    detail += std::string(agent) + (same ? " identical" : " DIFFERENT") + "; ";
    if (!same) detail += "\n  " + a + "  " + b;
  }
  return {ok, detail + "two `run` invocations, rows compared without wall_time"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria A1-A8"};
  std::vector<std::string> only;
  std::string results = "acceptance-results";
  bool verbose = false;
  app.add_option("--only", only, "subset of criteria, e.g. A1,A3")->delimiter(',');
  app.add_option("--results", results, "directory for learning-run CSVs");
  app.add_flag("-v,--verbose", verbose);
  CLI11_PARSE(app, argc, argv);

  const std::set<std::string> selected(only.begin(), only.end());
  const fs::path dir = results;
  fs::create_directories(dir);
  configure_numerics();

  struct Criterion {
    const char* id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"A1", "decomposition", [] { return from_check(check::decomposition(12, 1000, 1)); }},
      {"A2", "gradients", [] { return from_check(check::gradients(100, 1e-4, 2)); }},
      {"A3", "oracle and symmetry", [] { return from_check(check::oracle_symmetry(1000, 8, 3)); }},
      {"A4", "toy-scale learning", [&] { return a4(dir, verbose); }},
      {"A5", "moderate-N gain", [&] { return a5(dir, verbose); }},
      {"A6", "parity with vanilla DQN", [&] { return a6(dir, verbose); }},
      {"A7", "channel statistics", [] { return from_check(check::channel_statistics(100000, 7)); }},
      {"A8", "determinism", [] { return a8(); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.passed;
    std::cout << (o.passed ? "PASS " : "FAIL ") << c.id << " " << c.title << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
