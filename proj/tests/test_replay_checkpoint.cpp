#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "risbin/agents.hpp"
#include "risbin/checkpoint.hpp"
#include "risbin/errors.hpp"
#include "risbin/replay.hpp"

using namespace risbin;

namespace {

Transition tagged(double r) {
  auto o = std::make_shared<Observation>(Observation::Constant(2, r));
  return {o, Eigen::VectorXd::Constant(1, r), r, o};
}

}  // namespace

TEST_CASE("replay ring evicts the oldest entry") {
  ReplayBuffer buf(3);
  CHECK(buf.empty());
  for (int i = 0; i < 5; ++i) buf.push(tagged(i));
  CHECK(buf.size() == 3);
  CHECK(buf.capacity() == 3);
  CHECK(buf.at(0).reward == 2);
  CHECK(buf.at(1).reward == 3);
  CHECK(buf.at(2).reward == 4);
  CHECK_THROWS_AS(buf.at(3), ConfigError);
  CHECK_THROWS_AS(ReplayBuffer(0), ConfigError);
  Rng rng(1);
  CHECK_THROWS_AS(ReplayBuffer(4).sample(1, rng), UsageError);
}

TEST_CASE("replay sampling is uniform") {
  ReplayBuffer buf(1000);
  for (int i = 0; i < 1500; ++i) buf.push(tagged(i));
  Rng rng(2);
  std::vector<int> counts(1000, 0);
  const int draws = 100000;
  for (auto i : buf.sample_indices(draws, rng)) ++counts.at(i);
  const double e = draws / 1000.0;
  double chi2 = 0;
  for (int c : counts) chi2 += (c - e) * (c - e) / e;
  // 99th percentile of chi-square with 999 degrees of freedom.
  CHECK(chi2 < 1105.9169575045823);

  for (const Transition* t : buf.sample(50, rng)) CHECK(t->reward >= 500);
}

TEST_CASE("checkpoint round trip is lossless") {
  BinDdpgConfig c;
  c.obs_dim = 6;
  c.n_ctrl = 3;
  c.actor_trunk = nn::dense_trunk(2, 8, 0.2);
  c.critic_trunk = nn::dense_trunk(1, 8, 0.0);
  c.batch_size = 4;
  Rng rng(3);
  BinDdpgAgent a(c, rng);
  ReplayBuffer buf(10);
  for (int i = 0; i < 10; ++i) {
    auto o = std::make_shared<Observation>(Observation::Random(6));
    buf.push({o, Eigen::VectorXd::Random(3), 1.0, o});
  }
  for (int i = 0; i < 3; ++i) a.train_step(buf, rng);

  std::stringstream s;
  write_checkpoint(s, a.checkpoint());
  const Checkpoint back = read_checkpoint(s);
  CHECK(back.agent == "bin-ddpg");
  CHECK(back.step == 3);
  CHECK(back.network("actor").spec == a.actor_spec());
  CHECK(back.network("actor").optimizer->steps == 3);

  Rng other(4);
  BinDdpgAgent b(c, other);
  b.restore(back);
  CHECK(b.parameter_checksum() == a.parameter_checksum());

  const auto path = std::filesystem::temp_directory_path() / "risbin_test_ckpt.bin";
  save_checkpoint(path, a.checkpoint());
  BinDdpgAgent d(c, other);
  d.restore(load_checkpoint(path));
  CHECK(d.parameter_checksum() == a.parameter_checksum());
  std::filesystem::remove(path);

  CHECK_THROWS_AS(back.network("missing"), ConfigError);
  BinDqnConfig q;
  q.obs_dim = 6;
  q.n_ctrl = 3;
  q.trunk = nn::dense_trunk(1, 4, 0.0);
  BinDqnAgent wrong(q, rng);
  CHECK_THROWS_AS(wrong.restore(back), ConfigError);
}

TEST_CASE("malformed checkpoints are rejected") {
  std::stringstream bad("not-a-checkpoint 1\n2\n{}");
  CHECK_THROWS_AS(read_checkpoint(bad), ConfigError);
  std::stringstream future("risbin-checkpoint 99\n2\n{}");
  CHECK_THROWS_AS(read_checkpoint(future), ConfigError);

  BinDqnConfig q;
  q.obs_dim = 3;
  q.n_ctrl = 2;
  q.trunk = nn::dense_trunk(1, 4, 0.0);
  Rng rng(5);
  std::stringstream s;
  write_checkpoint(s, BinDqnAgent(q, rng).checkpoint());
  std::string text = s.str();
  text.resize(text.size() - 9);
  std::stringstream cut(text);
  CHECK_THROWS_AS(read_checkpoint(cut), ConfigError);
}
