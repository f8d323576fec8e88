#include <doctest.h>

#include <fstream>

#include "support/common.hpp"
#include "wifisense/config/run_config.hpp"
#include "wifisense/error.hpp"

using namespace wifisense;
using namespace wifisense::config;

TEST_SUITE("config") {

TEST_CASE("defaults map onto the library configs") {
  const RunConfig c;
  CHECK(window_config(c).length == 10);
  CHECK(window_config(c).hop == 10);
  CHECK(sync_policy(c).receivers == 3);
  CHECK(sync_policy(c).wrap_threshold == (std::uint64_t{1} << 31));
  CHECK(repair_config(c).displacement_threshold == 0.15);
  CHECK(pck_config(c).alphas == std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5});
  const auto t = tednet_config(c);
  CHECK(t.heads == 8);
  CHECK(t.ffn_width == 1536);
  CHECK_FALSE(t.share_encoder_weights);
  const auto d = dgnn_config(c);
  CHECK(d.window == 30);
  CHECK(d.dropout == 0.5);
  CHECK(d.is_reference());
  CHECK(dataset_config(c).actions.size() == 5);
  CHECK(action_train_config(c).batch_size == 32);
  CHECK(pose_train_config(c).adam.lr == 0.0003);
}

TEST_CASE("unknown keys and bad values are rejected") {
  RunConfig c;
  CHECK_THROWS_AS(c.set("tednet.depth", "3"), ConfigError);
  CHECK_THROWS_AS(c.set("tednet.heads", "eight"), ConfigError);
  CHECK_THROWS_AS(c.set("tednet.heads", "8.5"), ConfigError);
  CHECK_THROWS_AS(c.set("tednet.share_encoder_weights", "yes"), ConfigError);
  CHECK_THROWS_AS(c.set("eval.alphas", "0.1,x"), ConfigError);
  CHECK_THROWS_AS(c.set("dgnn.temporal_edge_mode", ""), ConfigError);
  CHECK_THROWS_AS(c.set_assignment("tednet.heads"), ConfigError);
  CHECK_THROWS_AS(c.real("tednet.heads"), ConfigError);
  c.set("synth.seed", "-1");
  CHECK_THROWS_AS(c.unsigned_integer("synth.seed"), ConfigError);
  c.set("synth.actions", "stand,jump");
  CHECK_THROWS_AS(dataset_config(c), ConfigError);
  try {
    c.set("train_pose.lrate", "1");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("train_pose.lrate") != std::string::npos);
  }
}

TEST_CASE("files merge on top of defaults and round trip") {
  const auto dir = testing::scratch_dir("config");
  {
    std::ofstream f(dir / "a.cfg");
    f << "# comment\n\ntednet.heads = 4   # trailing\n eval.alphas = 0.25, 0.5\n";
  }
  RunConfig c = RunConfig::load(dir / "a.cfg");
  CHECK(c.integer("tednet.heads") == 4);
  CHECK(c.reals("eval.alphas") == std::vector<double>{0.25, 0.5});
  c.set_assignment("dgnn.dropout=0.25");
  CHECK(c.real("dgnn.dropout") == 0.25);

  c.write(dir / "b.cfg");
  const RunConfig back = RunConfig::load(dir / "b.cfg");
  CHECK(back.dump() == c.dump());
  CHECK(back.dump() != RunConfig().dump());

  {
    std::ofstream f(dir / "bad.cfg");
    f << "tednet.heads = 4\nnonsense line\n";
  }
  try {
    RunConfig::load(dir / "bad.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  CHECK_THROWS_AS(RunConfig::load(dir / "missing.cfg"), ConfigError);
}

TEST_CASE("help lists every key with its default") {
  const std::string help = config_help();
  const RunConfig c;
  const std::string dump = c.dump();
  for (const auto& k : config_keys()) {
    CAPTURE(k.key);
    CHECK(help.find(k.key + " = " + k.default_value) != std::string::npos);
    CHECK(dump.find(k.key + " = " + k.default_value + "\n") != std::string::npos);
    CHECK_NOTHROW(RunConfig().set(k.key, k.default_value));
  }
}

}  // TEST_SUITE
