#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "boxrl/config.hpp"

using namespace boxrl;
using nlohmann::json;

namespace {

RunConfig tweaked() {
  RunConfig c;
  c.group_size = 4;
  c.clip_eps = 0.3;
  c.kl_beta = 0.01;
  c.temperature = 0.7;
  c.max_length = 48;
  c.max_new_tokens = 12;
  c.lambda_tok = 0.25;
  c.eps_tok = 1.5;
  c.reward_mode = RewardMode::binary;
  c.flags = ModulationFlags{};
  c.learning_rate = 1e-3;
  c.batch_size = 16;
  c.total_steps = 10;
  c.warmup_steps = 5;
  c.warmup_batch = 8;
  c.warmup_learning_rate = 2e-3;
  c.window = 6;
  c.d_emb = 8;
  c.d_hid = 32;
  c.init_std = 0.1;
  c.tasks.arith_fraction = 0.25;
  c.tasks.min_difficulty = 1;
  c.tasks.max_difficulty = 2;
  c.splits.train = 200;
  c.splits.validation = 40;
  c.splits.heldout = 50;
  c.seed = 77;
  c.eval_interval = 5;
  c.checkpoint_interval = 10;
  c.out_dir = "/tmp/somewhere";
  return c;
}

bool config_equal(const RunConfig& a, const RunConfig& b) {
  return a.to_json() == b.to_json();
}

}  // namespace

TEST_CASE("default config validates") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("json round-trip preserves every field") {
  RunConfig c = tweaked();
  c.validate();
  RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(config_equal(c, back));
}

TEST_CASE("file round-trip via save/load") {
  RunConfig c = tweaked();
  const std::string path =
      (std::filesystem::temp_directory_path() / "boxrl_config_roundtrip.json").string();
  c.save(path);
  RunConfig back = RunConfig::load(path);
  CHECK(config_equal(c, back));
  std::remove(path.c_str());
  CHECK_THROWS_AS((void)RunConfig::load(path), std::exception);
}

TEST_CASE("unknown keys are rejected with the key name") {
  json j = RunConfig().to_json();
  j["learning_rte"] = 0.1;  // typo must not be silently ignored
  try {
    (void)RunConfig::from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "learning_rte");
  }
}

TEST_CASE("type errors surface as ConfigError naming the field") {
  json j = RunConfig().to_json();
  j["batch_size"] = "lots";
  CHECK_THROWS_AS((void)RunConfig::from_json(j), ConfigError);

  json k = RunConfig().to_json();
  k["reward_mode"] = "bogus";
  CHECK_THROWS_AS((void)RunConfig::from_json(k), ConfigError);

  CHECK_THROWS_AS((void)RunConfig::from_json(json::array()), ConfigError);
}

TEST_CASE("validate rejects out-of-range fields one by one") {
  auto expect_fail = [](void (*mutate)(RunConfig&), const std::string& field) {
    RunConfig c;
    mutate(c);
    try {
      c.validate();
      FAIL("expected ConfigError for " << field);
    } catch (const ConfigError& e) {
      CHECK(e.field() == field);
    }
  };

  expect_fail([](RunConfig& c) { c.group_size = 1; }, "group_size");
  expect_fail([](RunConfig& c) { c.clip_eps = 0.0; }, "clip_eps");
  expect_fail([](RunConfig& c) { c.kl_beta = -0.1; }, "kl_beta");
  expect_fail([](RunConfig& c) { c.temperature = -1.0; }, "temperature");
  expect_fail([](RunConfig& c) { c.max_length = 3; }, "max_length");
  expect_fail([](RunConfig& c) { c.max_new_tokens = 0; }, "max_new_tokens");
  expect_fail([](RunConfig& c) { c.lambda_tok = 1.0; }, "lambda_tok");
  expect_fail([](RunConfig& c) { c.lambda_tok = -0.1; }, "lambda_tok");
  expect_fail([](RunConfig& c) { c.eps_tok = 0.0; }, "eps_tok");
  expect_fail([](RunConfig& c) { c.flags = ModulationFlags{false, true, false}; },
              "flags");
  expect_fail([](RunConfig& c) { c.flags = ModulationFlags{false, false, true}; },
              "flags");
  expect_fail([](RunConfig& c) { c.learning_rate = 0.0; }, "learning_rate");
  expect_fail([](RunConfig& c) { c.warmup_learning_rate = -1e-4; },
              "warmup_learning_rate");
  expect_fail([](RunConfig& c) { c.batch_size = 0; }, "batch_size");
  expect_fail([](RunConfig& c) { c.total_steps = -1; }, "total_steps");
  expect_fail([](RunConfig& c) { c.warmup_steps = -1; }, "warmup_steps");
  expect_fail([](RunConfig& c) { c.warmup_batch = 0; }, "warmup_batch");
  expect_fail([](RunConfig& c) { c.window = 0; }, "window");
  expect_fail([](RunConfig& c) { c.d_emb = 0; }, "d_emb");
  expect_fail([](RunConfig& c) { c.d_hid = 0; }, "d_hid");
  expect_fail([](RunConfig& c) { c.init_std = 0.0; }, "init_std");
  expect_fail([](RunConfig& c) { c.tasks.arith_fraction = 1.5; },
              "tasks.arith_fraction");
  expect_fail([](RunConfig& c) { c.tasks.min_difficulty = 0; }, "tasks.difficulty");
  expect_fail([](RunConfig& c) { c.tasks.max_difficulty = 4; }, "tasks.difficulty");
  expect_fail([](RunConfig& c) {
    c.tasks.min_difficulty = 3;
    c.tasks.max_difficulty = 2;
  }, "tasks.difficulty");
  expect_fail([](RunConfig& c) { c.splits.train = 0; }, "splits.train");
  expect_fail([](RunConfig& c) { c.splits.validation = -1; }, "splits.validation");
  expect_fail([](RunConfig& c) { c.splits.heldout = -1; }, "splits.heldout");
  expect_fail([](RunConfig& c) { c.eval_interval = -1; }, "eval_interval");
  expect_fail([](RunConfig& c) { c.checkpoint_interval = -1; },
              "checkpoint_interval");
}

TEST_CASE("temperature zero is a legal greedy setting") {
  RunConfig c;
  c.temperature = 0.0;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("partial json fills the remaining fields with defaults") {
  json j{{"seed", 9}, {"reward_mode", "binary"}, {"total_steps", 3}};
  RunConfig c = RunConfig::from_json(j);
  CHECK(c.seed == 9);
  CHECK(c.reward_mode == RewardMode::binary);
  CHECK(c.total_steps == 3);
  CHECK(c.group_size == RunConfig().group_size);
  CHECK(c.window == RunConfig().window);
}
