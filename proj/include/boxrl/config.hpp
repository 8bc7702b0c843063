#pragma once
// Run configuration: one struct covering sampling, objective, modulation,
// model shape, task generation, and output plumbing. JSON on disk.

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "boxrl/advantage.hpp"
#include "boxrl/policy.hpp"
#include "boxrl/rewards.hpp"
#include "boxrl/tasks.hpp"

namespace boxrl {

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::invalid_argument("config field '" + field + "': " + message),
        field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RunConfig {
  // group sampling and objective
  int group_size = 8;
  double clip_eps = 0.2;
  double kl_beta = 0.001;
  double temperature = 1.0;
  int max_length = 64;       // hard cap on any assembled token sequence
  int max_new_tokens = 16;   // response length cap during sampling

  // token-level modulation
  double lambda_tok = 0.1;
  double eps_tok = 2.0;
  RewardMode reward_mode = RewardMode::generalthinker;
  ModulationFlags flags{true, true, true};

  // optimization
  double learning_rate = 3e-4;
  int batch_size = 8;    // prompts per step
  int total_steps = 400;
  AdamConfig adam{};

  // warm-up (supervised on gold traces; the reference snapshot freezes after)
  int warmup_steps = 150;
  int warmup_batch = 32;
  double warmup_learning_rate = 0.0;  // 0 = inherit learning_rate

  // model
  int window = 8;
  int d_emb = 16;
  int d_hid = 64;
  double init_std = 0.08;

  // data
  TaskMix tasks{};
  SplitCounts splits{};

  // run plumbing
  std::uint64_t seed = 1;
  int eval_interval = 0;        // 0 = endpoints only
  int checkpoint_interval = 0;  // 0 = final checkpoint only
  std::string out_dir;
  std::string vocab_file;  // optional: load the token table instead of built-in

  void validate() const;  // throws ConfigError naming the offending field

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);  // unknown keys rejected
  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace boxrl
