#include "boxrl/config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace boxrl {

using nlohmann::json;

void RunConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& msg) {
    throw ConfigError(field, msg);
  };
  if (group_size < 2) fail("group_size", "must be at least 2");
  if (!(clip_eps > 0.0)) fail("clip_eps", "must be positive");
  if (kl_beta < 0.0) fail("kl_beta", "must be non-negative");
  if (temperature < 0.0) fail("temperature", "must be non-negative");
  if (max_length < 4) fail("max_length", "must be at least 4");
  if (max_new_tokens < 1) fail("max_new_tokens", "must be at least 1");
  if (!(lambda_tok >= 0.0 && lambda_tok < 1.0))
    fail("lambda_tok", "must be in [0, 1)");
  if (!(eps_tok > 0.0)) fail("eps_tok", "must be positive");
  if ((flags.tc || flags.dp) && !flags.am)
    fail("flags", "token clipping / direction preservation require advantage modulation");
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be positive");
  if (batch_size < 1) fail("batch_size", "must be at least 1");
  if (total_steps < 0) fail("total_steps", "must be non-negative");
  if (warmup_steps < 0) fail("warmup_steps", "must be non-negative");
  if (warmup_batch < 1) fail("warmup_batch", "must be at least 1");
  if (!(warmup_learning_rate >= 0.0))
    fail("warmup_learning_rate", "must be non-negative (0 inherits learning_rate)");
  if (window < 1) fail("window", "must be at least 1");
  if (d_emb < 1) fail("d_emb", "must be at least 1");
  if (d_hid < 1) fail("d_hid", "must be at least 1");
  if (!(init_std > 0.0)) fail("init_std", "must be positive");
  if (!(tasks.arith_fraction >= 0.0 && tasks.arith_fraction <= 1.0))
    fail("tasks.arith_fraction", "must be in [0, 1]");
  if (tasks.min_difficulty < 1 || tasks.max_difficulty > 3 ||
      tasks.min_difficulty > tasks.max_difficulty)
    fail("tasks.difficulty", "range must lie within {1, 2, 3}");
  if (splits.train < 1) fail("splits.train", "must be at least 1");
  if (splits.validation < 0) fail("splits.validation", "must be non-negative");
  if (splits.heldout < 0) fail("splits.heldout", "must be non-negative");
  if (eval_interval < 0) fail("eval_interval", "must be non-negative");
  if (checkpoint_interval < 0) fail("checkpoint_interval", "must be non-negative");
}

json RunConfig::to_json() const {
  json j;
  j["group_size"] = group_size;
  j["clip_eps"] = clip_eps;
  j["kl_beta"] = kl_beta;
  j["temperature"] = temperature;
  j["max_length"] = max_length;
  j["max_new_tokens"] = max_new_tokens;
  j["lambda_tok"] = lambda_tok;
  j["eps_tok"] = eps_tok;
  j["reward_mode"] = reward_mode_name(reward_mode);
  j["advantage_modulation"] = flags.am;
  j["token_clipping"] = flags.tc;
  j["direction_preserving"] = flags.dp;
  j["learning_rate"] = learning_rate;
  j["batch_size"] = batch_size;
  j["total_steps"] = total_steps;
  j["warmup_steps"] = warmup_steps;
  j["warmup_batch"] = warmup_batch;
  j["warmup_learning_rate"] = warmup_learning_rate;
  j["window"] = window;
  j["d_emb"] = d_emb;
  j["d_hid"] = d_hid;
  j["init_std"] = init_std;
  j["arith_fraction"] = tasks.arith_fraction;
  j["min_difficulty"] = tasks.min_difficulty;
  j["max_difficulty"] = tasks.max_difficulty;
  j["train_size"] = splits.train;
  j["validation_size"] = splits.validation;
  j["heldout_size"] = splits.heldout;
  j["seed"] = seed;
  j["eval_interval"] = eval_interval;
  j["checkpoint_interval"] = checkpoint_interval;
  j["out_dir"] = out_dir;
  j["vocab_file"] = vocab_file;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  static const std::set<std::string> known = {
      "group_size", "clip_eps", "kl_beta", "temperature", "max_length",
      "max_new_tokens", "lambda_tok", "eps_tok", "reward_mode",
      "advantage_modulation", "token_clipping", "direction_preserving",
      "learning_rate", "batch_size", "total_steps", "warmup_steps",
      "warmup_batch", "warmup_learning_rate", "window", "d_emb", "d_hid", "init_std",
      "arith_fraction", "min_difficulty", "max_difficulty", "train_size",
      "validation_size", "heldout_size", "seed", "eval_interval",
      "checkpoint_interval", "out_dir", "vocab_file"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError(it.key(), "unknown config field");

  RunConfig cfg;
  auto get = [&j](const char* key, auto& dst) {
    if (j.contains(key)) {
      try {
        dst = j.at(key).template get<std::decay_t<decltype(dst)>>();
      } catch (const json::exception& e) {
        throw ConfigError(key, std::string("bad value: ") + e.what());
      }
    }
  };
  get("group_size", cfg.group_size);
  get("clip_eps", cfg.clip_eps);
  get("kl_beta", cfg.kl_beta);
  get("temperature", cfg.temperature);
  get("max_length", cfg.max_length);
  get("max_new_tokens", cfg.max_new_tokens);
  get("lambda_tok", cfg.lambda_tok);
  get("eps_tok", cfg.eps_tok);
  if (j.contains("reward_mode")) {
    std::string name;
    get("reward_mode", name);
    try {
      cfg.reward_mode = reward_mode_from_name(name);
    } catch (const std::exception& e) {
      throw ConfigError("reward_mode", e.what());
    }
  }
  get("advantage_modulation", cfg.flags.am);
  get("token_clipping", cfg.flags.tc);
  get("direction_preserving", cfg.flags.dp);
  get("learning_rate", cfg.learning_rate);
  get("batch_size", cfg.batch_size);
  get("total_steps", cfg.total_steps);
  get("warmup_steps", cfg.warmup_steps);
  get("warmup_batch", cfg.warmup_batch);
  get("warmup_learning_rate", cfg.warmup_learning_rate);
  get("window", cfg.window);
  get("d_emb", cfg.d_emb);
  get("d_hid", cfg.d_hid);
  get("init_std", cfg.init_std);
  get("arith_fraction", cfg.tasks.arith_fraction);
  get("min_difficulty", cfg.tasks.min_difficulty);
  get("max_difficulty", cfg.tasks.max_difficulty);
  get("train_size", cfg.splits.train);
  get("validation_size", cfg.splits.validation);
  get("heldout_size", cfg.splits.heldout);
  get("seed", cfg.seed);
  get("eval_interval", cfg.eval_interval);
  get("checkpoint_interval", cfg.checkpoint_interval);
  get("out_dir", cfg.out_dir);
  get("vocab_file", cfg.vocab_file);
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("<file>", std::string("invalid JSON in '") + path + "': " + e.what());
  }
  return from_json(j);
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("<file>", "cannot write '" + path + "'");
  out << to_json().dump(2) << '\n';
}

}  // namespace boxrl
