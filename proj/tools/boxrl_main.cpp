// boxrl: group-sampling policy training on verifiable toy reasoning tasks.
// Subcommands: train, eval, ablate, gradcheck, export-tasks.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "boxrl/checkpoint.hpp"
#include "boxrl/config.hpp"
#include "boxrl/runner.hpp"

namespace {

using boxrl::RunConfig;

// Config overrides shared by the subcommands; each value applies only when
// the flag was actually given so config-file values survive otherwise.
struct Overrides {
  CLI::Option* config_opt = nullptr;
  std::string config_path;
  CLI::Option* seed_opt = nullptr;
  std::uint64_t seed = 0;
  CLI::Option* mode_opt = nullptr;
  std::string reward_mode;
  CLI::Option* am_opt = nullptr;
  bool am = false;
  CLI::Option* tc_opt = nullptr;
  bool tc = false;
  CLI::Option* dp_opt = nullptr;
  bool dp = false;
  CLI::Option* lambda_opt = nullptr;
  double lambda_tok = 0.0;
  CLI::Option* eps_opt = nullptr;
  double eps_tok = 0.0;
  CLI::Option* steps_opt = nullptr;
  int steps = 0;
  CLI::Option* out_opt = nullptr;
  std::string out_dir;
};

void add_common(CLI::App* cmd, Overrides& ov) {
  ov.config_opt = cmd->add_option("--config", ov.config_path, "JSON run configuration")
                      ->check(CLI::ExistingFile);
  ov.seed_opt = cmd->add_option("--seed", ov.seed, "master seed");
  ov.mode_opt = cmd->add_option("--reward-mode", ov.reward_mode,
                                "binary | likelihood | generalthinker");
  ov.am_opt = cmd->add_flag("--am,!--no-am", ov.am, "token-level advantage modulation");
  ov.tc_opt = cmd->add_flag("--tc,!--no-tc", ov.tc, "token-signal clipping");
  ov.dp_opt = cmd->add_flag("--dp,!--no-dp", ov.dp, "direction-preserving modulation");
  ov.lambda_opt = cmd->add_option("--lambda-tok", ov.lambda_tok, "modulation strength");
  ov.eps_opt = cmd->add_option("--eps-tok", ov.eps_tok, "token-signal clip bound");
  ov.steps_opt = cmd->add_option("--steps", ov.steps, "training steps");
  ov.out_opt = cmd->add_option("--out", ov.out_dir, "output directory");
}

RunConfig resolve_config(const Overrides& ov) {
  RunConfig cfg =
      ov.config_opt->count() ? RunConfig::load(ov.config_path) : RunConfig{};
  if (ov.seed_opt->count()) cfg.seed = ov.seed;
  if (ov.mode_opt->count()) cfg.reward_mode = boxrl::reward_mode_from_name(ov.reward_mode);
  if (ov.am_opt->count()) cfg.flags.am = ov.am;
  if (ov.tc_opt->count()) cfg.flags.tc = ov.tc;
  if (ov.dp_opt->count()) cfg.flags.dp = ov.dp;
  if (ov.lambda_opt->count()) cfg.lambda_tok = ov.lambda_tok;
  if (ov.eps_opt->count()) cfg.eps_tok = ov.eps_tok;
  if (ov.steps_opt->count()) cfg.total_steps = ov.steps;
  if (ov.out_opt->count()) cfg.out_dir = ov.out_dir;
  cfg.validate();
  return cfg;
}

int cmd_eval(const Overrides& ov, const std::string& ckpt_path,
             const std::string& split) {
  RunConfig cfg = resolve_config(ov);
  const boxrl::Vocab vocab =
      cfg.vocab_file.empty() ? boxrl::Vocab::standard() : boxrl::Vocab::load(cfg.vocab_file);
  boxrl::TaskSplits splits = boxrl::make_splits(vocab, cfg.seed, cfg.splits, cfg.tasks);
  boxrl::Trainer trainer(cfg, vocab, std::move(splits));
  trainer.restore(boxrl::load_checkpoint(ckpt_path));

  const std::vector<boxrl::TaskInstance>* set = &trainer.splits().heldout;
  if (split == "validation") set = &trainer.splits().validation;
  else if (split == "train") set = &trainer.splits().train;
  else if (split != "heldout")
    throw std::invalid_argument("eval: unknown split '" + split + "'");

  const boxrl::FamilyAccuracy acc = trainer.evaluate_families(*set);
  std::printf("split %s: accuracy %.4f (arith %.4f over %d, mcq %.4f over %d)\n",
              split.c_str(), acc.overall, acc.arith, acc.n_arith, acc.mcq, acc.n_mcq);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-sampling policy training on verifiable toy reasoning tasks"};
  app.require_subcommand(1);

  Overrides train_ov, eval_ov, ablate_ov, export_ov;
  std::string resume_path, eval_ckpt, eval_split = "heldout", export_out = "tasks";
  std::vector<std::uint64_t> ablate_seeds{1, 2, 3, 4};
  bool lambda_grid = false, corrupt = false, quiet = false;

  CLI::App* train = app.add_subcommand("train", "run warm-up plus policy training");
  add_common(train, train_ov);
  train->add_option("--resume", resume_path, "checkpoint to continue from")
      ->check(CLI::ExistingFile);
  train->add_flag("--quiet", quiet, "suppress progress output");

  CLI::App* eval = app.add_subcommand("eval", "greedy accuracy of a stored checkpoint");
  add_common(eval, eval_ov);
  eval->add_option("checkpoint", eval_ckpt, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--split", eval_split, "heldout | validation | train");

  CLI::App* ablate = app.add_subcommand("ablate", "run the modulation ablation grid");
  add_common(ablate, ablate_ov);
  ablate->add_option("--seeds", ablate_seeds, "seeds to run per grid row");
  ablate->add_flag("--lambda-grid", lambda_grid,
                   "also sweep modulation strength {0.05, 0.1, 0.2, 0.4}");

  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference and oracle verification");
  gradcheck->add_flag("--corrupt", corrupt)->group("");  // hidden negative control

  CLI::App* export_tasks =
      app.add_subcommand("export-tasks", "write generated task splits to disk");
  add_common(export_tasks, export_ov);
  export_tasks->add_option("--task-out", export_out, "directory for the task files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const RunConfig cfg = resolve_config(train_ov);
      std::optional<std::string> resume;
      if (!resume_path.empty()) resume = resume_path;
      boxrl::run_train(cfg, resume, quiet);
      return 0;
    }
    if (eval->parsed()) return cmd_eval(eval_ov, eval_ckpt, eval_split);
    if (ablate->parsed()) {
      boxrl::AblationOptions opts;
      opts.base = resolve_config(ablate_ov);
      opts.seeds = ablate_seeds;
      opts.lambda_grid = lambda_grid;
      if (ablate_ov.out_opt->count()) opts.out_root = ablate_ov.out_dir;
      const int failures = boxrl::run_ablation(opts);
      if (failures)
        std::cerr << "ablation: " << failures << " row(s) failed (see comparison.tsv)\n";
      return failures ? 1 : 0;
    }
    if (gradcheck->parsed()) {
      const boxrl::GradcheckReport report = boxrl::run_gradcheck(corrupt);
      boxrl::print_gradcheck_report(report);
      return report.pass ? 0 : 1;
    }
    if (export_tasks->parsed()) {
      boxrl::run_export_tasks(resolve_config(export_ov), export_out);
      return 0;
    }
  } catch (const boxrl::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
