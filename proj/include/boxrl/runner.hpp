#pragma once
// High-level run orchestration shared by the command-line tool and the test
// suites: full training runs, the ablation grid, gradient checking, and task
// export.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "boxrl/config.hpp"
#include "boxrl/trainer.hpp"

namespace boxrl {

struct RunResult {
  std::string out_dir;
  std::string metrics_path;
  std::string checkpoint_path;
  FamilyAccuracy base;    // held-out accuracy right after warm-up
  FamilyAccuracy final;   // held-out accuracy at the end
  double kl_variance = 0.0;       // population variance of per-step mean KL
  double entropy_variance = 0.0;
  double mean_clip_ratio = 0.0;   // means over steps
  double mean_sign_flip_ratio = 0.0;
  long total_scoring_passes = 0;
  std::vector<StepRecord> records;
};

// Runs warm-up plus total_steps updates, writing metrics.jsonl, vocab.txt and
// checkpoints under cfg.out_dir. `resume_from` continues from a checkpoint.
// `quiet` suppresses progress lines on stdout.
RunResult run_train(const RunConfig& cfg,
                    const std::optional<std::string>& resume_from = {},
                    bool quiet = false);

struct AblationRow {
  std::string name;
  RewardMode mode = RewardMode::likelihood;
  ModulationFlags flags{};
  double lambda_tok = 0.0;
};

// The five-row grid: likelihood baseline, AM, AM+TC, AM+DP, full.
std::vector<AblationRow> ablation_rows(double lambda_tok);

struct AblationOptions {
  RunConfig base;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4};
  bool lambda_grid = false;  // also sweep the full row over {0.05,0.1,0.2,0.4}
  std::string out_root;
};

// Runs every row for every seed; a failed row is recorded and the grid
// continues. Writes <out_root>/comparison.tsv. Returns the failure count.
int run_ablation(const AblationOptions& opts);

struct GradcheckReport {
  bool pass = false;
  double max_rel_err_logprob = 0.0;
  double max_rel_err_kl = 0.0;
  double max_rel_err_step = 0.0;
  double max_advantage_dev = 0.0;
  std::map<std::string, double> worst_by_array;  // per parameter array
  std::string detail;
};

// Finite-difference suite on miniature instances (vocab <= 8, lengths <= 4)
// plus the advantage-oracle equivalence suite. `corrupt` deliberately
// perturbs one analytic gradient entry; the check must then fail (negative
// control for the harness itself).
GradcheckReport run_gradcheck(bool corrupt = false);

void print_gradcheck_report(const GradcheckReport& report);

// Generates splits from the config and writes train/validation/heldout files
// plus the vocabulary table into out_dir.
void run_export_tasks(const RunConfig& cfg, const std::string& out_dir);

// Output root fallback when a config has no out_dir: $BOXRL_OUT_ROOT or
// "runs". The run directory name is derived from mode, flags, and seed.
std::string default_out_dir(const RunConfig& cfg);

}  // namespace boxrl
