#pragma once
// Group-sampling policy trainer. Each step: snapshot the current policy,
// sample a group of responses per prompt from the snapshot, score them,
// normalize advantages (optionally token-modulated), take one clipped
// surrogate update against the frozen reference, and emit a step record.

#include <cstdint>
#include <optional>
#include <vector>

#include "boxrl/advantage.hpp"
#include "boxrl/config.hpp"
#include "boxrl/objective.hpp"
#include "boxrl/policy.hpp"
#include "boxrl/tasks.hpp"

namespace boxrl {

struct StepRecord {
  std::int64_t step = 0;
  double mean_reward = 0.0;      // mode reward averaged over sampled responses
  double train_accuracy = 0.0;   // exact-match rate of the sampled responses
  double mean_kl = 0.0;          // per-response mean KL to reference, batch mean
  double mean_entropy = 0.0;     // same aggregation over next-token entropy
  double clip_ratio = 0.0;       // reasoning tokens with |delta| > eps_tok
  double sign_flip_ratio = 0.0;  // additive form would reverse the advantage
  double ppo_clip_ratio = 0.0;   // tokens where the clipped branch was selected
  double grad_norm = 0.0;
  long scoring_passes = 0;       // sequence scoring passes this step
  double wall_clock_ms = 0.0;    // not serialized; logs must replay bit-exactly
};

struct StepDiagnostics {
  double loss = 0.0;
  double max_ratio_deviation = 0.0;  // max |rho - 1| before the update
  long positions = 0;
  long invalid_members = 0;          // context-overflow exclusions
  AdvantageTelemetry adv_telemetry;
  std::vector<AdvantageMatrix> matrices;  // one per prompt group
};

struct FamilyAccuracy {
  double overall = 0.0;
  double arith = 0.0;   // 0 when the split has no such instances
  double mcq = 0.0;
  int n_arith = 0;
  int n_mcq = 0;
};

struct TrainerCheckpoint {
  PolicyParams current;
  PolicyParams reference;
  AdamState opt;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  bool warmed_up = false;
};

class Trainer {
 public:
  Trainer(RunConfig cfg, Vocab vocab, TaskSplits splits);

  // Supervised next-token training on gold traces of the train split, then
  // freezes the reference snapshot (zero steps freeze the initialization)
  // and resets optimizer state for the reinforcement phase.
  void run_warmup();

  StepRecord train_step();  // requires run_warmup() (or restore) first

  double evaluate(const std::vector<TaskInstance>& instances) const;  // greedy
  FamilyAccuracy evaluate_families(const std::vector<TaskInstance>& instances) const;

  const RunConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  const TaskSplits& splits() const { return splits_; }
  const PolicyParams& current() const { return current_; }
  const PolicySnapshot& reference() const { return reference_; }
  std::int64_t step() const { return step_; }
  bool warmed_up() const { return warmed_up_; }
  const StepDiagnostics& diagnostics() const { return diag_; }

  TrainerCheckpoint checkpoint() const;
  void restore(const TrainerCheckpoint& ckpt);

 private:
  struct Member {
    TokenSeq response;
    ResponseSplit split;
    std::vector<double> old_logprobs;
    double reward = 0.0;        // mode reward
    double binary = 0.0;
    bool valid = true;          // false on context overflow; excluded from stats
    TokenSignal token_signal;   // raw compatibility signal (modulated modes)
  };
  struct Group {
    const TaskInstance* instance = nullptr;
    PromptPair prompts;
    std::vector<Member> members;
    GroupAdvantage advantage;
  };

  Group rollout_group(const PolicySnapshot& old_policy, const TaskInstance& inst,
                      std::int64_t step_index, int prompt_slot, long* scoring_passes);
  void score_group(Group& group, long* scoring_passes);

  RunConfig cfg_;
  Vocab vocab_;
  TaskSplits splits_;
  PolicyParams current_;
  PolicySnapshot reference_;
  AdamState opt_;
  std::int64_t step_ = 0;
  bool warmed_up_ = false;
  StepDiagnostics diag_;
};

}  // namespace boxrl
