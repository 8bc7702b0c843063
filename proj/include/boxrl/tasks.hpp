#pragma once
// Synthetic verifiable tasks: modular arithmetic chains and four-option
// multiple choice. Every instance carries a machine-checkable truth and a
// gold reasoning trace ending in a boxed answer.

#include <cstdint>
#include <string>
#include <vector>

#include "boxrl/numerics.hpp"
#include "boxrl/vocab.hpp"

namespace boxrl {

enum class TaskFamily { arith, mcq };

const char* task_family_name(TaskFamily family);

struct TaskInstance {
  TokenSeq prompt;      // starts with bos, ends with '?'
  TokenSeq truth;       // answer tokens (single digit or option letter)
  TokenSeq gold_trace;  // reasoning ++ boxed answer ++ eos
  TaskFamily family = TaskFamily::arith;
  int difficulty = 1;
};

// Glyph ids the generators need, resolved once from a vocabulary.
struct TaskTokens {
  TokenId digit[10];
  TokenId letter[4];
  TokenId plus, minus, times, mod, lparen, rparen, ask, eq;
  TokenId q_max, q_min, q_even, q_odd;

  static TaskTokens resolve(const Vocab& vocab);  // throws if a glyph is missing
};

struct TaskMix {
  double arith_fraction = 0.5;
  int min_difficulty = 1;
  int max_difficulty = 3;
};

struct SplitCounts {
  int train = 1000;
  int validation = 100;
  int heldout = 200;
};

struct TaskSplits {
  std::vector<TaskInstance> train, validation, heldout;
};

// One step of the chain evaluator: (lhs op rhs) mod modulus, result in
// [0, modulus). Doubles as the verifier oracle in tests.
int arith_step(int lhs, char op, int rhs, int modulus);

// Full chain: left-to-right over operands/ops, reducing mod `modulus` after
// every operation.
int arith_chain(const std::vector<int>& operands, const std::vector<char>& ops,
                int modulus);

// difficulty d in {1,2,3} gives d infix operations plus the final reduction.
TaskInstance gen_arith(const Vocab& vocab, Rng& rng, int difficulty);

// Four lettered single-digit options, exactly one correct; question word is
// one of max/min/even/odd. Distractors never equal the correct value.
TaskInstance gen_mcq(const Vocab& vocab, Rng& rng, int difficulty);

// Disjoint-by-prompt splits with exact sizes, deterministic per seed.
TaskSplits make_splits(const Vocab& vocab, std::uint64_t seed,
                       const SplitCounts& counts, const TaskMix& mix);

// Line format: family <tab> difficulty <tab> prompt ids <tab> truth ids.
void export_instances(const std::vector<TaskInstance>& instances,
                      const std::string& path);
std::vector<TaskInstance> import_instances(const Vocab& vocab,
                                           const std::string& path);

}  // namespace boxrl
