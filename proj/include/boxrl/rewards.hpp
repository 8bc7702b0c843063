#pragma once
// Response-level rewards and the per-token compatibility signal. All values
// are detached constants with respect to the policy update: they scale
// log-probability terms but never receive gradient themselves.

#include <vector>

#include "boxrl/policy.hpp"
#include "boxrl/seq.hpp"
#include "boxrl/vocab.hpp"

namespace boxrl {

enum class RewardMode { binary, likelihood, generalthinker };

const char* reward_mode_name(RewardMode mode);
RewardMode reward_mode_from_name(const std::string& name);  // throws on unknown

struct RewardVector {
  std::vector<double> values;  // one entry per group member
  RewardMode mode = RewardMode::binary;
};

using TokenSignal = std::vector<double>;

// 1.0 iff the response is well formed and the extracted answer equals the
// truth exactly; otherwise 0.0.
double binary_reward(const ResponseSplit& split, const TokenSeq& truth);

// Sum of log-probabilities of the truth tokens teacher-forced after the
// sampled reasoning prefix, inside a boxed span. Raw sum, no length
// normalization. Empty truth scores 0. Throws SeqOverflowError when the
// assembled context exceeds max_length.
double likelihood_reward(const PolicyParams& current, const Vocab& vocab,
                         const TokenSeq& x, const TokenSeq& reasoning,
                         const TokenSeq& truth, int max_length);

// Per-reasoning-token signal: log pi_current(y_t | x_plus, y_<t) minus
// log pi_reference(y_t | x, y_<t), for t in [0, reasoning_len). Length equals
// reasoning_len; empty when reasoning_len == 0.
TokenSignal token_compat(const PolicyParams& current, const PolicyParams& reference,
                         const TokenSeq& x, const TokenSeq& x_plus,
                         const TokenSeq& y, int reasoning_len);

}  // namespace boxrl
