#include "boxrl/rewards.hpp"

#include <stdexcept>

namespace boxrl {

const char* reward_mode_name(RewardMode mode) {
  switch (mode) {
    case RewardMode::binary: return "binary";
    case RewardMode::likelihood: return "likelihood";
    case RewardMode::generalthinker: return "generalthinker";
  }
  throw std::logic_error("reward_mode_name: unknown mode");
}

RewardMode reward_mode_from_name(const std::string& name) {
  if (name == "binary") return RewardMode::binary;
  if (name == "likelihood") return RewardMode::likelihood;
  if (name == "generalthinker") return RewardMode::generalthinker;
  throw std::invalid_argument("unknown reward mode '" + name + "'");
}

double binary_reward(const ResponseSplit& split, const TokenSeq& truth) {
  return (split.well_formed && split.answer == truth) ? 1.0 : 0.0;
}

double likelihood_reward(const PolicyParams& current, const Vocab& vocab,
                         const TokenSeq& x, const TokenSeq& reasoning,
                         const TokenSeq& truth, int max_length) {
  const LikelihoodContext ctx =
      build_likelihood_context(vocab, x, reasoning, truth, max_length);
  if (truth.empty()) return 0.0;

  // Truth tokens are contiguous in the context, so teacher-forcing them as a
  // continuation reproduces exactly the flagged positions.
  const int first = ctx.truth_positions.front();
  const TokenSeq prefix(ctx.tokens.begin(), ctx.tokens.begin() + first);
  const std::vector<double> lps = token_logprobs(current, prefix, truth);
  double sum = 0.0;
  for (double lp : lps) sum += lp;
  return sum;
}

TokenSignal token_compat(const PolicyParams& current, const PolicyParams& reference,
                         const TokenSeq& x, const TokenSeq& x_plus,
                         const TokenSeq& y, int reasoning_len) {
  if (reasoning_len < 0 || reasoning_len > static_cast<int>(y.size()))
    throw std::invalid_argument("token_compat: reasoning_len out of range");
  if (reasoning_len == 0) return {};

  const TokenSeq head(y.begin(), y.begin() + reasoning_len);
  const std::vector<double> cur = token_logprobs(current, x_plus, head);
  const std::vector<double> ref = token_logprobs(reference, x, head);
  TokenSignal out(static_cast<std::size_t>(reasoning_len));
  for (int t = 0; t < reasoning_len; ++t)
    out[static_cast<std::size_t>(t)] =
        cur[static_cast<std::size_t>(t)] - ref[static_cast<std::size_t>(t)];
  return out;
}

}  // namespace boxrl
