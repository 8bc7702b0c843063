#pragma once
// Group-relative advantages and token-level modulation. The pipeline per
// group: normalize rewards across the group, normalize each response's token
// signal over its reasoning prefix, then combine per the enabled stages
// (AM: additive modulation, TC: token clipping with re-centering, DP:
// direction-preserving scaling). Tokens at or past the reasoning length carry
// the plain response advantage.

#include <stdexcept>
#include <vector>

#include "boxrl/rewards.hpp"

namespace boxrl {

struct GroupAdvantage {
  std::vector<double> values;
  bool degenerate = false;  // all-equal rewards; values are all zero
};

struct ModulationFlags {
  bool am = false;
  bool tc = false;
  bool dp = false;

  void validate() const;  // tc or dp without am is a configuration error
  bool operator==(const ModulationFlags&) const = default;
};

struct ClipResult {
  std::vector<double> values;
  int clipped = 0;  // entries beyond the clip bound
};

struct DirectionResult {
  std::vector<double> values;
  int sign_flips = 0;  // would-be flips of the plain additive form
};

struct AdvantageTelemetry {
  long reasoning_tokens = 0;
  long would_clip = 0;   // |delta| > eps_tok over all reasoning tokens
  long clipped = 0;      // entries actually clipped (TC paths only)
  long sign_flips = 0;   // additive-form direction reversals on the active path
};

struct AdvantageMatrix {
  std::vector<std::vector<double>> rows;  // per response, length = full length
  std::vector<int> reasoning_len;
  ModulationFlags flags;
  double lambda_tok = 0.0;
  double eps_tok = 0.0;
  AdvantageTelemetry telemetry;
};

// (r_j - mean) / population std over the group. Groups need at least two
// members; a population std below 1e-8 marks the group degenerate (all
// advantages zero, no relative signal).
GroupAdvantage group_normalize(const RewardVector& rewards);

// Zero-mean unit-std (population) normalization over a reasoning prefix.
// Length <= 1 or std below 1e-8 yields all zeros of the same length.
std::vector<double> normalize_token_signal(const TokenSignal& signal);

// Clamp to [-eps_tok, eps_tok], then subtract the post-clip mean so the
// prefix stays zero-mean. Counts clipped entries.
ClipResult clip_recenter(const std::vector<double>& delta, double eps_tok);

// adv + lambda * |adv| * delta_t / s with s = max(1, max_t |delta_t|). With
// lambda < 1 every output strictly shares the sign of a nonzero adv. Also
// counts how often the plain additive form lambda * delta_t would have
// reversed that sign. Requires 0 <= lambda < 1.
DirectionResult direction_preserve(double adv, const std::vector<double>& delta,
                                   double lambda_tok);

// adv + lambda * delta_t, the unguarded form. Requires lambda >= 0.
std::vector<double> additive_modulate(double adv, const std::vector<double>& delta,
                                      double lambda_tok);

// Full per-group pipeline. token_signals holds the raw per-response signals
// (sized to each reasoning prefix; ignored when AM is off), full_lengths the
// response lengths. A degenerate group yields an all-zero matrix.
AdvantageMatrix assemble(const GroupAdvantage& group,
                         const std::vector<TokenSignal>& token_signals,
                         const std::vector<int>& full_lengths,
                         const ModulationFlags& flags, double lambda_tok,
                         double eps_tok);

}  // namespace boxrl
