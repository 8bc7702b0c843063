#pragma once
// Straight-line reference implementations used only for verification (the
// gradcheck command and the acceptance suite). These transcribe the math
// directly on plain vectors and share no code with the production advantage
// and gradient paths they check.

#include <functional>
#include <vector>

#include "boxrl/policy.hpp"

namespace boxrl::reference {

struct GroupResult {
  std::vector<double> advantages;
  bool degenerate = false;
};

GroupResult group_advantages(const std::vector<double>& rewards);

// Per-token advantages for one response: plain broadcast, additive, clipped,
// and/or direction-preserving, selected by the flags.
std::vector<double> modulated_row(double adv, const std::vector<double>& raw_signal,
                                  int full_length, bool am, bool tc, bool dp,
                                  double lambda_tok, double eps_tok,
                                  bool group_degenerate);

// Central finite differences of a scalar objective over every parameter.
GradientSet finite_difference(const PolicyParams& params,
                              const std::function<double(const PolicyParams&)>& f,
                              double delta);

// max over entries of |a-b| / max(|a|, |b|, floor).
double max_rel_error(const GradientSet& a, const GradientSet& b, double floor);

}  // namespace boxrl::reference
