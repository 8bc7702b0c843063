#pragma once
// Clipped-surrogate objective over a frozen batch. The trainer freezes
// advantages, cached old log-probabilities, and the clip-branch selection at
// the pre-update parameters; the surrogate value can then be re-evaluated at
// perturbed parameters, which is what finite-difference checks differentiate.

#include <cstdint>
#include <vector>

#include "boxrl/policy.hpp"

namespace boxrl {

// min(rho * adv, clamp(rho, 1-eps, 1+eps) * adv).
double ppo_clip_term(double rho, double advantage, double clip_eps);

struct SurrogateToken {
  TokenSeq window;          // evaluation window for this position
  TokenId token = 0;        // sampled token
  double old_logprob = 0.0; // cached from the rollout snapshot
  double advantage = 0.0;   // frozen per-token advantage
  bool unclipped = true;    // frozen branch: true when rho*adv was selected
  int response = 0;         // index into response_lengths
};

struct SurrogateSpec {
  std::vector<SurrogateToken> tokens;
  std::vector<int> response_lengths;  // T_j per response, group-major order
  int num_groups = 0;
  int group_size = 0;
  double kl_beta = 0.0;
  double clip_eps = 0.0;
};

// Loss at `params` with the frozen branch selection:
//   -(1/num_groups) sum_groups (1/G) sum_j (1/T_j) sum_t branch_t
//   + kl_beta * (1/num_responses) sum_j (1/T_j) sum_t KL_t(params || reference)
double surrogate_value(const PolicyParams& params, const PolicyParams& reference,
                       const SurrogateSpec& spec);

// Backward terms whose exact gradient equals the local gradient of
// surrogate_value at `params`: per-token coefficients -rho*adv/(T_j*G*groups)
// on selected unclipped branches (zero otherwise) plus the KL weights.
void surrogate_backward_terms(const PolicyParams& params, const SurrogateSpec& spec,
                              std::vector<LogProbTerm>& terms,
                              std::vector<KlTerm>& kl_terms);

}  // namespace boxrl
