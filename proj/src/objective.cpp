#include "boxrl/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "boxrl/numerics.hpp"

namespace boxrl {

double ppo_clip_term(double rho, double advantage, double clip_eps) {
  if (!(clip_eps > 0.0))
    throw std::invalid_argument("ppo_clip_term: clip_eps must be positive");
  const double clamped = std::clamp(rho, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(rho * advantage, clamped * advantage);
}

namespace {

void check_spec(const SurrogateSpec& spec) {
  if (spec.num_groups < 1 || spec.group_size < 2)
    throw std::invalid_argument("surrogate: need num_groups >= 1 and group_size >= 2");
  const std::size_t expected =
      static_cast<std::size_t>(spec.num_groups) * static_cast<std::size_t>(spec.group_size);
  if (spec.response_lengths.size() != expected)
    throw std::invalid_argument("surrogate: response_lengths size mismatch");
  for (int len : spec.response_lengths)
    if (len < 1) throw std::invalid_argument("surrogate: every response needs >= 1 token");
  if (!(spec.clip_eps > 0.0))
    throw std::invalid_argument("surrogate: clip_eps must be positive");
  if (spec.kl_beta < 0.0)
    throw std::invalid_argument("surrogate: kl_beta must be non-negative");
  for (const SurrogateToken& tok : spec.tokens)
    if (tok.response < 0 ||
        static_cast<std::size_t>(tok.response) >= spec.response_lengths.size())
      throw std::invalid_argument("surrogate: token references a missing response");
}

}  // namespace

double surrogate_value(const PolicyParams& params, const PolicyParams& reference,
                       const SurrogateSpec& spec) {
  check_spec(spec);
  const double num_responses =
      static_cast<double>(spec.num_groups) * static_cast<double>(spec.group_size);

  double policy_sum = 0.0;  // sum over responses of S_j = mean_t(selected branch)
  double kl_sum = 0.0;      // sum over responses of mean_t KL_t
  for (const SurrogateToken& tok : spec.tokens) {
    const double t_j =
        static_cast<double>(spec.response_lengths[static_cast<std::size_t>(tok.response)]);
    const std::vector<double> logdist = next_token_logdist(params, tok.window);
    const double logprob = logdist[static_cast<std::size_t>(tok.token)];
    const double rho = std::exp(logprob - tok.old_logprob);

    // The branch was selected when the spec was built and stays fixed here:
    // the unclipped branch tracks rho, the clipped branch is a constant.
    const double branch =
        tok.unclipped
            ? rho * tok.advantage
            : std::clamp(rho, 1.0 - spec.clip_eps, 1.0 + spec.clip_eps) * tok.advantage;
    policy_sum += branch / t_j;

    if (spec.kl_beta > 0.0) {
      const std::vector<double> ref_logdist = next_token_logdist(reference, tok.window);
      kl_sum += kl_from_logdists(logdist, ref_logdist) / t_j;
    }
  }
  return -policy_sum / num_responses + spec.kl_beta * kl_sum / num_responses;
}

void surrogate_backward_terms(const PolicyParams& params, const SurrogateSpec& spec,
                              std::vector<LogProbTerm>& terms,
                              std::vector<KlTerm>& kl_terms) {
  check_spec(spec);
  terms.clear();
  kl_terms.clear();
  const double num_responses =
      static_cast<double>(spec.num_groups) * static_cast<double>(spec.group_size);

  for (const SurrogateToken& tok : spec.tokens) {
    const double t_j =
        static_cast<double>(spec.response_lengths[static_cast<std::size_t>(tok.response)]);
    if (tok.unclipped) {
      // d/dtheta [-(rho*adv)/(T_j*R)] = -(rho*adv)/(T_j*R) * dlogpi/dtheta.
      const std::vector<double> logdist = next_token_logdist(params, tok.window);
      const double rho =
          std::exp(logdist[static_cast<std::size_t>(tok.token)] - tok.old_logprob);
      terms.push_back(LogProbTerm{tok.window, tok.token,
                                  -rho * tok.advantage / (t_j * num_responses)});
    }
    // Clipped branches contribute a constant: no term.
    if (spec.kl_beta > 0.0)
      kl_terms.push_back(KlTerm{tok.window, spec.kl_beta / (t_j * num_responses)});
  }
}

}  // namespace boxrl
