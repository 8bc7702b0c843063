#pragma once
// Differentiable autoregressive policy over token ids: a fixed-window
// embedding-concatenation MLP (one tanh hidden layer, linear output into a
// softmax). Probabilities come from exact log-softmax; gradients are exact
// reverse-mode, written out by hand.

#include <cstdint>
#include <vector>

#include "boxrl/vocab.hpp"

namespace boxrl {

struct PolicyDims {
  int vocab_size = 0;
  int window = 0;
  int d_emb = 0;
  int d_hid = 0;
  TokenId pad_id = 0;  // fills window slots left of the sequence start

  int input_dim() const { return window * d_emb; }
  bool operator==(const PolicyDims&) const = default;
};

struct PolicyParams {
  PolicyDims dims;
  std::vector<double> embed;  // [vocab_size][d_emb]
  std::vector<double> w_hid;  // [window*d_emb][d_hid]
  std::vector<double> b_hid;  // [d_hid]
  std::vector<double> w_out;  // [d_hid][vocab_size]

  static PolicyParams zeros(const PolicyDims& dims);
  static PolicyParams gaussian_init(const PolicyDims& dims, double stddev,
                                    std::uint64_t seed);
  std::size_t count() const;
  bool all_finite() const;
  bool operator==(const PolicyParams&) const = default;
};

struct GradientSet {
  PolicyDims dims;
  std::vector<double> embed, w_hid, b_hid, w_out;

  static GradientSet zeros_like(const PolicyParams& params);
  double l2_norm() const;
  bool all_finite() const;
};

enum class SnapshotRole { current, old, reference };

// Frozen copy of a parameter set; optimizer steps on the live params never
// touch a snapshot.
struct PolicySnapshot {
  PolicyParams params;
  SnapshotRole role = SnapshotRole::reference;
};

// ---- evaluation -----------------------------------------------------------

// Next-token distribution (and log-distribution) given a context; only the
// trailing `window` tokens matter, shorter contexts are left-padded.
std::vector<double> next_token_dist(const PolicyParams& p, const TokenSeq& context);
std::vector<double> next_token_logdist(const PolicyParams& p, const TokenSeq& context);

// Ancestral sampling until eos or max_new_tokens. temperature == 0 decodes
// greedily (first max index on ties). sampled_logprobs, when given, receives
// the untempered log-probability of each emitted token.
TokenSeq sample_response(const PolicyParams& p, const TokenSeq& prompt,
                         double temperature, int max_new_tokens, TokenId eos_id,
                         std::uint64_t seed,
                         std::vector<double>* sampled_logprobs = nullptr);

// Teacher-forced per-token log-probabilities of `continuation` after `prefix`.
std::vector<double> token_logprobs(const PolicyParams& p, const TokenSeq& prefix,
                                   const TokenSeq& continuation);

// Exact full-vocabulary KL(p || q) at each continuation position.
std::vector<double> per_token_kl(const PolicyParams& p, const PolicyParams& q,
                                 const TokenSeq& prefix, const TokenSeq& continuation);

// Entropy of the next-token distribution at each continuation position.
std::vector<double> per_token_entropy(const PolicyParams& p, const TokenSeq& prefix,
                                      const TokenSeq& continuation);

// Canonical evaluation window: last `window` tokens of prefix ++
// continuation[0..t), left-padded with pad_id.
TokenSeq context_window(const PolicyDims& dims, const TokenSeq& prefix,
                        const TokenSeq& continuation, int t);

// ---- differentiation ------------------------------------------------------

// Objective = sum of coeff * log pi(target | window) terms plus coeff *
// KL(pi || pi_ref) terms. Coefficients are constants; the gradient flows only
// through the current-policy log-probabilities.
struct LogProbTerm {
  TokenSeq window;  // exactly dims.window tokens
  TokenId target = 0;
  double coeff = 0.0;
};

struct KlTerm {
  TokenSeq window;
  double coeff = 0.0;
};

// Exact gradient of the objective above. `reference` is required when
// kl_terms is non-empty. Throws on non-finite intermediates, naming the term.
GradientSet backward(const PolicyParams& p, const std::vector<LogProbTerm>& terms,
                     const std::vector<KlTerm>& kl_terms,
                     const PolicyParams* reference);

// ---- optimizer -------------------------------------------------------------

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

struct AdamState {
  GradientSet m, v;
  std::int64_t t = 0;
  static AdamState init(const PolicyParams& params);
};

// One AdamW update with bias correction, in place on `params`.
void adam_step(PolicyParams& params, const GradientSet& grads, AdamState& state,
               double lr, const AdamConfig& cfg = {});

}  // namespace boxrl
