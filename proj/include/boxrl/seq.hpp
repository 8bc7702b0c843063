#pragma once
// Sequence splitting and context assembly around boxed answer spans.

#include <stdexcept>
#include <vector>

#include "boxrl/vocab.hpp"

namespace boxrl {

// Thrown when an assembled context would exceed the configured length cap.
// Callers flag the affected group member invalid instead of aborting the run.
class SeqOverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ResponseSplit {
  TokenSeq reasoning;       // tokens strictly before the first box-open marker
  TokenSeq answer;          // tokens between box-open and the next box-close
  bool well_formed = false; // both markers present, in order
  int full_length = 0;      // length of the original response
};

struct PromptPair {
  TokenSeq plain;               // x
  TokenSeq answer_conditioned;  // x with the boxed ground truth appended
  TokenSeq truth;               // ground-truth answer tokens
};

struct LikelihoodContext {
  TokenSeq tokens;
  std::vector<int> truth_positions;  // indices of the truth tokens in `tokens`
};

// Total for non-empty y. Tokens after the closing marker are ignored for
// answer extraction but still count toward full_length.
ResponseSplit split_response(const Vocab& vocab, const TokenSeq& y);

// x ++ reasoning ++ [box_open] ++ truth ++ [box_close], with the positions of
// the truth tokens. Throws SeqOverflowError past max_length.
LikelihoodContext build_likelihood_context(const Vocab& vocab, const TokenSeq& x,
                                           const TokenSeq& reasoning,
                                           const TokenSeq& truth, int max_length);

// x ++ [given] ++ [box_open] ++ truth ++ [box_close].
TokenSeq build_answer_conditioned_prompt(const Vocab& vocab, const TokenSeq& x,
                                         const TokenSeq& truth, int max_length);

}  // namespace boxrl
