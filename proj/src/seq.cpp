#include "boxrl/seq.hpp"

#include <algorithm>

namespace boxrl {

ResponseSplit split_response(const Vocab& vocab, const TokenSeq& y) {
  if (y.empty()) throw std::invalid_argument("split_response: empty response");
  vocab.check_seq(y);

  ResponseSplit out;
  out.full_length = static_cast<int>(y.size());
  auto open = std::find(y.begin(), y.end(), vocab.box_open());
  out.reasoning.assign(y.begin(), open);
  if (open == y.end()) return out;  // no boxed span: whole y is reasoning

  auto close = std::find(open + 1, y.end(), vocab.box_close());
  if (close == y.end()) return out;  // unterminated span: malformed
  out.answer.assign(open + 1, close);
  out.well_formed = true;  // trailing tokens after the close are ignored here
  return out;
}

LikelihoodContext build_likelihood_context(const Vocab& vocab, const TokenSeq& x,
                                           const TokenSeq& reasoning,
                                           const TokenSeq& truth, int max_length) {
  vocab.check_seq(x);
  vocab.check_seq(reasoning);
  vocab.check_seq(truth);

  LikelihoodContext ctx;
  ctx.tokens.reserve(x.size() + reasoning.size() + truth.size() + 2);
  ctx.tokens.insert(ctx.tokens.end(), x.begin(), x.end());
  ctx.tokens.insert(ctx.tokens.end(), reasoning.begin(), reasoning.end());
  ctx.tokens.push_back(vocab.box_open());
  const int first = static_cast<int>(ctx.tokens.size());
  ctx.tokens.insert(ctx.tokens.end(), truth.begin(), truth.end());
  ctx.tokens.push_back(vocab.box_close());
  for (std::size_t i = 0; i < truth.size(); ++i)
    ctx.truth_positions.push_back(first + static_cast<int>(i));

  if (static_cast<int>(ctx.tokens.size()) > max_length)
    throw SeqOverflowError("likelihood context length " +
                           std::to_string(ctx.tokens.size()) + " exceeds cap " +
                           std::to_string(max_length));
  return ctx;
}

TokenSeq build_answer_conditioned_prompt(const Vocab& vocab, const TokenSeq& x,
                                         const TokenSeq& truth, int max_length) {
  vocab.check_seq(x);
  vocab.check_seq(truth);
  TokenSeq out;
  out.reserve(x.size() + truth.size() + 3);
  out.insert(out.end(), x.begin(), x.end());
  out.push_back(vocab.given());
  out.push_back(vocab.box_open());
  out.insert(out.end(), truth.begin(), truth.end());
  out.push_back(vocab.box_close());
  if (static_cast<int>(out.size()) > max_length)
    throw SeqOverflowError("answer-conditioned prompt length " +
                           std::to_string(out.size()) + " exceeds cap " +
                           std::to_string(max_length));
  return out;
}

}  // namespace boxrl
