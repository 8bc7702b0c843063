#include <doctest.h>

#include <stdexcept>

#include "boxrl/seq.hpp"
#include "boxrl/vocab.hpp"

using namespace boxrl;

namespace {

const Vocab& vv() {
  static Vocab v = Vocab::standard();
  return v;
}

TokenSeq ids(std::initializer_list<const char*> glyphs) {
  TokenSeq out;
  for (const char* g : glyphs) out.push_back(vv().id_of(g));
  return out;
}

}  // namespace

TEST_CASE("split_response separates reasoning from the boxed answer") {
  const Vocab& v = vv();
  TokenSeq y = ids({"4", "-", "0", "=", "4", "<box>", "4", "</box>", "<eos>"});
  ResponseSplit s = split_response(v, y);
  CHECK(s.well_formed);
  CHECK(s.reasoning == ids({"4", "-", "0", "=", "4"}));
  CHECK(s.answer == ids({"4"}));
  CHECK(s.full_length == 9);
}

TEST_CASE("split_response flags responses without a complete boxed span") {
  const Vocab& v = vv();

  SUBCASE("no box markers at all") {
    TokenSeq y = ids({"4", "5", "<eos>"});
    ResponseSplit s = split_response(v, y);
    CHECK_FALSE(s.well_formed);
    CHECK(s.reasoning == y);  // everything counts as reasoning
    CHECK(s.answer.empty());
    CHECK(s.full_length == 3);
  }

  SUBCASE("open marker without a close") {
    TokenSeq y = ids({"4", "<box>", "4", "<eos>"});
    ResponseSplit s = split_response(v, y);
    CHECK_FALSE(s.well_formed);
    CHECK(s.reasoning == ids({"4"}));
    CHECK(s.answer.empty());
  }

  SUBCASE("close before open leaves the span unterminated") {
    TokenSeq y = ids({"</box>", "4", "<box>", "4"});
    ResponseSplit s = split_response(v, y);
    CHECK_FALSE(s.well_formed);
    CHECK(s.reasoning == ids({"</box>", "4"}));
  }

  SUBCASE("empty boxed span is well formed with an empty answer") {
    TokenSeq y = ids({"<box>", "</box>", "<eos>"});
    ResponseSplit s = split_response(v, y);
    CHECK(s.well_formed);
    CHECK(s.reasoning.empty());
    CHECK(s.answer.empty());
  }

  SUBCASE("tokens after the close are ignored for extraction, kept in length") {
    TokenSeq y = ids({"1", "<box>", "2", "</box>", "3", "3", "3"});
    ResponseSplit s = split_response(v, y);
    CHECK(s.well_formed);
    CHECK(s.answer == ids({"2"}));
    CHECK(s.full_length == 7);
  }

  SUBCASE("only the first boxed span counts") {
    TokenSeq y = ids({"<box>", "2", "</box>", "<box>", "3", "</box>"});
    ResponseSplit s = split_response(v, y);
    CHECK(s.well_formed);
    CHECK(s.answer == ids({"2"}));
  }
}

TEST_CASE("split_response rejects empty and out-of-range input") {
  const Vocab& v = vv();
  CHECK_THROWS_AS((void)split_response(v, {}), std::invalid_argument);
  CHECK_THROWS_AS((void)split_response(v, {static_cast<TokenId>(v.size())}),
                  std::exception);
}

TEST_CASE("likelihood context layout and truth positions") {
  const Vocab& v = vv();
  TokenSeq x = ids({"<bos>", "(", "4", "-", "0", ")", "%", "9", "?"});
  TokenSeq reasoning = ids({"4", "-", "0", "=", "4"});
  TokenSeq truth = ids({"4"});
  LikelihoodContext ctx = build_likelihood_context(v, x, reasoning, truth, 64);

  TokenSeq expect = x;
  expect.insert(expect.end(), reasoning.begin(), reasoning.end());
  expect.push_back(v.box_open());
  expect.push_back(truth[0]);
  expect.push_back(v.box_close());
  CHECK(ctx.tokens == expect);
  REQUIRE(ctx.truth_positions.size() == 1);
  CHECK(ctx.truth_positions[0] == static_cast<int>(x.size() + reasoning.size() + 1));
  CHECK(ctx.tokens[static_cast<std::size_t>(ctx.truth_positions[0])] == truth[0]);
}

TEST_CASE("likelihood context supports multi-token truths and empty reasoning") {
  const Vocab& v = vv();
  TokenSeq x = ids({"<bos>", "?"});
  TokenSeq truth = ids({"1", "2"});
  LikelihoodContext ctx = build_likelihood_context(v, x, {}, truth, 64);
  REQUIRE(ctx.truth_positions.size() == 2);
  CHECK(ctx.truth_positions[0] == 3);  // bos ? <box> 1 2 </box>
  CHECK(ctx.truth_positions[1] == 4);
  CHECK(ctx.tokens.size() == 6);
}

TEST_CASE("likelihood context enforces the length cap") {
  const Vocab& v = vv();
  TokenSeq x = ids({"<bos>", "?"});
  TokenSeq truth = ids({"4"});
  // Total assembled length is 5: bos ? <box> 4 </box>.
  CHECK_NOTHROW((void)build_likelihood_context(v, x, {}, truth, 5));
  CHECK_THROWS_AS((void)build_likelihood_context(v, x, {}, truth, 4),
                  SeqOverflowError);
}

TEST_CASE("answer-conditioned prompt appends the marked boxed truth") {
  const Vocab& v = vv();
  TokenSeq x = ids({"<bos>", "(", "4", "-", "0", ")", "%", "9", "?"});
  TokenSeq truth = ids({"4"});
  TokenSeq got = build_answer_conditioned_prompt(v, x, truth, 64);

  TokenSeq expect = x;
  expect.push_back(v.given());
  expect.push_back(v.box_open());
  expect.push_back(truth[0]);
  expect.push_back(v.box_close());
  CHECK(got == expect);

  CHECK_NOTHROW((void)build_answer_conditioned_prompt(v, x, truth, 13));
  CHECK_THROWS_AS((void)build_answer_conditioned_prompt(v, x, truth, 12),
                  SeqOverflowError);
}
