#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "boxrl/rewards.hpp"
#include "boxrl/seq.hpp"
#include "boxrl/vocab.hpp"

using namespace boxrl;
using doctest::Approx;

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

PolicyDims standard_dims() {
  PolicyDims d;
  d.vocab_size = vv().size();
  d.window = 8;
  d.d_emb = 4;
  d.d_hid = 8;
  d.pad_id = vv().pad();
  return d;
}

}  // namespace

TEST_CASE("reward mode names round-trip") {
  for (RewardMode m : {RewardMode::binary, RewardMode::likelihood,
                       RewardMode::generalthinker})
    CHECK(reward_mode_from_name(reward_mode_name(m)) == m);
  CHECK_THROWS_AS((void)reward_mode_from_name("bogus"), std::invalid_argument);
}

TEST_CASE("binary reward demands a well-formed exact match") {
  const Vocab& v = vv();
  TokenSeq truth = ids({"4"});

  ResponseSplit good = split_response(
      v, ids({"4", "-", "0", "=", "4", "<box>", "4", "</box>", "<eos>"}));
  CHECK(binary_reward(good, truth) == 1.0);

  ResponseSplit wrong = split_response(
      v, ids({"4", "-", "0", "=", "4", "<box>", "5", "</box>", "<eos>"}));
  CHECK(binary_reward(wrong, truth) == 0.0);

  ResponseSplit malformed = split_response(v, ids({"4", "4", "<eos>"}));
  CHECK(binary_reward(malformed, truth) == 0.0);

  // Unboxed occurrences of the truth never count.
  ResponseSplit unboxed = split_response(v, ids({"4", "<box>", "</box>", "<eos>"}));
  CHECK(binary_reward(unboxed, truth) == 0.0);

  // Multi-token answers must match the full truth exactly.
  ResponseSplit padded = split_response(v, ids({"<box>", "4", "4", "</box>"}));
  CHECK(binary_reward(padded, truth) == 0.0);
  CHECK(binary_reward(padded, ids({"4", "4"})) == 1.0);
}

TEST_CASE("likelihood reward under uniform parameters is -T ln V") {
  const Vocab& v = vv();
  PolicyParams p = PolicyParams::zeros(standard_dims());
  TokenSeq x = ids({"<bos>", "(", "4", "-", "0", ")", "%", "9", "?"});
  TokenSeq reasoning = ids({"4", "-", "0", "=", "4"});

  // One truth token: -ln 32 = -3.4657359027997265.
  CHECK(likelihood_reward(p, v, x, reasoning, ids({"4"}), 64) ==
        Approx(-3.4657359027997265).epsilon(1e-12));
  // Two truth tokens double the sum.
  CHECK(likelihood_reward(p, v, x, reasoning, ids({"4", "7"}), 64) ==
        Approx(2.0 * -3.4657359027997265).epsilon(1e-12));
}

TEST_CASE("likelihood reward teacher-forces the truth inside the boxed span") {
  const Vocab& v = vv();
  PolicyParams p = PolicyParams::gaussian_init(standard_dims(), 0.3, 17);
  TokenSeq x = ids({"<bos>", "max", "7", "4", "0", "9", "?"});
  TokenSeq reasoning = ids({"9", "=", "D"});
  TokenSeq truth = ids({"D"});

  // Manual recomputation: prefix is x ++ reasoning ++ <box>.
  TokenSeq prefix = x;
  prefix.insert(prefix.end(), reasoning.begin(), reasoning.end());
  prefix.push_back(v.box_open());
  double expect = token_logprobs(p, prefix, truth)[0];
  CHECK(likelihood_reward(p, v, x, reasoning, truth, 64) ==
        Approx(expect).epsilon(1e-12));
}

TEST_CASE("likelihood reward edge cases") {
  const Vocab& v = vv();
  PolicyParams p = PolicyParams::gaussian_init(standard_dims(), 0.3, 18);
  TokenSeq x = ids({"<bos>", "?"});

  // Empty truth scores zero by definition.
  CHECK(likelihood_reward(p, v, x, ids({"1"}), {}, 64) == 0.0);

  // Context overflow propagates as SeqOverflowError.
  CHECK_THROWS_AS((void)likelihood_reward(p, v, x, ids({"1"}), ids({"4"}), 5),
                  SeqOverflowError);
}

TEST_CASE("token compatibility is the conditioned-minus-reference logprob gap") {
  const Vocab& v = vv();
  PolicyParams cur = PolicyParams::gaussian_init(standard_dims(), 0.3, 19);
  PolicyParams ref = PolicyParams::gaussian_init(standard_dims(), 0.3, 20);
  TokenSeq x = ids({"<bos>", "(", "1", "+", "8", ")", "%", "8", "?"});
  TokenSeq x_plus = build_answer_conditioned_prompt(v, x, ids({"1"}), 64);
  TokenSeq y = ids({"1", "+", "8", "=", "1", "<box>", "1", "</box>", "<eos>"});
  const int t_r = 5;  // reasoning prefix length

  TokenSignal sig = token_compat(cur, ref, x, x_plus, y, t_r);
  REQUIRE(static_cast<int>(sig.size()) == t_r);

  TokenSeq head(y.begin(), y.begin() + t_r);
  std::vector<double> lc = token_logprobs(cur, x_plus, head);
  std::vector<double> lr = token_logprobs(ref, x, head);
  for (int t = 0; t < t_r; ++t)
    CHECK(sig[static_cast<std::size_t>(t)] ==
          Approx(lc[static_cast<std::size_t>(t)] -
                 lr[static_cast<std::size_t>(t)]).epsilon(1e-12));
}

TEST_CASE("token compatibility vanishes when both policies agree") {
  PolicyParams p = PolicyParams::gaussian_init(standard_dims(), 0.3, 21);
  TokenSeq x = ids({"<bos>", "?"});
  TokenSeq y = ids({"1", "2", "3"});
  // Same params and the SAME prompt on both sides: the gap must be zero.
  TokenSignal sig = token_compat(p, p, x, x, y, 3);
  for (double d : sig) CHECK(d == Approx(0.0).epsilon(1e-15));
}

TEST_CASE("token compatibility validates the reasoning length") {
  PolicyParams p = PolicyParams::zeros(standard_dims());
  TokenSeq x = ids({"<bos>", "?"});
  TokenSeq y = ids({"1", "2"});
  CHECK(token_compat(p, p, x, x, y, 0).empty());
  CHECK_THROWS_AS((void)token_compat(p, p, x, x, y, 3), std::invalid_argument);
  CHECK_THROWS_AS((void)token_compat(p, p, x, x, y, -1), std::invalid_argument);
}
