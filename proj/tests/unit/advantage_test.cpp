#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "boxrl/advantage.hpp"
#include "boxrl/numerics.hpp"
#include "boxrl/reference.hpp"

using namespace boxrl;
using doctest::Approx;

namespace {

RewardVector rv(std::vector<double> values) {
  RewardVector out;
  out.values = std::move(values);
  return out;
}

}  // namespace

// ---- group normalization ----------------------------------------------------

TEST_CASE("group advantages: hand-worked values") {
  // Mean 0.5, population std 0.5.
  GroupAdvantage a = group_normalize(rv({1, 0, 0, 1}));
  CHECK_FALSE(a.degenerate);
  CHECK(a.values[0] == Approx(1.0).epsilon(1e-12));
  CHECK(a.values[1] == Approx(-1.0).epsilon(1e-12));
  CHECK(a.values[2] == Approx(-1.0).epsilon(1e-12));
  CHECK(a.values[3] == Approx(1.0).epsilon(1e-12));

  // Mean -2, population std sqrt(0.5).
  GroupAdvantage b = group_normalize(rv({-2, -1, -3, -2}));
  CHECK(b.values[0] == Approx(0.0).epsilon(1e-12));
  CHECK(b.values[1] == Approx(std::sqrt(2.0)).epsilon(1e-9));
  CHECK(b.values[2] == Approx(-std::sqrt(2.0)).epsilon(1e-9));
  CHECK(b.values[3] == Approx(0.0).epsilon(1e-12));
}

TEST_CASE("group advantages: constant groups are degenerate, not an error") {
  for (double c : {0.0, 1.0, -17.25}) {
    GroupAdvantage g = group_normalize(rv({c, c, c, c}));
    CHECK(g.degenerate);
    for (double v : g.values) CHECK(v == 0.0);
  }
  // Near-constant below the 1e-8 population-std threshold also degenerates.
  GroupAdvantage tiny = group_normalize(rv({1.0, 1.0 + 1e-9}));
  CHECK(tiny.degenerate);
}

TEST_CASE("group advantages: validation") {
  CHECK_THROWS_AS((void)group_normalize(rv({1.0})), std::invalid_argument);
  CHECK_THROWS_AS((void)group_normalize(rv({})), std::invalid_argument);
  CHECK_THROWS_AS((void)group_normalize(rv({1.0, std::nan("")})),
                  std::invalid_argument);
}

TEST_CASE("group advantages are zero-mean unit-std and match the oracle") {
  Rng rng(101);
  for (int it = 0; it < 200; ++it) {
    const int g = rng.uniform_int(2, 9);
    std::vector<double> rewards(static_cast<std::size_t>(g));
    for (double& r : rewards) r = 10.0 * rng.uniform() - 5.0;

    GroupAdvantage got = group_normalize(rv(rewards));
    reference::GroupResult want = reference::group_advantages(rewards);
    CHECK(got.degenerate == want.degenerate);
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < rewards.size(); ++j) {
      CHECK(got.values[j] == Approx(want.advantages[j]).epsilon(1e-12));
      mean += got.values[j];
    }
    mean /= g;
    for (double v : got.values) var += (v - mean) * (v - mean);
    CHECK(mean == Approx(0.0).epsilon(1e-9));
    if (!got.degenerate) CHECK(var / g == Approx(1.0).epsilon(1e-9));
  }
}

// ---- token signal normalization ----------------------------------------------

TEST_CASE("token signal normalization: hand values and degenerate shapes") {
  // Population std of {1,2,3} is sqrt(2/3).
  std::vector<double> n = normalize_token_signal({1, 2, 3});
  CHECK(n[0] == Approx(-1.2247448713915890).epsilon(1e-9));
  CHECK(n[1] == Approx(0.0).epsilon(1e-12));
  CHECK(n[2] == Approx(1.2247448713915890).epsilon(1e-9));

  CHECK(normalize_token_signal({}).empty());
  CHECK(normalize_token_signal({5.0}) == std::vector<double>{0.0});
  CHECK(normalize_token_signal({2.0, 2.0, 2.0}) ==
        std::vector<double>{0.0, 0.0, 0.0});
  CHECK_THROWS_AS((void)normalize_token_signal({1.0, std::nan("")}),
                  std::invalid_argument);
}

// ---- clipping with re-centering ----------------------------------------------

TEST_CASE("clip_recenter: worked example stays zero-mean") {
  ClipResult r = clip_recenter({2.5, -0.5, -2.0}, 2.0);
  CHECK(r.clipped == 1);
  CHECK(r.values[0] == Approx(13.0 / 6.0).epsilon(1e-9));   //  2.1667
  CHECK(r.values[1] == Approx(-1.0 / 3.0).epsilon(1e-9));   // -0.3333
  CHECK(r.values[2] == Approx(-11.0 / 6.0).epsilon(1e-9));  // -1.8333

  ClipResult all = clip_recenter({3, 3, -6}, 2.0);
  CHECK(all.clipped == 3);
  CHECK(all.values[0] == Approx(4.0 / 3.0).epsilon(1e-9));
  CHECK(all.values[1] == Approx(4.0 / 3.0).epsilon(1e-9));
  CHECK(all.values[2] == Approx(-8.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("clip_recenter properties: zero mean, bounded spread from the mean") {
  Rng rng(202);
  for (int it = 0; it < 300; ++it) {
    const int n = rng.uniform_int(1, 12);
    const double eps = 0.5 + 2.0 * rng.uniform();
    std::vector<double> delta(static_cast<std::size_t>(n));
    for (double& d : delta) d = 12.0 * rng.uniform() - 6.0;

    ClipResult r = clip_recenter(delta, eps);
    double mean = 0.0;
    for (double v : r.values) mean += v;
    CHECK(std::abs(mean / n) < 1e-9);
    // Post-recenter values stay within the clip band around the removed mean.
    for (double v : r.values) CHECK(std::abs(v) <= 2.0 * eps + 1e-12);

    int manual_clipped = 0;
    for (double d : delta)
      if (d > eps || d < -eps) ++manual_clipped;
    CHECK(r.clipped == manual_clipped);
  }
  CHECK_THROWS_AS((void)clip_recenter({1.0}, 0.0), std::invalid_argument);
}

// ---- direction-preserving modulation -------------------------------------------

TEST_CASE("direction_preserve: worked example") {
  // Post-clip deltas from the clipping example, advantage -1, lambda 0.1,
  // scale s = max(1, 13/6) = 13/6.
  std::vector<double> delta{13.0 / 6.0, -1.0 / 3.0, -11.0 / 6.0};
  DirectionResult r = direction_preserve(-1.0, delta, 0.1);
  CHECK(r.values[0] == Approx(-0.9).epsilon(1e-4));
  CHECK(r.values[1] == Approx(-1.0153846153846153).epsilon(1e-4));
  CHECK(r.values[2] == Approx(-1.0846153846153845).epsilon(1e-4));
  // The additive form would not flip a unit advantage at these magnitudes.
  CHECK(r.sign_flips == 0);
}

TEST_CASE("direction_preserve keeps the advantage sign on every token") {
  Rng rng(303);
  for (int it = 0; it < 2000; ++it) {
    const int n = rng.uniform_int(1, 10);
    const double adv = 4.0 * rng.uniform() - 2.0;
    const double lambda = 0.99 * rng.uniform();
    std::vector<double> delta(static_cast<std::size_t>(n));
    for (double& d : delta) d = 20.0 * rng.uniform() - 10.0;

    DirectionResult r = direction_preserve(adv, delta, lambda);
    for (double v : r.values) {
      if (adv > 0.0) CHECK(v > 0.0);
      if (adv < 0.0) CHECK(v < 0.0);
      if (adv == 0.0) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("direction_preserve scale floor: small signals pass through unscaled") {
  // max |delta| <= 1 keeps s at 1, so the offset is exactly lambda*|adv|*delta.
  DirectionResult r = direction_preserve(2.0, {0.5, -0.25}, 0.2);
  CHECK(r.values[0] == Approx(2.0 + 0.2 * 2.0 * 0.5).epsilon(1e-12));
  CHECK(r.values[1] == Approx(2.0 - 0.2 * 2.0 * 0.25).epsilon(1e-12));

  CHECK_THROWS_AS((void)direction_preserve(1.0, {0.0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS((void)direction_preserve(1.0, {0.0}, -0.1), std::invalid_argument);
}

TEST_CASE("additive form and the sign-flip counter") {
  // adv 0.1, lambda 0.1, delta -3: additive gives -0.2, an actual direction flip.
  std::vector<double> add = additive_modulate(0.1, {-3.0}, 0.1);
  CHECK(add[0] == Approx(-0.2).epsilon(1e-12));

  DirectionResult dp = direction_preserve(0.1, {-3.0}, 0.1);
  CHECK(dp.sign_flips == 1);       // counted against the additive form
  CHECK(dp.values[0] > 0.0);       // but the guarded value keeps the sign
  CHECK(dp.values[0] == Approx(0.1 - 0.1 * 0.1 * (3.0 / 3.0)).epsilon(1e-12));

  // Offsets aligned with the advantage never count as flips.
  CHECK(direction_preserve(0.1, {3.0}, 0.1).sign_flips == 0);
  // Opposing but too small to reverse: no flip.
  CHECK(direction_preserve(1.0, {-3.0}, 0.1).sign_flips == 0);
}

// ---- full pipeline -------------------------------------------------------------

TEST_CASE("assemble: plain broadcast when modulation is off") {
  GroupAdvantage g = group_normalize(rv({1, 0, 0, 1}));
  AdvantageMatrix m = assemble(g, {}, {3, 5, 2, 4}, ModulationFlags{}, 0.1, 2.0);
  REQUIRE(m.rows.size() == 4);
  for (std::size_t j = 0; j < 4; ++j) {
    for (double v : m.rows[j]) CHECK(v == Approx(g.values[j]).epsilon(1e-12));
  }
  CHECK(m.rows[1].size() == 5);
  CHECK(m.telemetry.reasoning_tokens == 0);  // nothing modulated
}

TEST_CASE("assemble: degenerate groups yield an all-zero matrix") {
  GroupAdvantage g = group_normalize(rv({1, 1, 1, 1}));
  std::vector<TokenSignal> signals{{1, 2}, {3, 4}, {0, 0}, {5, 5}};
  AdvantageMatrix m = assemble(g, signals, {2, 2, 2, 2},
                               ModulationFlags{true, true, true}, 0.1, 2.0);
  for (const auto& row : m.rows)
    for (double v : row) CHECK(v == 0.0);
  CHECK(m.telemetry.reasoning_tokens == 0);
}

TEST_CASE("assemble: tokens past the reasoning prefix carry the plain advantage") {
  GroupAdvantage g = group_normalize(rv({2, 0}));
  std::vector<TokenSignal> signals{{1.0, -1.0, 3.0}, {}};
  AdvantageMatrix m = assemble(g, signals, {6, 4},
                               ModulationFlags{true, false, false}, 0.1, 2.0);
  REQUIRE(m.rows[0].size() == 6);
  // Reasoning tokens are modulated...
  std::vector<double> delta = normalize_token_signal(signals[0]);
  for (int t = 0; t < 3; ++t)
    CHECK(m.rows[0][static_cast<std::size_t>(t)] ==
          Approx(g.values[0] + 0.1 * delta[static_cast<std::size_t>(t)])
              .epsilon(1e-12));
  // ...and the boxed-answer tail keeps the response advantage.
  for (int t = 3; t < 6; ++t)
    CHECK(m.rows[0][static_cast<std::size_t>(t)] ==
          Approx(g.values[0]).epsilon(1e-12));
  // An empty signal row is broadcast everywhere.
  for (double v : m.rows[1]) CHECK(v == Approx(g.values[1]).epsilon(1e-12));
}

TEST_CASE("assemble matches the straight-line oracle across random cases") {
  Rng rng(404);
  for (int it = 0; it < 500; ++it) {
    const int g = rng.uniform_int(2, 8);
    RewardVector rewards;
    const bool constant = rng.uniform() < 0.1;
    const double base = 4.0 * rng.uniform() - 2.0;
    for (int j = 0; j < g; ++j)
      rewards.values.push_back(constant ? base : 4.0 * rng.uniform() - 2.0);

    ModulationFlags flags;
    flags.am = rng.uniform() < 0.7;
    flags.tc = flags.am && rng.uniform() < 0.5;
    flags.dp = flags.am && rng.uniform() < 0.5;
    const double lambda = 0.95 * rng.uniform();
    const double eps = 0.5 + 2.0 * rng.uniform();

    std::vector<TokenSignal> signals(static_cast<std::size_t>(g));
    std::vector<int> lengths(static_cast<std::size_t>(g));
    for (int j = 0; j < g; ++j) {
      const int t_r = rng.uniform_int(0, 5);
      const int t_full = std::max(1, t_r + rng.uniform_int(0, 4));
      lengths[static_cast<std::size_t>(j)] = t_full;
      for (int t = 0; t < t_r; ++t)
        signals[static_cast<std::size_t>(j)].push_back(8.0 * rng.uniform() - 4.0);
    }

    GroupAdvantage adv = group_normalize(rewards);
    AdvantageMatrix m = assemble(adv, signals, lengths, flags, lambda, eps);
    reference::GroupResult oracle = reference::group_advantages(rewards.values);

    for (int j = 0; j < g; ++j) {
      std::vector<double> want = reference::modulated_row(
          oracle.advantages[static_cast<std::size_t>(j)],
          signals[static_cast<std::size_t>(j)],
          lengths[static_cast<std::size_t>(j)], flags.am, flags.tc, flags.dp,
          lambda, eps, oracle.degenerate);
      REQUIRE(m.rows[static_cast<std::size_t>(j)].size() == want.size());
      for (std::size_t t = 0; t < want.size(); ++t)
        CHECK(m.rows[static_cast<std::size_t>(j)][t] ==
              Approx(want[t]).epsilon(1e-9));
    }
  }
}

TEST_CASE("assemble: validation") {
  GroupAdvantage g = group_normalize(rv({1, 0}));
  CHECK_THROWS_AS(
      (void)assemble(g, {}, {3}, ModulationFlags{}, 0.1, 2.0),  // length mismatch
      std::invalid_argument);
  CHECK_THROWS_AS(
      (void)assemble(g, {}, {3, 0}, ModulationFlags{}, 0.1, 2.0),  // empty response
      std::invalid_argument);
  std::vector<TokenSignal> long_signal{{1, 2, 3, 4}, {}};
  CHECK_THROWS_AS((void)assemble(g, long_signal, {3, 3},
                                 ModulationFlags{true, false, false}, 0.1, 2.0),
                  std::invalid_argument);  // reasoning longer than response
  CHECK_THROWS_AS((void)assemble(g, {}, {3, 3},
                                 ModulationFlags{true, false, false}, 0.1, 2.0),
                  std::invalid_argument);  // AM needs signals
  ModulationFlags bad;
  bad.tc = true;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("ablation arms produce distinct token advantages on a crafted group") {
  // Continuous rewards and a large-swing signal separate all four arms.
  GroupAdvantage g = group_normalize(rv({0.9, 0.1, 0.4, 0.6}));
  std::vector<TokenSignal> signals{
      {4.0, -3.0, 0.5}, {1.0, -1.0, 0.0}, {2.0, 2.0, -4.0}, {0.2, 0.1, -0.3}};
  std::vector<int> lengths{5, 5, 5, 5};

  auto run = [&](bool am, bool tc, bool dp) {
    return assemble(g, signals, lengths, ModulationFlags{am, tc, dp}, 0.4, 1.0)
        .rows;
  };
  auto plain = run(false, false, false);
  auto am = run(true, false, false);
  auto am_tc = run(true, true, false);
  auto am_dp = run(true, false, true);
  auto full = run(true, true, true);

  auto differs = [](const std::vector<std::vector<double>>& a,
                    const std::vector<std::vector<double>>& b) {
    for (std::size_t j = 0; j < a.size(); ++j)
      for (std::size_t t = 0; t < a[j].size(); ++t)
        if (std::abs(a[j][t] - b[j][t]) > 1e-9) return true;
    return false;
  };
  CHECK(differs(plain, am));
  CHECK(differs(am, am_tc));
  CHECK(differs(am, am_dp));
  CHECK(differs(am_tc, full));
  CHECK(differs(am_dp, full));
}
