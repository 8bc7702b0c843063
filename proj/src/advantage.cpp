#include "boxrl/advantage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace boxrl {

namespace {

constexpr double kDegenerateStd = 1e-8;

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

MeanStd population_stats(const std::vector<double>& xs) {
  MeanStd out;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(var / n);
  return out;
}

// Tokens where the plain additive form lambda * delta_t points against a
// nonzero advantage with enough magnitude to reverse it.
int count_sign_flips(double adv, const std::vector<double>& delta, double lambda_tok) {
  if (adv == 0.0) return 0;
  int flips = 0;
  for (double d : delta) {
    const double off = lambda_tok * d;
    if (off * adv < 0.0 && std::abs(off) > std::abs(adv)) ++flips;
  }
  return flips;
}

}  // namespace

void ModulationFlags::validate() const {
  if ((tc || dp) && !am)
    throw std::invalid_argument(
        "modulation flags: tc/dp require am (no token signal to shape)");
}

GroupAdvantage group_normalize(const RewardVector& rewards) {
  const std::size_t g = rewards.values.size();
  if (g < 2)
    throw std::invalid_argument("group_normalize: group size must be at least 2");
  for (double r : rewards.values)
    if (!std::isfinite(r))
      throw std::invalid_argument("group_normalize: non-finite reward");

  const MeanStd st = population_stats(rewards.values);
  GroupAdvantage out;
  out.values.assign(g, 0.0);
  if (st.std < kDegenerateStd) {
    out.degenerate = true;  // no relative signal in this group
    return out;
  }
  for (std::size_t j = 0; j < g; ++j)
    out.values[j] = (rewards.values[j] - st.mean) / st.std;
  return out;
}

std::vector<double> normalize_token_signal(const TokenSignal& signal) {
  const std::size_t n = signal.size();
  std::vector<double> out(n, 0.0);
  if (n <= 1) return out;
  for (double s : signal)
    if (!std::isfinite(s))
      throw std::invalid_argument("normalize_token_signal: non-finite entry");

  const MeanStd st = population_stats(signal);
  if (st.std < kDegenerateStd) return out;
  for (std::size_t t = 0; t < n; ++t) out[t] = (signal[t] - st.mean) / st.std;
  return out;
}

ClipResult clip_recenter(const std::vector<double>& delta, double eps_tok) {
  if (!(eps_tok > 0.0))
    throw std::invalid_argument("clip_recenter: eps_tok must be positive");
  ClipResult out;
  out.values.resize(delta.size());
  for (std::size_t t = 0; t < delta.size(); ++t) {
    const double d = delta[t];
    if (d > eps_tok) {
      out.values[t] = eps_tok;
      ++out.clipped;
    } else if (d < -eps_tok) {
      out.values[t] = -eps_tok;
      ++out.clipped;
    } else {
      out.values[t] = d;
    }
  }
  if (!out.values.empty()) {
    double mean = 0.0;
    for (double v : out.values) mean += v;
    mean /= static_cast<double>(out.values.size());
    for (double& v : out.values) v -= mean;  // restore the zero-mean property
  }
  return out;
}

DirectionResult direction_preserve(double adv, const std::vector<double>& delta,
                                   double lambda_tok) {
  if (!(lambda_tok >= 0.0) || lambda_tok >= 1.0)
    throw std::invalid_argument("direction_preserve: lambda_tok must be in [0, 1)");

  double s = 1.0;  // scale floor keeps small signals unamplified
  for (double d : delta) s = std::max(s, std::abs(d));

  DirectionResult out;
  out.values.resize(delta.size());
  const double gain = lambda_tok * std::abs(adv);
  for (std::size_t t = 0; t < delta.size(); ++t)
    out.values[t] = adv + gain * (delta[t] / s);
  out.sign_flips = count_sign_flips(adv, delta, lambda_tok);
  return out;
}

std::vector<double> additive_modulate(double adv, const std::vector<double>& delta,
                                      double lambda_tok) {
  if (!(lambda_tok >= 0.0))
    throw std::invalid_argument("additive_modulate: lambda_tok must be >= 0");
  std::vector<double> out(delta.size());
  for (std::size_t t = 0; t < delta.size(); ++t) out[t] = adv + lambda_tok * delta[t];
  return out;
}

AdvantageMatrix assemble(const GroupAdvantage& group,
                         const std::vector<TokenSignal>& token_signals,
                         const std::vector<int>& full_lengths,
                         const ModulationFlags& flags, double lambda_tok,
                         double eps_tok) {
  flags.validate();
  if (!(lambda_tok >= 0.0) || lambda_tok >= 1.0)
    throw std::invalid_argument("assemble: lambda_tok must be in [0, 1)");
  if (!(eps_tok > 0.0))
    throw std::invalid_argument("assemble: eps_tok must be positive");
  const std::size_t g = group.values.size();
  if (full_lengths.size() != g)
    throw std::invalid_argument("assemble: full_lengths size mismatch");
  const bool have_signals = token_signals.size() == g;
  if (flags.am && !have_signals)
    throw std::invalid_argument("assemble: token_signals size mismatch");

  AdvantageMatrix out;
  out.flags = flags;
  out.lambda_tok = lambda_tok;
  out.eps_tok = eps_tok;
  out.rows.resize(g);
  out.reasoning_len.resize(g);

  for (std::size_t j = 0; j < g; ++j) {
    const int t_full = full_lengths[j];
    if (t_full < 1) throw std::invalid_argument("assemble: response length must be >= 1");
    const int t_r = have_signals ? static_cast<int>(token_signals[j].size()) : 0;
    if (t_r > t_full)
      throw std::invalid_argument("assemble: reasoning longer than the response");
    out.reasoning_len[j] = t_r;

    const double adv = group.values[j];
    auto& row = out.rows[j];
    if (group.degenerate) {
      row.assign(static_cast<std::size_t>(t_full), 0.0);  // no signal, no modulation
      continue;
    }
    row.assign(static_cast<std::size_t>(t_full), adv);  // tokens past T_R keep adv
    if (!flags.am || t_r == 0) continue;

    const std::vector<double> delta = normalize_token_signal(token_signals[j]);
    out.telemetry.reasoning_tokens += t_r;
    for (double d : delta)
      if (std::abs(d) > eps_tok) ++out.telemetry.would_clip;

    std::vector<double> shaped = delta;
    if (flags.tc) {
      ClipResult cr = clip_recenter(delta, eps_tok);
      out.telemetry.clipped += cr.clipped;
      shaped = std::move(cr.values);
    }
    std::vector<double> modulated;
    if (flags.dp) {
      DirectionResult dr = direction_preserve(adv, shaped, lambda_tok);
      out.telemetry.sign_flips += dr.sign_flips;
      modulated = std::move(dr.values);
    } else {
      out.telemetry.sign_flips += count_sign_flips(adv, shaped, lambda_tok);
      modulated = additive_modulate(adv, shaped, lambda_tok);
    }
    for (int t = 0; t < t_r; ++t)
      row[static_cast<std::size_t>(t)] = modulated[static_cast<std::size_t>(t)];
  }
  return out;
}

}  // namespace boxrl
