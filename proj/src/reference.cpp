#include "boxrl/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace boxrl::reference {

// Everything here is written as direct, unoptimized transcriptions of the
// formulas so it can serve as an oracle for the production code paths.

GroupResult group_advantages(const std::vector<double>& rewards) {
  if (rewards.size() < 2)
    throw std::invalid_argument("reference::group_advantages: need >= 2 rewards");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;  // population variance
  const double sd = std::sqrt(var);

  GroupResult out;
  out.advantages.assign(rewards.size(), 0.0);
  if (sd < 1e-8) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t j = 0; j < rewards.size(); ++j)
    out.advantages[j] = (rewards[j] - mean) / sd;
  return out;
}

namespace {

std::vector<double> normalize(const std::vector<double>& sig) {
  const std::size_t n = sig.size();
  std::vector<double> out(n, 0.0);
  if (n <= 1) return out;
  double mean = 0.0;
  for (double v : sig) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : sig) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);
  if (sd < 1e-8) return out;
  for (std::size_t t = 0; t < n; ++t) out[t] = (sig[t] - mean) / sd;
  return out;
}

}  // namespace

std::vector<double> modulated_row(double adv, const std::vector<double>& raw_signal,
                                  int full_length, bool am, bool tc, bool dp,
                                  double lambda_tok, double eps_tok,
                                  bool group_degenerate) {
  if ((tc || dp) && !am)
    throw std::invalid_argument("reference::modulated_row: tc/dp require am");
  if (group_degenerate) return std::vector<double>(static_cast<std::size_t>(full_length), 0.0);

  std::vector<double> row(static_cast<std::size_t>(full_length), adv);
  const std::size_t t_r = raw_signal.size();
  if (!am || t_r == 0) return row;

  std::vector<double> delta = normalize(raw_signal);

  if (tc) {
    for (double& v : delta) v = std::clamp(v, -eps_tok, eps_tok);
    double mean = 0.0;
    for (double v : delta) mean += v;
    mean /= static_cast<double>(delta.size());
    for (double& v : delta) v -= mean;
  }

  if (dp) {
    double max_abs = 0.0;
    for (double v : delta) max_abs = std::max(max_abs, std::abs(v));
    const double s = std::max(1.0, max_abs);
    for (std::size_t t = 0; t < t_r; ++t)
      row[t] = adv + lambda_tok * std::abs(adv) * delta[t] / s;
  } else {
    for (std::size_t t = 0; t < t_r; ++t) row[t] = adv + lambda_tok * delta[t];
  }
  return row;
}

GradientSet finite_difference(const PolicyParams& params,
                              const std::function<double(const PolicyParams&)>& f,
                              double delta) {
  if (!(delta > 0.0))
    throw std::invalid_argument("reference::finite_difference: delta must be positive");
  GradientSet g = GradientSet::zeros_like(params);
  PolicyParams probe = params;
  auto run = [&](std::vector<double> PolicyParams::* member,
                 std::vector<double> GradientSet::* slot) {
    std::vector<double>& values = probe.*member;
    std::vector<double>& grads = g.*slot;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + delta;
      const double up = f(probe);
      values[i] = saved - delta;
      const double down = f(probe);
      values[i] = saved;
      grads[i] = (up - down) / (2.0 * delta);
    }
  };
  run(&PolicyParams::embed, &GradientSet::embed);
  run(&PolicyParams::w_hid, &GradientSet::w_hid);
  run(&PolicyParams::b_hid, &GradientSet::b_hid);
  run(&PolicyParams::w_out, &GradientSet::w_out);
  return g;
}

double max_rel_error(const GradientSet& a, const GradientSet& b, double floor) {
  double worst = 0.0;
  auto scan = [&](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
      throw std::invalid_argument("reference::max_rel_error: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double denom = std::max({std::abs(x[i]), std::abs(y[i]), floor});
      worst = std::max(worst, std::abs(x[i] - y[i]) / denom);
    }
  };
  scan(a.embed, b.embed);
  scan(a.w_hid, b.w_hid);
  scan(a.b_hid, b.b_hid);
  scan(a.w_out, b.w_out);
  return worst;
}

}  // namespace boxrl::reference
