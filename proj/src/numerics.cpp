#include "boxrl/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace boxrl {

void log_softmax_inplace(std::span<double> logits) {
  if (logits.empty()) throw std::invalid_argument("log_softmax: empty input");
  double mx = logits[0];
  for (double v : logits)
    if (v > mx) mx = v;
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (double& v : logits) v -= lse;
}

double kl_from_logdists(std::span<const double> logp, std::span<const double> logq) {
  if (logp.size() != logq.size())
    throw std::invalid_argument("kl: dimension mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < logp.size(); ++i)
    kl += std::exp(logp[i]) * (logp[i] - logq[i]);
  return kl;
}

double entropy_from_logdist(std::span<const double> logp) {
  double h = 0.0;
  for (double lp : logp) h -= std::exp(lp) * lp;
  return h;
}

namespace {

std::uint64_t mix(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t s0, std::uint64_t s1,
                          std::uint64_t s2, std::uint64_t s3) {
  std::uint64_t state = master;
  std::uint64_t out = mix(state);
  state ^= s0;
  out ^= mix(state);
  state ^= s1;
  out ^= mix(state);
  state ^= s2;
  out ^= mix(state);
  state ^= s3;
  out ^= mix(state);
  return out;
}

double Rng::uniform() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  // Box-Muller; u1 shifted into (0, 1] so the log stays finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int Rng::uniform_int(int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
  const int n = hi - lo + 1;
  int k = static_cast<int>(uniform() * n);
  if (k >= n) k = n - 1;  // guards the u == 1-ulp edge
  return lo + k;
}

}  // namespace boxrl
