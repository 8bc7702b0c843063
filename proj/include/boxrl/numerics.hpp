#pragma once
// Numeric helpers shared by the policy and trainer internals. Randomness is
// pinned to mt19937_64 plus fixed bit-to-double conversions so that runs with
// equal seeds replay exactly.

#include <cstdint>
#include <random>
#include <span>

namespace boxrl {

// In-place log-softmax (max-shifted, exact normalization).
void log_softmax_inplace(std::span<double> logits);

// KL(p || q) and entropy from log-distributions.
double kl_from_logdists(std::span<const double> logp, std::span<const double> logq);
double entropy_from_logdist(std::span<const double> logp);

// splitmix64 mix of a small tuple; used to derive stream seeds from the
// master seed so checkpoints can resume without serialized generator state.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t s0,
                          std::uint64_t s1 = 0, std::uint64_t s2 = 0,
                          std::uint64_t s3 = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }
  double uniform();                  // [0, 1), top 53 bits
  double gaussian();                 // Box-Muller on two pinned uniforms
  int uniform_int(int lo, int hi);   // inclusive bounds

 private:
  std::mt19937_64 gen_;
};

}  // namespace boxrl
