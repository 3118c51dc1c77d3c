#pragma once

#include <cstdint>
#include <random>

namespace varbench {

// SplitMix64 finalizer applied to (x + golden gamma). Output for x = 0 is
// 0xe220a8397b1dcdaf, matching the reference generator's first draw.
std::uint64_t splitmix64(std::uint64_t x);

// Seed for replicate j of an experiment; a pure function of (master, j).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Seed for an independent named stream of a replicate, e.g. the noise of
// round k. Tags keep arm and noise streams apart.
enum class StreamTag : std::uint64_t {
  kArms = 0x41524d53,
  kNoise = 0x4e4f4953,
  kSigma = 0x5349474d,
  kTransitions = 0x5452414e,
  kEpc = 0x45504321,
  kMartingale = 0x4d415254,
};
std::uint64_t stream_seed(std::uint64_t seed, StreamTag tag, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, StreamTag tag, std::uint64_t index)
      : engine_(stream_seed(seed, tag, index)) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }
  // +1 or -1 with probability 1/2 each.
  double rademacher() { return (engine_() >> 63) != 0 ? 1.0 : -1.0; }
  bool bernoulli(double p) { return uniform() < p; }
  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace varbench
