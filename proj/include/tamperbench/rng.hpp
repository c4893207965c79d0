#pragma once

#include <cstdint>
#include <limits>

namespace tamperbench {

// Counter-based pseudo-random stream. The i-th output is a pure function of
// (seed, i), so a stream can be replayed from its seed and cheaply forked
// into statistically independent substreams. Every randomized operation in
// the library takes one of these explicitly; nothing draws from hidden
// global state.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() { return mix(seed_, counter_++); }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_unit() < p; }

  // Uniform integer in [0, bound) by rejection, bound >= 1.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % bound;
  }

  // Derives a child stream keyed by `key` without advancing this stream.
  // Equal (seed, key) pairs always give the same child; used to hand out
  // per-row streams in experiment grids.
  RngStream fork(std::uint64_t key) const {
    return RngStream(mix(seed_ ^ 0x6a09e667f3bcc909ULL, key));
  }

  // Derives the next sequential child stream, advancing this stream.
  RngStream split() { return RngStream(next_u64()); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  // splitmix64 finalizer over seed + step.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t step) {
    std::uint64_t z = seed + (step + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

// Adapter so RngStream can drive <random> distributions.
struct RngEngine {
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return stream->next_u64(); }
  RngStream* stream;
};

}  // namespace tamperbench
