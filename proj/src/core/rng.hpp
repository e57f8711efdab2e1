#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace ff {

// Deterministic PRNG (xoshiro256++ seeded through splitmix64) with explicit
// uniform/normal transforms so streams are bit-identical across platforms.
// Standard-library distributions are implementation defined, which would
// break reproducibility of experiment outputs between compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();

  // Unbiased integer in [0, bound); bound must be >= 1.
  std::uint64_t uniform_int(std::uint64_t bound);

  // Standard normal via Box-Muller; the spare draw is cached.
  double normal();

  std::vector<double> normal_vec(std::size_t n);

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  // Independent child stream; deterministic in (seed, tag).
  Rng split(std::uint64_t tag) const;

  std::uint64_t seed() const { return seed_; }

  // Full generator state for checkpointing.
  struct Snapshot {
    std::uint64_t seed = 0;
    std::uint64_t state[4] = {0, 0, 0, 0};
    bool has_cached = false;
    double cached = 0.0;
  };
  Snapshot snapshot() const;
  static Rng from_snapshot(const Snapshot& snap);

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace ff
