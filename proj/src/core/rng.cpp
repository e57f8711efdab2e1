#include "core/rng.hpp"

#include <cmath>

#include "core/error.hpp"

namespace ff {
namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t s = seed;
  for (auto& word : state_) word = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_int(std::uint64_t bound) {
  if (bound == 0) raise(Errc::invalid_argument, "uniform_int: bound must be >= 1");
  const std::uint64_t threshold = (0ull - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // u1 in (0, 1] keeps the log finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_normal_ = true;
  return r * std::cos(a);
}

std::vector<double> Rng::normal_vec(std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = normal();
  return out;
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_int(i));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

Rng Rng::split(std::uint64_t tag) const {
  std::uint64_t s = seed_ ^ (0xD1B54A32D192ED03ull * (tag + 1));
  return Rng(splitmix64(s));
}

Rng::Snapshot Rng::snapshot() const {
  Snapshot snap;
  snap.seed = seed_;
  for (int i = 0; i < 4; ++i) snap.state[i] = state_[i];
  snap.has_cached = has_cached_normal_;
  snap.cached = cached_normal_;
  return snap;
}

Rng Rng::from_snapshot(const Snapshot& snap) {
  Rng rng(snap.seed);
  for (int i = 0; i < 4; ++i) rng.state_[i] = snap.state[i];
  rng.has_cached_normal_ = snap.has_cached;
  rng.cached_normal_ = snap.cached;
  return rng;
}

}  // namespace ff
