#pragma once

#include <cmath>
#include <cstdint>

namespace smmc {

// 64-bit finalizer (SplitMix64). Bijective, so distinct counters never collide.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds one word into a key. Chaining derive_key calls gives a stateless,
// schedule-independent way to address a stream by (seed, episode, slot, user):
// the draw for a given tuple is the same no matter what was drawn before it.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t word) noexcept {
  return mix64((parent + 0x9e3779b97f4a7c15ULL) ^ mix64(word + 0x8bb84b93962eacc9ULL));
}

// Counter-based uniform generator: SplitMix64 walk from a derived key.
// Copyable; copies replay the same sequence.
class RandomStream {
 public:
  explicit constexpr RandomStream(std::uint64_t key) noexcept : state_(key) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double next_unit() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]. Never returns 0, safe to feed into log().
  double next_unit_positive() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Exp(1) via inverse CDF, mean 1.
  double next_exponential() noexcept { return -std::log(next_unit_positive()); }

 private:
  std::uint64_t state_;
};

// One keyed draw without carrying a stream around. Used by the slot loops,
// where every (slot, user) pair must map to a fixed uniform regardless of
// evaluation order or short-circuiting.
inline double keyed_unit(std::uint64_t key, std::uint64_t a, std::uint64_t b) noexcept {
  return static_cast<double>(mix64(derive_key(derive_key(key, a), b)) >> 11) * 0x1.0p-53;
}

}  // namespace smmc
