#pragma once

#include <cstdint>
#include <initializer_list>

namespace bipnet {

/// Stateless 64-bit mixer (SplitMix64 finalizer).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Key of the substream addressed by (seed, counters...). Different counter
/// tuples give statistically independent streams; no state is shared, so the
/// draw for a given address never depends on scheduling.
std::uint64_t substream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) noexcept;

/// Small generator bound to one substream.
class Substream {
 public:
  explicit Substream(std::uint64_t key) noexcept : state_(key) {}
  Substream(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) noexcept
      : state_(substream_key(seed, counters)) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  /// Uniform integer on [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;
  double normal() noexcept;
  /// Inversion below mean 10, PTRS transformed rejection above.
  std::uint64_t poisson(double mean);
  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace bipnet
