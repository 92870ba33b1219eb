#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cyclesim {

/// Seedable 64-bit generator (Mersenne Twister, std::mt19937_64).
///
/// Uniform draws are produced from the raw 64-bit output directly rather than
/// through std::uniform_real_distribution, whose algorithm is unspecified and
/// differs between standard libraries. A seed therefore reproduces the same
/// stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for one purpose ("arrivals/N", "params", ...).
  /// Streams derived from the same root seed never share state, so a new
  /// consumer does not shift the sequence seen by existing ones.
  static Rng stream(std::uint64_t root_seed, std::string_view purpose);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1): 53 random bits centred in their cell.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Exponential variate with the given rate (events per unit).
  double exponential(double rate);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer, used to decorrelate derived stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace cyclesim
