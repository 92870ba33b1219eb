#include "cyclesim/random.hpp"

#include <cmath>

namespace cyclesim {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::stream(std::uint64_t root_seed, std::string_view purpose) {
  // FNV-1a over the purpose tag, folded into the root seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : purpose) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return Rng(splitmix64(root_seed ^ splitmix64(h)));
}

double Rng::exponential(double rate) { return -std::log(uniform()) / rate; }

}  // namespace cyclesim
