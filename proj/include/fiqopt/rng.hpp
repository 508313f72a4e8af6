#pragma once

#include <cassert>
#include <cstdint>
#include <span>

namespace fiqopt {

// splitmix64. All randomness in the project flows through this generator so
// that runs are reproducible bit-for-bit across platforms; the std
// distributions are implementation-defined and would not be.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform draw from [0, n). Rejection of the low zone keeps it exact.
  std::uint64_t bounded(std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t reject_below = (0 - n) % n;  // 2^64 mod n
    std::uint64_t x = next();
    while (x < reject_below) x = next();
    return x % n;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// Seed of the index-th derived stream, i.e. the index-th output of the master
// splitmix stream. Repeats draw their pair-sampling seeds from here so each
// repeat is reproducible on its own.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  SplitMix64 g(master + index * 0x9e3779b97f4a7c15ull);
  return g.next();
}

// Standard normal draws via Box-Muller. Values are produced in pairs; an
// odd-sized span discards the spare so the consumed stream length depends
// only on the span size.
void fill_gaussian(SplitMix64& rng, std::span<double> out);
double next_gaussian(SplitMix64& rng);

}  // namespace fiqopt
