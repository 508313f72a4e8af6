#include "fiqopt/rng.hpp"

#include <cmath>

namespace fiqopt {

namespace {
constexpr double kTwoPi = 6.283185307179586;
}  // namespace

void fill_gaussian(SplitMix64& rng, std::span<double> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    // u1 in (0, 1] keeps the log finite; u2 in [0, 1).
    const double u1 = (static_cast<double>(rng.next() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = rng.next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i++] = r * std::cos(kTwoPi * u2);
    if (i < out.size()) out[i++] = r * std::sin(kTwoPi * u2);
  }
}

double next_gaussian(SplitMix64& rng) {
  double v = 0.0;
  fill_gaussian(rng, std::span<double>(&v, 1));
  return v;
}

}  // namespace fiqopt
