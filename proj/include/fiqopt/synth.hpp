#pragma once

#include <cstdint>
#include <span>

#include "fiqopt/types.hpp"

namespace fiqopt {

// Synthetic dataset recipe. Per identity one prototype direction is drawn
// uniformly on the unit sphere; each image gets a hidden quality q ~ U[0,1]
// and an embedding normalize(prototype + g*z) with isotropic Gaussian z and
// noise gain g = noise_floor + noise_scale*(1 - q), so low quality means a
// noisy embedding. The recorded base quality is q plus Gaussian label noise,
// clamped to [0,1]; the hidden q is kept alongside for scoring.
struct SynthSpec {
  std::size_t n_identities = 200;
  std::size_t images_per_identity = 10;
  std::size_t dim = 64;
  double noise_floor = 0.05;
  double noise_scale = 0.8;
  double base_label_noise_sigma = 0.15;
  std::uint64_t seed = 0;

  // n_identities >= 2, images_per_identity >= 2, dim >= 2, noise terms >= 0.
  void validate() const;
};

struct SynthResult {
  Dataset dataset;
  QualityVector true_quality;  // hidden per-sample quality, by row
};

// Deterministic in spec.seed: a single splitmix64 stream is consumed in a
// fixed order (per identity: prototype; per image: quality, noise vector,
// label noise), so equal specs give bit-identical datasets.
SynthResult generate(const SynthSpec& spec);

// Spearman rank correlation: Pearson correlation of fractional ranks, ties
// averaged. Throws std::invalid_argument on length mismatch or empty input
// and std::domain_error when either side has zero rank variance.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace fiqopt
