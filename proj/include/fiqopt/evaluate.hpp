#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fiqopt/types.hpp"

namespace fiqopt {

// Verification pairs as embedding row indices. Genuine pairs share an
// identity, impostor pairs do not; load_protocol enforces both.
struct VerificationProtocol {
  std::vector<std::pair<std::size_t, std::size_t>> genuine_pairs;
  std::vector<std::pair<std::size_t, std::size_t>> impostor_pairs;
};

// Error-versus-reject curve: FNMR after discarding the lowest-quality
// genuine pairs, swept over reject fractions.
struct ErcCurve {
  std::vector<double> reject_fractions;  // strictly ascending, in [0,1)
  std::vector<double> fnmr;              // aligned with reject_fractions
  double threshold = 0.0;                // decision threshold behind every point
  double fmr_target = 0.0;
};

// Protocol CSV: header "sample_id_a,sample_id_b,label" with label "genuine"
// or "impostor". Throws std::runtime_error naming the line on unknown ids,
// bad labels, or a label contradicting the identities.
VerificationProtocol load_protocol(const std::filesystem::path& path, const Dataset& dataset);

// Smallest observed score tau with fraction(impostor scores >= tau) <=
// fmr_target. When even the largest score fails (all scores equal, say),
// returns nextafter(max, +inf) so the achieved FMR is 0. Requires a
// nonempty score set and fmr_target in (0,1).
double fmr_threshold(std::span<const double> impostor_scores, double fmr_target);

// FNMR among genuine pairs surviving rejection of the floor(reject_fraction
// * m) lowest-quality pairs; quality ties break by ascending pair index.
// pair_qualities and genuine_scores are aligned by pair index. A pair counts
// as an error when its score is strictly below the threshold. Returns 0 if
// nothing survives. Requires reject_fraction in [0,1).
double fnmr_at_reject(std::span<const double> pair_qualities,
                      std::span<const double> genuine_scores, double threshold,
                      double reject_fraction);

// Full sweep: scores every protocol pair with raw cosine similarity, fixes
// the threshold once on the complete impostor set, then evaluates FNMR at
// each grid point. The grid must be nonempty, strictly ascending and within
// [0,1). Scoring is parallel over pairs; curve assembly is single-threaded
// and deterministic.
ErcCurve erc_curve(const Dataset& dataset, const VerificationProtocol& protocol,
                   const QualityVector& q, double fmr_target, std::span<const double> grid,
                   unsigned threads = 1);

// Area under the curve over [0, max_reject] (trapezoid rule, linear
// interpolation at the cut), normalized by max_reject. Throws
// std::invalid_argument when the curve does not span the range.
double pauc(const ErcCurve& curve, double max_reject);

// Serializes a curve plus its partial areas to JSON:
// {"fmr_target":..., "threshold":..., "points":[{"reject":...,"fnmr":...}],
//  "pauc":{"0.1":..., ...}} with one pauc entry per cutoff.
std::string erc_curve_json(const ErcCurve& curve, std::span<const double> pauc_cutoffs);

}  // namespace fiqopt
