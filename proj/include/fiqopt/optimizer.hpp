#pragma once

#include <optional>
#include <vector>

#include "fiqopt/pairing.hpp"
#include "fiqopt/types.hpp"

namespace fiqopt {

struct RepeatResult {
  QualityVector optimized;
  std::size_t iterations_run = 0;
  std::vector<double> per_iteration_delta;  // mean |change| per iteration
};

// Correction factor for one sample: the mean normalized similarity of its
// owned pairs whose partner beats the sample's current quality by at least
// lambda (ties pass the gate). A sample that owns no pairs carries no
// evidence and returns nullopt in every mode; the modes only differ in how
// an owned-but-fully-gated-out pair set is handled (see ThetaMode).
std::optional<double> correction_factor(std::size_t sample_row, const QualityVector& q,
                                        const PairTable& pairs, double lambda, ThetaMode mode);

// One relaxation step toward the correction factor: q + epsilon*(theta - q).
// No evidence means no movement. With epsilon in [0,1] and both inputs in
// [0,1] the result stays in [0,1] and the step magnitude stays within
// epsilon up to one final rounding.
double update_quality(double q, std::optional<double> theta, double epsilon);

// One synchronous pass: every sample's correction factor is computed against
// the incoming qualities, then all samples step at once. Parallel workers
// write disjoint ranges of the output, so any thread count gives identical
// results.
QualityVector run_iteration(const QualityVector& q, const PairTable& pairs,
                            const OptimConfig& config);

// One repeat: sample a fresh pair table with the seed derived from
// (config.seed, repeat_index), score it once, then run config.iterations
// passes. The pair table is fixed for the whole repeat and qualities are
// never re-normalized between passes.
RepeatResult optimize_repeat(const Dataset& dataset, const QualityVector& base_q,
                             const OptimConfig& config, std::size_t repeat_index);

// Full run: the elementwise arithmetic mean of config.repeats independent
// repeats, accumulated in repeat-index order. The running-mean form keeps
// iterations == 0 and epsilon == 0 exact no-ops.
QualityVector optimize(const Dataset& dataset, const QualityVector& base_q,
                       const OptimConfig& config);

}  // namespace fiqopt
