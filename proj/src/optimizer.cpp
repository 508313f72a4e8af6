#include "fiqopt/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "fiqopt/log.hpp"
#include "fiqopt/parallel.hpp"
#include "fiqopt/rng.hpp"

namespace fiqopt {

std::optional<double> correction_factor(std::size_t sample_row, const QualityVector& q,
                                        const PairTable& pairs, double lambda, ThetaMode mode) {
  if (sample_row + 1 >= pairs.anchor_offsets.size())
    throw std::invalid_argument("correction_factor: sample_row outside the pair table");
  const std::size_t begin = pairs.anchor_offsets[sample_row];
  const std::size_t end = pairs.anchor_offsets[sample_row + 1];
  if (begin == end) return std::nullopt;  // no mated peer, no evidence

  const double qi = q.values[sample_row];
  double sum = 0.0;
  std::size_t gated = 0;
  for (std::size_t p = begin; p < end; ++p) {
    if (qi <= q.values[pairs.partner[p]] - lambda) {
      sum += pairs.similarity01[p];
      ++gated;
    }
  }
  switch (mode) {
    case ThetaMode::kFormulaLiteral:
      return sum / static_cast<double>(end - begin);
    case ThetaMode::kCountNormalized:
      if (gated == 0) return std::nullopt;
      return sum / static_cast<double>(gated);
    case ThetaMode::kSkipEmpty:
      if (gated == 0) return std::nullopt;
      return sum / static_cast<double>(end - begin);
  }
  return std::nullopt;
}

double update_quality(double q, std::optional<double> theta, double epsilon) {
  if (!theta) return q;
  return q + epsilon * (*theta - q);
}

QualityVector run_iteration(const QualityVector& q, const PairTable& pairs,
                            const OptimConfig& config) {
  const std::size_t n = q.size();
  if (pairs.anchor_offsets.size() != n + 1)
    throw std::invalid_argument("run_iteration: pair table does not match the quality vector");
  QualityVector out;
  out.values.resize(n);
  parallel_for(n, config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r)
      out.values[r] = update_quality(
          q.values[r], correction_factor(r, q, pairs, config.lambda, config.theta_mode),
          config.epsilon);
  });
  return out;
}

RepeatResult optimize_repeat(const Dataset& dataset, const QualityVector& base_q,
                             const OptimConfig& config, std::size_t repeat_index) {
  if (base_q.size() != dataset.size())
    throw std::invalid_argument("optimize_repeat: quality vector does not match the dataset");
  PairTable pairs = sample_mated_pairs(dataset, config.k, derive_seed(config.seed, repeat_index));
  compute_pair_similarities(pairs, dataset.embeddings, config.threads);

  RepeatResult res;
  res.optimized = base_q;
  res.per_iteration_delta.reserve(config.iterations);
  const std::size_t n = base_q.size();
  for (std::size_t it = 0; it < config.iterations; ++it) {
    QualityVector next = run_iteration(res.optimized, pairs, config);
    double delta = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      delta += std::fabs(next.values[r] - res.optimized.values[r]);
    res.per_iteration_delta.push_back(n == 0 ? 0.0 : delta / static_cast<double>(n));
    res.optimized = std::move(next);
  }
  res.iterations_run = config.iterations;
  return res;
}

QualityVector optimize(const Dataset& dataset, const QualityVector& base_q,
                       const OptimConfig& config) {
  config.validate();
  if (base_q.size() != dataset.size())
    throw std::invalid_argument("optimize: quality vector does not match the dataset");

  QualityVector mean;
  mean.values.assign(dataset.size(), 0.0);
  for (std::size_t t = 0; t < config.repeats; ++t) {
    const RepeatResult rep = optimize_repeat(dataset, base_q, config, t);
    // Running mean in repeat-index order; identical repeats (e.g. with zero
    // iterations) leave it bit-exact.
    const double inv = 1.0 / static_cast<double>(t + 1);
    for (std::size_t r = 0; r < mean.values.size(); ++r)
      mean.values[r] += (rep.optimized.values[r] - mean.values[r]) * inv;
    if (!rep.per_iteration_delta.empty())
      log_debug("repeat " + std::to_string(t) + ": final mean step " +
                std::to_string(rep.per_iteration_delta.back()));
  }
  return mean;
}

}  // namespace fiqopt
