#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace fiqopt {

// One face image: identity label, raw quality score from the upstream
// scorer, and the row of its embedding in the feature matrix.
struct SampleRecord {
  std::string sample_id;
  std::string identity;
  double base_quality = 0.0;
  std::size_t row = 0;
};

// n x d feature matrix, row-major. Values are widened to double in memory;
// the on-disk format stores 32-bit floats (see dataset.hpp). Every row must
// have strictly positive Euclidean norm, enforced at load.
struct EmbeddingMatrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data.data() + r * d, d);
  }
};

struct Dataset {
  std::vector<SampleRecord> samples;  // manifest order
  EmbeddingMatrix embeddings;
  // identity -> member rows, in manifest order. Sample rows are a permutation
  // of 0..n-1, so the member lists partition the row range.
  std::unordered_map<std::string, std::vector<std::size_t>> identity_index;
  // row -> index into samples.
  std::vector<std::size_t> sample_of_row;

  std::size_t size() const { return samples.size(); }
};

// Per-sample quality scores in [0,1], indexed by embedding row.
struct QualityVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

// What divides the gated similarity sum in the correction factor, and what
// happens when the quality gate leaves no pairs.
enum class ThetaMode {
  kFormulaLiteral,   // divide by the owned pair count; an empty gate set gives 0
  kCountNormalized,  // divide by the gated pair count; empty gives no evidence
  kSkipEmpty,        // divide by the owned pair count; empty gives no evidence
};

bool parse_theta_mode(const std::string& name, ThetaMode& out);
std::string theta_mode_name(ThetaMode mode);

struct OptimConfig {
  std::size_t k = 10;     // mated pairs sampled per sample
  double lambda = 0.05;   // quality-gap gate: partners must beat the anchor by this margin
  double epsilon = 0.01;  // per-iteration step size, in [0,1]
  std::size_t iterations = 10;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  ThetaMode theta_mode = ThetaMode::kFormulaLiteral;
  unsigned threads = 1;  // 0 = all hardware threads; never affects results

  // Throws std::invalid_argument unless epsilon is in [0,1], k >= 1 and
  // repeats >= 1.
  void validate() const;
};

}  // namespace fiqopt
