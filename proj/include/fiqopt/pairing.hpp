#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fiqopt/types.hpp"

namespace fiqopt {

// Mated pairs of one repeat, grouped by anchor: row r owns the contiguous
// range [anchor_offsets[r], anchor_offsets[r+1]). Every sample whose identity
// has at least one other image owns exactly k pairs; samples without a mated
// peer own none and are listed in `skipped`.
struct PairTable {
  std::vector<std::uint32_t> anchor;
  std::vector<std::uint32_t> partner;
  std::vector<double> similarity01;         // in [0,1]; filled by compute_pair_similarities
  std::vector<std::size_t> anchor_offsets;  // size n+1
  std::vector<std::uint32_t> skipped;       // rows with no mated peer

  std::size_t pair_count() const { return anchor.size(); }
};

// Draws k partners per eligible sample, uniformly with replacement from the
// sample's same-identity peers (itself excluded). Rows are visited in
// ascending order and consume a single splitmix64 stream seeded with
// repeat_seed, so the table is a pure function of (dataset, k, repeat_seed).
PairTable sample_mated_pairs(const Dataset& dataset, std::size_t k, std::uint64_t repeat_seed);

// Fills similarity01 with (cos + 1)/2 for every pair. Idempotent. Parallel
// workers write disjoint ranges, so any thread count produces identical
// bytes. Throws std::invalid_argument on an out-of-range row or a zero-norm
// embedding row.
void compute_pair_similarities(PairTable& pairs, const EmbeddingMatrix& embeddings,
                               unsigned threads = 1);

// Audit dump: CSV "anchor_id,partner_id,similarity01", one row per pair in
// table order, similarities printed with 9 significant digits.
void write_pair_table_csv(const std::filesystem::path& path, const PairTable& pairs,
                          const Dataset& dataset);

}  // namespace fiqopt
