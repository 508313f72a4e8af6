#include "fiqopt/pairing.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "fiqopt/parallel.hpp"
#include "fiqopt/rng.hpp"

namespace fiqopt {

PairTable sample_mated_pairs(const Dataset& dataset, std::size_t k, std::uint64_t repeat_seed) {
  if (k < 1) throw std::invalid_argument("pairing: k must be >= 1");
  const std::size_t n = dataset.size();
  if (n > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("pairing: dataset too large for 32-bit row indices");

  PairTable t;
  t.anchor_offsets.assign(n + 1, 0);

  std::size_t eligible = 0;
  for (const auto& [identity, members] : dataset.identity_index)
    if (members.size() >= 2) eligible += members.size();
  t.anchor.reserve(eligible * k);
  t.partner.reserve(eligible * k);

  SplitMix64 rng(repeat_seed);
  for (std::size_t r = 0; r < n; ++r) {
    const SampleRecord& s = dataset.samples[dataset.sample_of_row[r]];
    const std::vector<std::size_t>& members = dataset.identity_index.at(s.identity);
    if (members.size() < 2) {
      t.skipped.push_back(static_cast<std::uint32_t>(r));
      t.anchor_offsets[r + 1] = t.anchor.size();
      continue;
    }
    std::size_t pos = 0;
    while (members[pos] != r) ++pos;
    const std::uint64_t peer_count = members.size() - 1;
    for (std::size_t j = 0; j < k; ++j) {
      std::uint64_t idx = rng.bounded(peer_count);
      if (idx >= pos) ++idx;  // skip the anchor itself
      t.anchor.push_back(static_cast<std::uint32_t>(r));
      t.partner.push_back(static_cast<std::uint32_t>(members[idx]));
    }
    t.anchor_offsets[r + 1] = t.anchor.size();
  }
  t.similarity01.assign(t.anchor.size(), 0.0);
  return t;
}

void compute_pair_similarities(PairTable& pairs, const EmbeddingMatrix& embeddings,
                               unsigned threads) {
  if (pairs.pair_count() == 0) return;

  // Norms are shared by every pair touching a row, so hoist them out.
  std::vector<double> inv_norm(embeddings.n);
  for (std::size_t r = 0; r < embeddings.n; ++r) {
    const double* p = embeddings.data.data() + r * embeddings.d;
    double norm2 = 0.0;
    for (std::size_t j = 0; j < embeddings.d; ++j) norm2 += p[j] * p[j];
    if (norm2 == 0.0)
      throw std::invalid_argument("pairing: embedding row " + std::to_string(r) +
                                  " has zero norm");
    inv_norm[r] = 1.0 / std::sqrt(norm2);
  }

  const std::size_t d = embeddings.d;
  const double* base = embeddings.data.data();
  parallel_for(pairs.pair_count(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const std::size_t a = pairs.anchor[p];
      const std::size_t b = pairs.partner[p];
      if (a >= embeddings.n || b >= embeddings.n)
        throw std::invalid_argument("pairing: pair " + std::to_string(p) +
                                    " references a row outside the embedding matrix");
      const double* ea = base + a * d;
      const double* eb = base + b * d;
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += ea[j] * eb[j];
      double s = dot * inv_norm[a] * inv_norm[b];
      if (s > 1.0) s = 1.0;
      if (s < -1.0) s = -1.0;
      pairs.similarity01[p] = (s + 1.0) * 0.5;
    }
  });
}

void write_pair_table_csv(const std::filesystem::path& path, const PairTable& pairs,
                          const Dataset& dataset) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << "anchor_id,partner_id,similarity01\n";
  char buf[40];
  for (std::size_t p = 0; p < pairs.pair_count(); ++p) {
    const SampleRecord& a = dataset.samples[dataset.sample_of_row[pairs.anchor[p]]];
    const SampleRecord& b = dataset.samples[dataset.sample_of_row[pairs.partner[p]]];
    std::snprintf(buf, sizeof(buf), "%.9g", pairs.similarity01[p]);
    out << a.sample_id << ',' << b.sample_id << ',' << buf << '\n';
  }
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

}  // namespace fiqopt
