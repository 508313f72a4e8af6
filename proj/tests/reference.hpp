#pragma once

// Deliberately naive scalar re-implementation of the full refinement
// pipeline, used as an independent cross-check. It shares only the public
// data containers with the library: generator, cosine, normalization, gate,
// update and averaging are all re-derived here in straight-line form.

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "fiqopt/types.hpp"

namespace refimpl {

inline std::uint64_t ref_mix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t ref_derive(std::uint64_t master, std::uint64_t index) {
  std::uint64_t state = master + index * 0x9e3779b97f4a7c15ull;
  return ref_mix(state);
}

inline std::uint64_t ref_bounded(std::uint64_t& state, std::uint64_t n) {
  const std::uint64_t reject_below = (0 - n) % n;
  std::uint64_t x = ref_mix(state);
  while (x < reject_below) x = ref_mix(state);
  return x % n;
}

struct RefConfig {
  std::size_t k = 10;
  double lambda = 0.05;
  double epsilon = 0.01;
  std::size_t iterations = 10;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  fiqopt::ThetaMode theta_mode = fiqopt::ThetaMode::kFormulaLiteral;
};

inline std::vector<double> ref_normalize(const std::vector<double>& raw) {
  double mn = raw.front(), mx = raw.front();
  for (const double v : raw) {
    if (v < mn) mn = v;
    if (v > mx) mx = v;
  }
  std::vector<double> out(raw.size());
  if (mn == mx) {
    for (double& v : out) v = 0.5;
    return out;
  }
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - mn) / (mx - mn);
  return out;
}

inline double ref_cosine(const fiqopt::EmbeddingMatrix& m, std::size_t a, std::size_t b) {
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t j = 0; j < m.d; ++j) {
    const double x = m.data[a * m.d + j];
    const double y = m.data[b * m.d + j];
    dot += x * y;
    na2 += x * x;
    nb2 += y * y;
  }
  double s = dot / (std::sqrt(na2) * std::sqrt(nb2));
  if (s > 1.0) s = 1.0;
  if (s < -1.0) s = -1.0;
  return s;
}

// Partner rows per anchor row for one repeat, recomputed from the manifest
// alone: rows visited ascending, one generator stream, k draws with
// replacement from the same-identity peers.
inline std::vector<std::vector<std::size_t>> ref_sample_pairs(const fiqopt::Dataset& ds,
                                                              std::size_t k,
                                                              std::uint64_t repeat_seed) {
  const std::size_t n = ds.samples.size();
  std::unordered_map<std::string, std::vector<std::size_t>> members_of;
  std::vector<const std::string*> identity_of(n, nullptr);
  for (const auto& s : ds.samples) {
    members_of[s.identity].push_back(s.row);
    identity_of[s.row] = &s.identity;
  }
  std::vector<std::vector<std::size_t>> partners(n);
  std::uint64_t state = repeat_seed;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& members = members_of[*identity_of[r]];
    if (members.size() < 2) continue;
    std::size_t pos = 0;
    while (members[pos] != r) ++pos;
    for (std::size_t j = 0; j < k; ++j) {
      std::uint64_t idx = ref_bounded(state, members.size() - 1);
      if (idx >= pos) ++idx;
      partners[r].push_back(members[idx]);
    }
  }
  return partners;
}

inline std::vector<double> ref_optimize(const fiqopt::Dataset& ds,
                                        const std::vector<double>& raw_base_by_row,
                                        const RefConfig& cfg) {
  const std::size_t n = ds.samples.size();
  const std::vector<double> base = ref_normalize(raw_base_by_row);
  std::vector<double> sum(n, 0.0);

  for (std::size_t t = 0; t < cfg.repeats; ++t) {
    const auto partners = ref_sample_pairs(ds, cfg.k, ref_derive(cfg.seed, t));
    std::vector<std::vector<double>> sims(n);
    for (std::size_t r = 0; r < n; ++r)
      for (const std::size_t p : partners[r])
        sims[r].push_back((ref_cosine(ds.embeddings, r, p) + 1.0) * 0.5);

    std::vector<double> q = base;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
      std::vector<double> next(n);
      for (std::size_t r = 0; r < n; ++r) {
        if (partners[r].empty()) {
          next[r] = q[r];  // no mated peer, nothing to learn from
          continue;
        }
        double gated_sum = 0.0;
        std::size_t gated = 0;
        for (std::size_t j = 0; j < partners[r].size(); ++j) {
          if (q[r] <= q[partners[r][j]] - cfg.lambda) {
            gated_sum += sims[r][j];
            ++gated;
          }
        }
        bool has_theta = true;
        double theta = 0.0;
        switch (cfg.theta_mode) {
          case fiqopt::ThetaMode::kFormulaLiteral:
            theta = gated_sum / static_cast<double>(partners[r].size());
            break;
          case fiqopt::ThetaMode::kCountNormalized:
            if (gated == 0) has_theta = false;
            else theta = gated_sum / static_cast<double>(gated);
            break;
          case fiqopt::ThetaMode::kSkipEmpty:
            if (gated == 0) has_theta = false;
            else theta = gated_sum / static_cast<double>(partners[r].size());
            break;
        }
        next[r] = has_theta ? q[r] + cfg.epsilon * (theta - q[r]) : q[r];
      }
      q = next;
    }
    for (std::size_t r = 0; r < n; ++r) sum[r] += q[r];
  }
  for (std::size_t r = 0; r < n; ++r) sum[r] /= static_cast<double>(cfg.repeats);
  return sum;
}

}  // namespace refimpl
