#include "fiqopt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "fiqopt/dataset.hpp"
#include "fiqopt/rng.hpp"

namespace fiqopt {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return s;
}

// Draws until the vector is safely normalizable; a degenerate draw has
// probability ~0 but would poison the whole dataset.
void fill_gaussian_nonzero(SplitMix64& rng, std::span<double> out) {
  do {
    fill_gaussian(rng, out);
  } while (norm2(out) < 1e-24);
}

std::vector<double> fractional_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    // 1-based positions i+1 .. j+1 share the average rank.
    const double avg = static_cast<double>(i + j + 2) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_identities < 2) throw std::invalid_argument("synth: need at least 2 identities");
  if (images_per_identity < 2)
    throw std::invalid_argument("synth: need at least 2 images per identity");
  if (dim < 2) throw std::invalid_argument("synth: dim must be >= 2");
  if (!(noise_floor >= 0.0)) throw std::invalid_argument("synth: noise_floor must be >= 0");
  if (!(noise_scale >= 0.0)) throw std::invalid_argument("synth: noise_scale must be >= 0");
  if (!(base_label_noise_sigma >= 0.0))
    throw std::invalid_argument("synth: base_label_noise_sigma must be >= 0");
}

SynthResult generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_identities * spec.images_per_identity;

  SplitMix64 rng(spec.seed);
  EmbeddingMatrix m;
  m.n = n;
  m.d = spec.dim;
  m.data.resize(n * spec.dim);

  std::vector<SampleRecord> samples;
  samples.reserve(n);
  QualityVector true_q;
  true_q.values.resize(n);

  std::vector<double> prototype(spec.dim);
  std::vector<double> z(spec.dim);
  char id_buf[32], sample_buf[48];
  for (std::size_t i = 0; i < spec.n_identities; ++i) {
    fill_gaussian_nonzero(rng, prototype);
    const double pn = std::sqrt(norm2(prototype));
    for (double& x : prototype) x /= pn;
    std::snprintf(id_buf, sizeof(id_buf), "id%05zu", i);

    for (std::size_t j = 0; j < spec.images_per_identity; ++j) {
      const std::size_t row = i * spec.images_per_identity + j;
      const double q = rng.next_unit();
      const double gain = spec.noise_floor + spec.noise_scale * (1.0 - q);

      double* out = m.data.data() + row * spec.dim;
      double en2;
      do {
        fill_gaussian(rng, z);
        en2 = 0.0;
        for (std::size_t t = 0; t < spec.dim; ++t) {
          out[t] = prototype[t] + gain * z[t];
          en2 += out[t] * out[t];
        }
      } while (en2 < 1e-24);
      const double en = std::sqrt(en2);
      for (std::size_t t = 0; t < spec.dim; ++t) out[t] /= en;

      double base = q + spec.base_label_noise_sigma * next_gaussian(rng);
      if (base < 0.0) base = 0.0;
      if (base > 1.0) base = 1.0;

      std::snprintf(sample_buf, sizeof(sample_buf), "%s_%03zu", id_buf, j);
      samples.push_back(SampleRecord{sample_buf, id_buf, base, row});
      true_q.values[row] = q;
    }
  }

  SynthResult res;
  res.dataset = make_dataset(std::move(samples), std::move(m));
  res.true_quality = std::move(true_q);
  return res;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("spearman: inputs differ in length");
  if (a.empty()) throw std::invalid_argument("spearman: empty input");
  const std::vector<double> ra = fractional_ranks(a);
  const std::vector<double> rb = fractional_ranks(b);
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    mean_a += ra[i];
    mean_b += rb[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean_a;
    const double db = rb[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0)
    throw std::domain_error("spearman: zero rank variance, correlation undefined");
  double rho = cov / std::sqrt(var_a * var_b);
  if (rho > 1.0) rho = 1.0;
  if (rho < -1.0) rho = -1.0;
  return rho;
}

}  // namespace fiqopt
