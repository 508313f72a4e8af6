#include "fiqopt/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "fiqopt/csv.hpp"
#include "fiqopt/dataset.hpp"
#include "fiqopt/parallel.hpp"

namespace fiqopt {

namespace {

std::vector<double> score_pairs(const Dataset& dataset,
                                const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                unsigned threads) {
  std::vector<double> scores(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      scores[i] = cosine_similarity(dataset.embeddings.row(pairs[i].first),
                                    dataset.embeddings.row(pairs[i].second));
  });
  return scores;
}

// Rejection order shared by fnmr_at_reject and erc_curve: quality ascending,
// ties by ascending pair index.
std::vector<std::size_t> rejection_order(std::span<const double> pair_qualities) {
  std::vector<std::size_t> order(pair_qualities.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pair_qualities[a] != pair_qualities[b]) return pair_qualities[a] < pair_qualities[b];
    return a < b;
  });
  return order;
}

std::size_t rejected_count(double reject_fraction, std::size_t m) {
  return static_cast<std::size_t>(
      std::floor(reject_fraction * static_cast<double>(m)));
}

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

VerificationProtocol load_protocol(const std::filesystem::path& path, const Dataset& dataset) {
  std::unordered_map<std::string, std::size_t> row_of_id;
  row_of_id.reserve(dataset.size());
  for (const SampleRecord& s : dataset.samples) row_of_id.emplace(s.sample_id, s.row);

  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  strip_cr(line);
  if (line != "sample_id_a,sample_id_b,label")
    throw std::runtime_error(path.string() +
                             ": expected header 'sample_id_a,sample_id_b,label', got '" + line +
                             "'");

  VerificationProtocol proto;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = path.string() + ": line " + std::to_string(line_no) + ": ";
    if (fields.size() != 3)
      throw std::runtime_error(where + "expected 3 fields, got " +
                               std::to_string(fields.size()));
    const auto a = row_of_id.find(fields[0]);
    if (a == row_of_id.end())
      throw std::runtime_error(where + "unknown sample_id '" + fields[0] + "'");
    const auto b = row_of_id.find(fields[1]);
    if (b == row_of_id.end())
      throw std::runtime_error(where + "unknown sample_id '" + fields[1] + "'");
    const std::string& id_a = dataset.samples[dataset.sample_of_row[a->second]].identity;
    const std::string& id_b = dataset.samples[dataset.sample_of_row[b->second]].identity;
    if (fields[2] == "genuine") {
      if (id_a != id_b)
        throw std::runtime_error(where + "pair labeled genuine but identities differ ('" +
                                 id_a + "' vs '" + id_b + "')");
      proto.genuine_pairs.emplace_back(a->second, b->second);
    } else if (fields[2] == "impostor") {
      if (id_a == id_b)
        throw std::runtime_error(where + "pair labeled impostor but identities match ('" +
                                 id_a + "')");
      proto.impostor_pairs.emplace_back(a->second, b->second);
    } else {
      throw std::runtime_error(where + "label must be 'genuine' or 'impostor', got '" +
                               fields[2] + "'");
    }
  }
  return proto;
}

double fmr_threshold(std::span<const double> impostor_scores, double fmr_target) {
  if (impostor_scores.empty())
    throw std::invalid_argument("fmr_threshold: no impostor scores");
  if (!(fmr_target > 0.0 && fmr_target < 1.0))
    throw std::invalid_argument("fmr_threshold: fmr_target must be in (0,1)");
  std::vector<double> sorted(impostor_scores.begin(), impostor_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double budget = fmr_target * static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (i > 0 && sorted[i] == sorted[i - 1]) continue;  // same candidate as before
    // Scores are sorted, so everything from i on is >= sorted[i].
    if (static_cast<double>(m - i) <= budget) return sorted[i];
  }
  // Even the largest score is matched too often; step just past it.
  return std::nextafter(sorted.back(), std::numeric_limits<double>::infinity());
}

double fnmr_at_reject(std::span<const double> pair_qualities,
                      std::span<const double> genuine_scores, double threshold,
                      double reject_fraction) {
  if (pair_qualities.size() != genuine_scores.size())
    throw std::invalid_argument("fnmr_at_reject: qualities and scores differ in length");
  if (genuine_scores.empty())
    throw std::invalid_argument("fnmr_at_reject: no genuine pairs");
  if (!(reject_fraction >= 0.0 && reject_fraction < 1.0))
    throw std::invalid_argument("fnmr_at_reject: reject_fraction must be in [0,1)");
  const std::size_t m = genuine_scores.size();
  const std::vector<std::size_t> order = rejection_order(pair_qualities);
  const std::size_t n_reject = rejected_count(reject_fraction, m);
  const std::size_t survivors = m - n_reject;
  if (survivors == 0) return 0.0;
  std::size_t errors = 0;
  for (std::size_t i = n_reject; i < m; ++i)
    if (genuine_scores[order[i]] < threshold) ++errors;
  return static_cast<double>(errors) / static_cast<double>(survivors);
}

ErcCurve erc_curve(const Dataset& dataset, const VerificationProtocol& protocol,
                   const QualityVector& q, double fmr_target, std::span<const double> grid,
                   unsigned threads) {
  if (q.size() != dataset.size())
    throw std::invalid_argument("erc_curve: quality vector does not match the dataset");
  if (grid.empty()) throw std::invalid_argument("erc_curve: empty reject grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] < 1.0))
      throw std::invalid_argument("erc_curve: reject fractions must lie in [0,1)");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw std::invalid_argument("erc_curve: reject grid must be strictly ascending");
  }
  if (protocol.genuine_pairs.empty())
    throw std::invalid_argument("erc_curve: protocol has no genuine pairs");
  if (protocol.impostor_pairs.empty())
    throw std::invalid_argument("erc_curve: protocol has no impostor pairs");

  // Threshold comes from the full impostor set at 0% rejection and then
  // stays fixed across the sweep.
  const std::vector<double> impostor_scores =
      score_pairs(dataset, protocol.impostor_pairs, threads);
  const double threshold = fmr_threshold(impostor_scores, fmr_target);

  const std::vector<double> genuine_scores =
      score_pairs(dataset, protocol.genuine_pairs, threads);
  const std::size_t m = genuine_scores.size();
  std::vector<double> pair_qualities(m);
  for (std::size_t i = 0; i < m; ++i)
    pair_qualities[i] = pair_quality(q.values[protocol.genuine_pairs[i].first],
                                     q.values[protocol.genuine_pairs[i].second]);

  // One sort, then every grid point is a suffix count over the rejection
  // order. Same counts as evaluating fnmr_at_reject per point.
  const std::vector<std::size_t> order = rejection_order(pair_qualities);
  std::vector<std::size_t> suffix_errors(m + 1, 0);
  for (std::size_t i = m; i-- > 0;)
    suffix_errors[i] =
        suffix_errors[i + 1] + (genuine_scores[order[i]] < threshold ? 1u : 0u);

  ErcCurve curve;
  curve.threshold = threshold;
  curve.fmr_target = fmr_target;
  curve.reject_fractions.assign(grid.begin(), grid.end());
  curve.fnmr.reserve(grid.size());
  for (const double r : grid) {
    const std::size_t n_reject = rejected_count(r, m);
    const std::size_t survivors = m - n_reject;
    curve.fnmr.push_back(survivors == 0 ? 0.0
                                        : static_cast<double>(suffix_errors[n_reject]) /
                                              static_cast<double>(survivors));
  }
  return curve;
}

double pauc(const ErcCurve& curve, double max_reject) {
  if (!(max_reject > 0.0 && max_reject <= 1.0))
    throw std::invalid_argument("pauc: max_reject must be in (0,1]");
  if (curve.reject_fractions.size() != curve.fnmr.size() || curve.reject_fractions.empty())
    throw std::invalid_argument("pauc: malformed curve");
  if (curve.reject_fractions.front() > 0.0 || curve.reject_fractions.back() < max_reject)
    throw std::invalid_argument("pauc: curve does not span [0, max_reject]");

  double area = 0.0;
  for (std::size_t i = 1; i < curve.reject_fractions.size(); ++i) {
    const double x0 = curve.reject_fractions[i - 1];
    if (x0 >= max_reject) break;
    double x1 = curve.reject_fractions[i];
    if (!(x1 > x0)) throw std::invalid_argument("pauc: curve is not strictly ascending");
    const double y0 = curve.fnmr[i - 1];
    double y1 = curve.fnmr[i];
    if (x1 > max_reject) {
      y1 = y0 + (y1 - y0) * (max_reject - x0) / (x1 - x0);
      x1 = max_reject;
    }
    area += 0.5 * (y0 + y1) * (x1 - x0);
  }
  return area / max_reject;
}

std::string erc_curve_json(const ErcCurve& curve, std::span<const double> pauc_cutoffs) {
  nlohmann::json doc;
  doc["fmr_target"] = curve.fmr_target;
  doc["threshold"] = curve.threshold;
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t i = 0; i < curve.reject_fractions.size(); ++i)
    points.push_back({{"reject", curve.reject_fractions[i]}, {"fnmr", curve.fnmr[i]}});
  doc["points"] = std::move(points);
  nlohmann::json areas = nlohmann::json::object();
  for (const double cutoff : pauc_cutoffs) areas[format_g(cutoff)] = pauc(curve, cutoff);
  doc["pauc"] = std::move(areas);
  return doc.dump(2) + "\n";
}

}  // namespace fiqopt
