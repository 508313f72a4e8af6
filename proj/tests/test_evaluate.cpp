#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "fiqopt/dataset.hpp"
#include "fiqopt/evaluate.hpp"
#include "fiqopt/rng.hpp"
#include "fiqopt/synth.hpp"
#include "test_util.hpp"

using namespace fiqopt;
using testutil::TempDir;

namespace {

ErcCurve make_curve(std::vector<double> reject, std::vector<double> fnmr) {
  ErcCurve c;
  c.reject_fractions = std::move(reject);
  c.fnmr = std::move(fnmr);
  c.threshold = 0.5;
  c.fmr_target = 1e-3;
  return c;
}

// Ten identities, two images each, on the unit circle; the angle gap within
// identity i grows with i so genuine scores fall off smoothly.
Dataset circle_dataset() {
  std::vector<SampleRecord> samples;
  EmbeddingMatrix m;
  m.n = 20;
  m.d = 2;
  m.data.resize(40);
  const double deg = 3.14159265358979323846 / 180.0;
  for (std::size_t i = 0; i < 10; ++i) {
    const double base = 36.0 * static_cast<double>(i);
    const double gap = 5.0 * static_cast<double>(i);
    const double a0 = (base - gap / 2) * deg;
    const double a1 = (base + gap / 2) * deg;
    m.data[(2 * i) * 2] = std::cos(a0);
    m.data[(2 * i) * 2 + 1] = std::sin(a0);
    m.data[(2 * i + 1) * 2] = std::cos(a1);
    m.data[(2 * i + 1) * 2 + 1] = std::sin(a1);
    const std::string id = "p" + std::to_string(i);
    samples.push_back({id + "_0", id, 0.5, 2 * i});
    samples.push_back({id + "_1", id, 0.5, 2 * i + 1});
  }
  return make_dataset(std::move(samples), std::move(m));
}

VerificationProtocol circle_protocol() {
  VerificationProtocol p;
  for (std::size_t i = 0; i < 10; ++i) p.genuine_pairs.emplace_back(2 * i, 2 * i + 1);
  for (std::size_t i = 0; i < 10; ++i)
    p.impostor_pairs.emplace_back(2 * i, 2 * ((i + 1) % 10));
  return p;
}

}  // namespace

TEST_CASE("fmr_threshold picks the smallest admissible observed score") {
  const std::vector<double> scores{0.1, 0.2, 0.3, 0.4};
  CHECK(fmr_threshold(scores, 0.25) == 0.4);
  CHECK(fmr_threshold(scores, 0.5) == 0.3);
  CHECK(fmr_threshold(scores, 0.75) == 0.2);

  SUBCASE("identical scores force a step past the maximum") {
    const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
    const double tau = fmr_threshold(flat, 0.25);
    CHECK(tau > 0.5);
    CHECK(tau == std::nextafter(0.5, 1.0));
    std::size_t matched = 0;
    for (const double s : flat)
      if (s >= tau) ++matched;
    CHECK(matched == 0);  // achieved FMR is 0
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(fmr_threshold(std::vector<double>{}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(fmr_threshold(scores, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(fmr_threshold(scores, 1.0), std::invalid_argument);
  }
  SUBCASE("achieved FMR never exceeds the target, and tightly") {
    SplitMix64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t m = 1 + rng.bounded(60);
      std::vector<double> s(m);
      for (double& v : s) v = static_cast<double>(rng.bounded(8)) / 8.0;  // many ties
      const double target = 0.01 + rng.next_unit() * 0.98;
      const double tau = fmr_threshold(s, target);
      std::size_t matched = 0;
      for (const double v : s)
        if (v >= tau) ++matched;
      CHECK(static_cast<double>(matched) <= target * static_cast<double>(m));
      // Smallest: any strictly lower observed score must break the budget.
      double best_lower = -1e300;
      bool found = false;
      for (const double v : s)
        if (v < tau && v > best_lower) {
          best_lower = v;
          found = true;
        }
      if (found) {
        std::size_t would_match = 0;
        for (const double v : s)
          if (v >= best_lower) ++would_match;
        CHECK(static_cast<double>(would_match) > target * static_cast<double>(m));
      }
    }
  }
  SUBCASE("monotone in the target") {
    SplitMix64 rng(18);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> s(1 + rng.bounded(40));
      for (double& v : s) v = rng.next_unit();
      const double t1 = 0.05 + rng.next_unit() * 0.4;
      const double t2 = t1 + rng.next_unit() * 0.5;
      CHECK(fmr_threshold(s, t2) <= fmr_threshold(s, t1));
    }
  }
}

TEST_CASE("fnmr_at_reject") {
  const std::vector<double> scores{0.0, 1.0, 1.0, 1.0};

  SUBCASE("zero rejection keeps every pair") {
    const std::vector<double> q{0.1, 0.2, 0.3, 0.4};
    CHECK(fnmr_at_reject(q, scores, 0.5, 0.0) == doctest::Approx(0.25));
  }
  SUBCASE("rejecting the worst pair removes the sole error") {
    const std::vector<double> q{0.1, 0.2, 0.3, 0.4};
    CHECK(fnmr_at_reject(q, scores, 0.5, 0.25) == 0.0);
  }
  SUBCASE("rejecting a correct pair leaves the error among fewer survivors") {
    const std::vector<double> q{0.4, 0.1, 0.3, 0.2};
    CHECK(fnmr_at_reject(q, scores, 0.5, 0.25) == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("quality ties break by pair index") {
    const std::vector<double> q{0.5, 0.5, 0.5, 0.5};
    // floor(0.5*4) = 2 rejects pairs 0 and 1: the error at index 0 is gone.
    CHECK(fnmr_at_reject(q, scores, 0.5, 0.5) == 0.0);
    const std::vector<double> scores2{1.0, 1.0, 0.0, 1.0};
    CHECK(fnmr_at_reject(q, scores2, 0.5, 0.5) == doctest::Approx(0.5));
  }
  SUBCASE("input validation") {
    const std::vector<double> q{0.1, 0.2, 0.3, 0.4};
    CHECK_THROWS_AS(fnmr_at_reject(q, scores, 0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(fnmr_at_reject(q, scores, 0.5, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(fnmr_at_reject(std::vector<double>{0.1}, scores, 0.5, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(fnmr_at_reject(std::vector<double>{}, std::vector<double>{}, 0.5, 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("erc_curve") {
  const Dataset ds = circle_dataset();
  const VerificationProtocol proto = circle_protocol();
  const std::vector<double> grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};

  SUBCASE("agrees with fnmr_at_reject at every grid point") {
    QualityVector q;
    q.values.resize(20);
    SplitMix64 rng(4);
    for (double& v : q.values) v = static_cast<double>(rng.bounded(5)) / 4.0;  // with ties
    const ErcCurve curve = erc_curve(ds, proto, q, 0.2, grid);

    std::vector<double> gen_scores, pair_q;
    for (const auto& [a, b] : proto.genuine_pairs) {
      gen_scores.push_back(cosine_similarity(ds.embeddings.row(a), ds.embeddings.row(b)));
      pair_q.push_back(pair_quality(q.values[a], q.values[b]));
    }
    std::vector<double> imp_scores;
    for (const auto& [a, b] : proto.impostor_pairs)
      imp_scores.push_back(cosine_similarity(ds.embeddings.row(a), ds.embeddings.row(b)));
    CHECK(curve.threshold == fmr_threshold(imp_scores, 0.2));
    REQUIRE(curve.fnmr.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(curve.fnmr[i] == fnmr_at_reject(pair_q, gen_scores, curve.threshold, grid[i]));
  }

  SUBCASE("qualities aligned with the scores make the curve non-increasing") {
    // Give both images of a pair the pair's own score as quality, so the
    // rejection order matches the error order exactly.
    QualityVector q;
    q.values.resize(20);
    for (std::size_t i = 0; i < 10; ++i) {
      const double s = cosine_similarity(ds.embeddings.row(2 * i), ds.embeddings.row(2 * i + 1));
      q.values[2 * i] = s;
      q.values[2 * i + 1] = s;
    }
    const ErcCurve curve = erc_curve(ds, proto, q, 0.2, grid);
    CHECK(curve.fnmr.front() > 0.0);  // the threshold does create errors
    for (std::size_t i = 1; i < curve.fnmr.size(); ++i)
      CHECK(curve.fnmr[i] <= curve.fnmr[i - 1] + 1e-15);
  }

  SUBCASE("grid validation") {
    QualityVector q;
    q.values.assign(20, 0.5);
    CHECK_THROWS_AS(erc_curve(ds, proto, q, 0.2, std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(erc_curve(ds, proto, q, 0.2, std::vector<double>{0.0, 0.5, 0.4}),
                    std::invalid_argument);
    CHECK_THROWS_AS(erc_curve(ds, proto, q, 0.2, std::vector<double>{0.0, 1.0}),
                    std::invalid_argument);
    VerificationProtocol empty_genuine;
    empty_genuine.impostor_pairs = proto.impostor_pairs;
    CHECK_THROWS_AS(erc_curve(ds, empty_genuine, q, 0.2, grid), std::invalid_argument);
  }
}

TEST_CASE("pauc") {
  SUBCASE("constant curve integrates to the constant") {
    const ErcCurve c = make_curve({0.0, 0.2, 0.4, 0.6, 0.8}, {0.07, 0.07, 0.07, 0.07, 0.07});
    CHECK(pauc(c, 0.8) == doctest::Approx(0.07));
    CHECK(pauc(c, 0.3) == doctest::Approx(0.07));  // interpolated cut
  }
  SUBCASE("linear ramp") {
    const ErcCurve c = make_curve({0.0, 0.4}, {0.2, 0.0});
    CHECK(pauc(c, 0.4) == doctest::Approx(0.1));
    CHECK(pauc(c, 0.2) == doctest::Approx(0.15));  // mean over the clipped span
  }
  SUBCASE("grid refinement barely moves the area") {
    auto f = [](double r) { return 0.2 * (1.0 - r) * (1.0 - r); };
    std::vector<double> coarse_x, coarse_y, fine_x, fine_y;
    for (int i = 0; i * 0.02 <= 0.8 + 1e-12; ++i) {
      coarse_x.push_back(i * 0.02);
      coarse_y.push_back(f(i * 0.02));
    }
    for (int i = 0; i * 0.001 <= 0.8 + 1e-12; ++i) {
      fine_x.push_back(i * 0.001);
      fine_y.push_back(f(i * 0.001));
    }
    const double a = pauc(make_curve(coarse_x, coarse_y), 0.8);
    const double b = pauc(make_curve(fine_x, fine_y), 0.8);
    CHECK(std::fabs(a - b) < 1e-3);
  }
  SUBCASE("span validation") {
    const ErcCurve late = make_curve({0.1, 0.5}, {0.1, 0.1});
    CHECK_THROWS_AS(pauc(late, 0.4), std::invalid_argument);
    const ErcCurve short_curve = make_curve({0.0, 0.5}, {0.1, 0.1});
    CHECK_THROWS_AS(pauc(short_curve, 0.8), std::invalid_argument);
    CHECK_THROWS_AS(pauc(short_curve, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(pauc(short_curve, 1.5), std::invalid_argument);
  }
}

TEST_CASE("erc_curve_json carries points and partial areas") {
  const ErcCurve c = make_curve({0.0, 0.1, 0.2, 0.4, 0.8}, {0.3, 0.25, 0.2, 0.1, 0.05});
  const double cutoffs[] = {0.1, 0.2, 0.4, 0.8};
  const std::string text = erc_curve_json(c, cutoffs);
  const nlohmann::json doc = nlohmann::json::parse(text);
  CHECK(doc["fmr_target"].get<double>() == doctest::Approx(1e-3));
  CHECK(doc["threshold"].get<double>() == doctest::Approx(0.5));
  REQUIRE(doc["points"].size() == 5);
  CHECK(doc["points"][1]["reject"].get<double>() == doctest::Approx(0.1));
  CHECK(doc["points"][1]["fnmr"].get<double>() == doctest::Approx(0.25));
  REQUIRE(doc["pauc"].size() == 4);
  CHECK(doc["pauc"]["0.1"].get<double>() == doctest::Approx(pauc(c, 0.1)));
  CHECK(doc["pauc"]["0.8"].get<double>() == doctest::Approx(pauc(c, 0.8)));
}

TEST_CASE("load_protocol") {
  TempDir tmp;
  const Dataset ds = circle_dataset();

  SUBCASE("valid file") {
    testutil::write_text(tmp.file("p.csv"),
                         "sample_id_a,sample_id_b,label\n"
                         "p0_0,p0_1,genuine\n"
                         "p0_0,p1_0,impostor\n");
    const VerificationProtocol p = load_protocol(tmp.file("p.csv"), ds);
    REQUIRE(p.genuine_pairs.size() == 1);
    REQUIRE(p.impostor_pairs.size() == 1);
    CHECK(p.genuine_pairs[0] == std::pair<std::size_t, std::size_t>{0, 1});
    CHECK(p.impostor_pairs[0] == std::pair<std::size_t, std::size_t>{0, 2});
  }
  SUBCASE("genuine label across identities rejected with the line named") {
    testutil::write_text(tmp.file("p.csv"),
                         "sample_id_a,sample_id_b,label\n"
                         "p0_0,p0_1,genuine\n"
                         "p0_0,p1_0,genuine\n");
    CHECK_THROWS_WITH_AS(load_protocol(tmp.file("p.csv"), ds), doctest::Contains("line 3"),
                         std::runtime_error);
  }
  SUBCASE("impostor label within an identity rejected") {
    testutil::write_text(tmp.file("p.csv"),
                         "sample_id_a,sample_id_b,label\np0_0,p0_1,impostor\n");
    CHECK_THROWS_AS(load_protocol(tmp.file("p.csv"), ds), std::runtime_error);
  }
  SUBCASE("unknown sample") {
    testutil::write_text(tmp.file("p.csv"),
                         "sample_id_a,sample_id_b,label\nnope,p0_1,genuine\n");
    CHECK_THROWS_AS(load_protocol(tmp.file("p.csv"), ds), std::runtime_error);
  }
  SUBCASE("bad label") {
    testutil::write_text(tmp.file("p.csv"),
                         "sample_id_a,sample_id_b,label\np0_0,p0_1,real\n");
    CHECK_THROWS_AS(load_protocol(tmp.file("p.csv"), ds), std::runtime_error);
  }
  SUBCASE("bad header") {
    testutil::write_text(tmp.file("p.csv"), "a,b,label\np0_0,p0_1,genuine\n");
    CHECK_THROWS_AS(load_protocol(tmp.file("p.csv"), ds), std::runtime_error);
  }
}
