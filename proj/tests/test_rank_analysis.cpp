#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "ranknn/ranknn.hpp"

using namespace ranknn;

namespace {

std::vector<ObjectId> all_ids(std::uint32_t n) {
  std::vector<ObjectId> v(n);
  for (ObjectId i = 0; i < n; ++i) v[i] = i;
  return v;
}

// Exhaustively verifies that D satisfies all four triple inequalities and
// that one ulp below D fails the binding witness.
void check_disorder_minimality(const RankMatrix& rm, const DisorderResult& res) {
  const std::uint32_t n = rm.size();
  const DisorderWitness& w = res.witnesses[res.binding];
  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y)
      for (ObjectId z = 0; z < n; ++z) {
        const double num = rm.at(x, y);
        const double d1 = rm.at(z, x) + rm.at(z, y);
        const double d2 = rm.at(x, z) + rm.at(y, z);
        const double d3 = rm.at(x, z) + rm.at(z, y);
        const double d4 = rm.at(z, x) + rm.at(y, z);
        REQUIRE(num <= res.D * d1);
        REQUIRE(num <= res.D * d2);
        REQUIRE(num <= res.D * d3);
        REQUIRE(num <= res.D * d4);
      }
  const double below = std::nextafter(res.D, 0.0);
  CHECK(static_cast<double>(w.num) > below * static_cast<double>(w.den));
  CHECK(res.D >= 1.0);
}

}  // namespace

TEST_CASE("rank matrix rows are permutations anchored at self") {
  const HiddenSpace s = make_torus_dataset(24, 2, 17);
  OracleSession open(s, false);
  const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
  for (ObjectId i = 0; i < rm.size(); ++i) {
    CHECK(rm.at(i, i) == 0);
    std::vector<bool> seen(rm.size(), false);
    for (ObjectId j = 0; j < rm.size(); ++j) {
      REQUIRE(rm.at(i, j) < rm.size());
      REQUIRE(!seen[rm.at(i, j)]);
      seen[rm.at(i, j)] = true;
    }
  }
}

TEST_CASE("oracle-mode and direct-mode rank matrices agree") {
  const HiddenSpace s = make_torus_dataset(20, 1, 18);
  OracleSession concealed(s);
  OracleSession open(s, false);
  const RankMatrix via_oracle = compute_rank_matrix(concealed, RankMode::oracle);
  const RankMatrix via_distance = compute_rank_matrix(open, RankMode::direct);
  for (ObjectId i = 0; i < 20; ++i)
    for (ObjectId j = 0; j < 20; ++j)
      CHECK(via_oracle.at(i, j) == via_distance.at(i, j));
  // n rows, each within the insertion bound.
  CHECK(concealed.ledger().total() <= 20 * insertion_question_bound(19));
  CHECK_THROWS_AS(compute_rank_matrix(concealed, RankMode::direct), StateError);
}

TEST_CASE("five equispaced line points give the known rank geometry") {
  const HiddenSpace s = make_line_space({0, 1, 2, 3, 4});
  OracleSession open(s, false);
  const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);

  CHECK(rho_l1(rm, 0, 1) == 6);
  CHECK(rho_l1(rm, 1, 0) == 6);
  CHECK(rho_l1(rm, 2, 2) == 0);
  CHECK(rank_diameter(rm, all_ids(5)) == 8);  // 2(n-1), ends mutually farthest

  // Restricted ranks over S = {0, 2, 4}: the middle point ties its
  // neighbors and the lower id wins.
  const std::vector<ObjectId> S = {0, 2, 4};
  CHECK(rm.restricted_rank(0, 0, S) == 0);
  CHECK(rm.restricted_rank(0, 2, S) == 1);
  CHECK(rm.restricted_rank(0, 4, S) == 2);
  CHECK(rm.restricted_rank(2, 0, S) == 1);
  CHECK(rm.restricted_rank(2, 4, S) == 2);
  CHECK(rank_diameter(rm, S) == 4);
  CHECK(rank_diameter(rm, {3}) == 0);
  CHECK_THROWS_AS(rm.restricted_rank(0, 1, S), std::invalid_argument);

  const auto row = rm.restricted_row(2, S);
  CHECK(row == std::vector<std::uint32_t>{1, 0, 2});
}

TEST_CASE("rank balls grow with the radius") {
  const HiddenSpace s = make_line_space({0, 1, 2, 3, 4});
  OracleSession open(s, false);
  const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
  CHECK(rank_ball(rm, 2, 0) == std::vector<ObjectId>{2});
  CHECK(rank_ball(rm, 2, 2) == std::vector<ObjectId>{1, 2, 3});
  CHECK(rank_ball(rm, 2, 4) == all_ids(5));
  CHECK_THROWS_AS(rank_ball(rm, 2, 5), std::invalid_argument);
}

TEST_CASE("full-database diameter is bounded and tight on symmetric lines") {
  for (std::uint32_t n : {3u, 8u, 17u}) {
    std::vector<double> pts(n);
    for (std::uint32_t i = 0; i < n; ++i) pts[i] = i;
    const HiddenSpace s = make_line_space(pts);
    OracleSession open(s, false);
    const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
    CHECK(rank_diameter(rm, all_ids(n)) == 2 * (n - 1));
  }
  const HiddenSpace t = make_torus_dataset(32, 2, 19);
  OracleSession open(t, false);
  const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
  CHECK(rank_diameter(rm, all_ids(32)) <= 2 * 31);
}

TEST_CASE("disorder of sixteen equispaced torus points is exactly two") {
  std::vector<double> coords(16);
  for (int i = 0; i < 16; ++i) coords[i] = i / 16.0;
  const HiddenSpace s = HiddenSpace::from_points(SpaceKind::torus, 16, 1,
                                                 std::move(coords));
  OracleSession open(s, false);
  const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
  const DisorderResult res = disorder_constant(rm);
  CHECK(res.D == 2.0);
  check_disorder_minimality(rm, res);
}

TEST_CASE("star instance disorder is deterministic") {
  const StarInstance star = make_star_graph(4, 4, 123);
  OracleSession open(star.space, false);
  const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
  const DisorderResult res = disorder_constant(rm);
  // The database matrix does not depend on the seed; the maximum ratio is
  // exactly 63/16.
  CHECK(res.witnesses[res.binding].num == 63);
  CHECK(res.witnesses[res.binding].den == 16);
  CHECK(res.D == doctest::Approx(3.9375));
}

TEST_CASE("disorder witnesses are minimal on random spaces") {
  for (std::uint64_t seed : {21ull, 22ull, 23ull}) {
    const HiddenSpace s = make_torus_dataset(24, 2, seed);
    OracleSession open(s, false);
    const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
    const DisorderResult res = disorder_constant(rm);
    check_disorder_minimality(rm, res);
    // Each per-inequality witness ratio is attained by its own triple.
    for (const DisorderWitness& w : res.witnesses) {
      CHECK(w.num == rm.at(w.x, w.y));
      CHECK(static_cast<double>(w.num) <= w.ratio * static_cast<double>(w.den));
    }
  }
}

TEST_CASE("disorder partitions over the third coordinate") {
  const HiddenSpace s = make_torus_dataset(30, 2, 24);
  OracleSession open(s, false);
  const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
  const DisorderResult full = disorder_constant(rm);
  DisorderResult merged = disorder_constant_range(rm, 0, 9);
  merged = merge_disorder(merged, disorder_constant_range(rm, 9, 23));
  merged = merge_disorder(merged, disorder_constant_range(rm, 23, 30));
  CHECK(merged.D == full.D);
  for (int f = 0; f < 4; ++f) {
    CHECK(merged.witnesses[f].num == full.witnesses[f].num);
    CHECK(merged.witnesses[f].den == full.witnesses[f].den);
  }
  CHECK_THROWS_AS(disorder_constant_range(rm, 5, 3), std::invalid_argument);
}

TEST_CASE("disorder rejects trivial spaces") {
  const HiddenSpace s = make_line_space({0.5});
  OracleSession open(s, false);
  const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
  CHECK_THROWS_AS(disorder_constant(rm), std::invalid_argument);
}

TEST_CASE("annulus rank bounds") {
  CHECK(annulus_bounds(10, 2, 2.0) == std::pair<std::uint64_t, std::uint64_t>{3, 24});
  CHECK(annulus_bounds(7, 0, 1.0) == std::pair<std::uint64_t, std::uint64_t>{7, 7});
  CHECK(annulus_bounds(1, 0, 1.0) == std::pair<std::uint64_t, std::uint64_t>{1, 1});
  // The lower bound clamps at rank 1.
  CHECK(annulus_bounds(2, 5, 3.0).first == 1);
  CHECK_THROWS_AS(annulus_bounds(0, 1, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(annulus_bounds(3, 1, 0.5), std::invalid_argument);
}

TEST_CASE("annulus bounds contain every qualifying triple") {
  // For every x, u, y (y != x) with j = r_x(u) and r_u(y) < zeta, the true
  // rank r_x(y) lies in annulus_bounds(j, zeta, D) when D is the exact
  // disorder constant.  The smallest admissible zeta = r_u(y) + 1 is the
  // binding choice: the window only widens as zeta grows.
  const HiddenSpace spaces[] = {make_torus_dataset(64, 1, 26),
                                make_torus_dataset(48, 2, 27)};
  for (const HiddenSpace& s : spaces) {
    OracleSession open(s, false);
    const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
    const double D = disorder_constant(rm).D;
    const std::uint32_t n = s.size();
    std::uint64_t checked = 0;
    for (ObjectId x = 0; x < n; ++x)
      for (ObjectId u = 0; u < n; ++u) {
        if (u == x) continue;
        const std::uint64_t j = rm.at(x, u);
        for (ObjectId y = 0; y < n; ++y) {
          if (y == x) continue;
          const std::uint64_t zeta = static_cast<std::uint64_t>(rm.at(u, y)) + 1;
          const auto [lo, hi] = annulus_bounds(j, zeta, D);
          const std::uint64_t r = rm.at(x, y);
          if (r < lo || r > hi) {
            ++checked;  // only report failures; keep assertion count sane
            CHECK(r >= lo);
            CHECK(r <= hi);
          }
        }
      }
    CHECK(checked == 0);
  }
}

TEST_CASE("distortion fit on the smallest legal space") {
  const HiddenSpace s = make_line_space({0.0, 1.0});
  OracleSession open(s, false);
  const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
  const DistortionFit fit = distortion_fit(rm, 2, 1);
  REQUIRE(fit.buckets.size() == 1);
  CHECK(fit.buckets[0].rank == 1);
  CHECK(fit.buckets[0].mean == doctest::Approx(2.0));
  CHECK(fit.c == doctest::Approx(2.0));
  CHECK(fit.gamma == doctest::Approx(1.0));
  CHECK_THROWS_AS(distortion_fit(rm, 0, 1), std::invalid_argument);

  const HiddenSpace tiny = make_line_space({0.5});
  OracleSession topen(tiny, false);
  const RankMatrix trm = compute_rank_matrix(topen, RankMode::direct);
  CHECK_THROWS_AS(distortion_fit(trm, 1, 1), std::invalid_argument);
}

TEST_CASE("distortion buckets cover every rank once per anchor") {
  const std::uint32_t n = 40;
  const HiddenSpace s = make_torus_dataset(n, 1, 25);
  OracleSession open(s, false);
  const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
  const DistortionFit fit = distortion_fit(rm, 7, 99);
  REQUIRE(fit.buckets.size() == n - 1);
  for (std::uint32_t i = 0; i < fit.buckets.size(); ++i) {
    CHECK(fit.buckets[i].rank == i + 1);
    CHECK(fit.buckets[i].count == 7);
    CHECK(fit.buckets[i].stddev >= 0.0);
  }
  CHECK(fit.pairs.size() == static_cast<std::size_t>(7) * (n - 1));
  // Every sampled pair obeys c*r <= l1 <= gamma*c*r.
  for (const auto& [rank, l1] : fit.pairs) {
    CHECK(static_cast<double>(l1) >= fit.c * rank * (1.0 - 1e-12));
    CHECK(static_cast<double>(l1) <= fit.gamma * fit.c * rank * (1.0 + 1e-12));
  }
}

TEST_CASE("an all-pairs distortion fit dominates the disorder constant") {
  // With every ordered pair sampled, gamma bounds D outright: the triangle
  // chain through rank vectors converts each triple inequality into a
  // ratio of l1 distances that gamma covers.
  for (std::uint64_t seed : {31ull, 32ull}) {
    const HiddenSpace s = make_torus_dataset(28, 2, seed);
    OracleSession open(s, false);
    const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
    const DistortionFit fit = distortion_fit(rm, 28, 0);
    const DisorderResult res = disorder_constant(rm);
    CHECK(res.D <= fit.gamma * (1.0 + 1e-12));
  }
  const StarInstance star = make_star_graph(3, 3, 5);
  OracleSession open(star.space, false);
  const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
  const DistortionFit fit = distortion_fit(rm, star.space.size(), 0);
  CHECK(disorder_constant(rm).D <= fit.gamma * (1.0 + 1e-12));
}

TEST_CASE("query view and column ranks match the extended matrix") {
  const std::uint32_t n = 12;
  const HiddenSpace s = make_torus_dataset(n, 2, 33);
  OracleSession open(s, false);
  const double q[2] = {0.21, 0.68};
  std::vector<double> qrow(n);
  for (ObjectId v = 0; v < n; ++v) qrow[v] = open.space().point_distance(q, v);

  const RankMatrix ext = rank_matrix_with_query(s, qrow);
  REQUIRE(ext.size() == n + 1);
  const auto view = query_view_ranks(qrow);
  const auto col = query_column_ranks(s, qrow);
  for (ObjectId v = 0; v < n; ++v) {
    CHECK(view[v] == ext.at(n, v));
    CHECK(col[v] + 1 == ext.at(v, n));
  }
  CHECK(query_nearest(qrow) ==
        static_cast<ObjectId>(std::min_element(view.begin(), view.end()) -
                              view.begin()));

  // The embedded database block keeps its own ranks except for the shift
  // the query introduces when it slots in between.
  OracleSession dbopen(s, false);
  const RankMatrix rm = compute_rank_matrix(dbopen, RankMode::direct);
  for (ObjectId i = 0; i < n; ++i)
    for (ObjectId j = 0; j < n; ++j) {
      CHECK(ext.at(i, j) >= rm.at(i, j));
      CHECK(ext.at(i, j) <= rm.at(i, j) + 1);
    }
}

TEST_CASE("rank matrix CSV export is well-formed") {
  const HiddenSpace s = make_line_space({0, 1, 2});
  OracleSession open(s, false);
  const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);
  std::ostringstream os;
  rank_matrix_to_csv(rm, os);
  CHECK(os.str() == "0,1,2\n1,0,2\n2,1,0\n");

  std::ostringstream ds;
  const DistortionFit fit = distortion_fit(rm, 3, 1);
  distortion_to_csv(fit, ds);
  CHECK(ds.str().rfind("rank,count,mean_l1,std_l1\n", 0) == 0);
}
