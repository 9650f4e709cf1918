#include <doctest.h>

#include <algorithm>
#include <thread>
#include <vector>

#include "ranknn/ranknn.hpp"

using namespace ranknn;

TEST_CASE("torus metric wraps around") {
  const HiddenSpace s =
      HiddenSpace::from_points(SpaceKind::torus, 2, 1, {0.0, 0.9});
  CHECK(s.distance(0, 1) == doctest::Approx(0.1));
  CHECK(s.distance(1, 0) == doctest::Approx(0.1));
  CHECK(s.distance(0, 0) == 0.0);
}

TEST_CASE("torus datasets are deterministic in the seed") {
  const HiddenSpace a = make_torus_dataset(16, 3, 7);
  const HiddenSpace b = make_torus_dataset(16, 3, 7);
  const HiddenSpace c = make_torus_dataset(16, 3, 8);
  CHECK(a.coords() == b.coords());
  CHECK(a.coords() != c.coords());
  for (double v : a.coords()) {
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
  CHECK_THROWS_AS(make_torus_dataset(0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_torus_dataset(1, 0, 1), std::invalid_argument);
}

TEST_CASE("oracle picks the closer contestant and charges one question") {
  const HiddenSpace s =
      HiddenSpace::from_points(SpaceKind::torus, 3, 1, {0.9, 0.05, 0.7});
  OracleSession session(s);
  // d(1, 0) = min(0.85, 0.15) = 0.15; d(2, 0) = 0.2.
  CHECK(session.oracle_query(0, 1, 2) == 1);
  CHECK(session.oracle_query(0, 2, 1) == 1);
  CHECK(session.ledger().total() == 2);
}

TEST_CASE("oracle returns u when both contestants coincide") {
  const HiddenSpace s = make_line_space({0.0, 1.0, 3.0});
  OracleSession session(s);
  CHECK(session.oracle_query(0, 2, 2) == 2);
  CHECK(session.ledger().total() == 1);
}

TEST_CASE("ties break toward the lower id") {
  const HiddenSpace s = make_line_space({0.0, 1.0, 2.0});
  OracleSession session(s);
  CHECK(session.oracle_query(1, 0, 2) == 0);
  CHECK(session.oracle_query(1, 2, 0) == 0);
}

TEST_CASE("the external query loses ties against database objects") {
  const HiddenSpace s = make_line_space({0.0, 1.0});
  OracleSession session(s);
  session.register_query({1.0});  // exactly on object 1
  // From object 0: d(1, 0) = 1 = d(q, 0); the database object wins.
  CHECK(session.oracle_query(0, 1, kQueryPoint) == 1);
  CHECK(session.oracle_query(0, kQueryPoint, 1) == 1);
  // A strictly closer query wins.
  session.register_query({0.25});
  CHECK(session.oracle_query(0, 1, kQueryPoint) == kQueryPoint);
}

TEST_CASE("query registration is validated") {
  const HiddenSpace s = make_torus_dataset(4, 2, 1);
  OracleSession session(s);
  CHECK_THROWS_AS(session.oracle_query(0, 1, kQueryPoint), StateError);
  CHECK_THROWS_AS(session.register_query({0.1}), std::invalid_argument);
  session.register_query({0.1, 0.2});
  CHECK(session.has_query());
  session.clear_query();
  CHECK_THROWS_AS(session.oracle_query(0, 1, kQueryPoint), StateError);

  const StarInstance star = make_star_graph(2, 1, 3);
  OracleSession msession(star.space);
  CHECK_THROWS_AS(msession.register_query({0.5}), StateError);
  msession.register_query_distances(star.query_distances);
  CHECK(msession.has_query());
}

TEST_CASE("concealed sessions refuse direct distance access") {
  const HiddenSpace s = make_torus_dataset(4, 1, 2);
  OracleSession hidden(s);
  CHECK_THROWS_AS(hidden.space(), StateError);
  OracleSession open(s, /*conceal=*/false);
  CHECK(open.space().size() == 4);
}

TEST_CASE("ledger splits by phase and counts exactly") {
  const HiddenSpace s = make_torus_dataset(8, 1, 3);
  OracleSession session(s);
  {
    PhaseScope scope(session, Phase::learn);
    session.oracle_query(0, 1, 2);
    session.oracle_query(0, 2, 3);
  }
  {
    PhaseScope scope(session, Phase::search);
    session.oracle_query(1, 2, 3);
  }
  session.oracle_query(2, 3, 4);
  const LedgerSnapshot snap = session.ledger().snapshot();
  CHECK(snap.learn == 2);
  CHECK(snap.search == 1);
  CHECK(snap.other == 1);
  CHECK(snap.total() == 4);
}

TEST_CASE("ledger stays exact under concurrent questioning") {
  const HiddenSpace s = make_torus_dataset(32, 1, 4);
  OracleSession session(s);
  constexpr int kThreads = 4;
  constexpr int kPerThread = 5000;
  std::vector<std::thread> workers;
  for (int t = 0; t < kThreads; ++t)
    workers.emplace_back([&session, t] {
      for (int i = 0; i < kPerThread; ++i)
        session.oracle_query(static_cast<ObjectId>(t), 1 + (i % 30),
                             1 + ((i + 7) % 30));
    });
  for (auto& w : workers) w.join();
  CHECK(session.ledger().total() ==
        static_cast<std::uint64_t>(kThreads) * kPerThread);
}

TEST_CASE("binary insertion ranking is exact and meets its question bound") {
  const std::uint32_t n = 33;
  const HiddenSpace s = make_torus_dataset(n, 2, 5);
  OracleSession session(s);
  OracleSession open(s, false);

  std::vector<ObjectId> rest;
  for (ObjectId v = 1; v < n; ++v) rest.push_back(v);

  const std::uint64_t before = session.ledger().total();
  const std::vector<ObjectId> order = rank_objects(session, 0, rest);
  const std::uint64_t questions = session.ledger().total() - before;

  // Inserting the i-th of 32 elements costs at most ceil(log2 i).
  CHECK(questions <= insertion_question_bound(32));
  CHECK(insertion_question_bound(32) == 129);

  std::vector<ObjectId> expected = rest;
  std::sort(expected.begin(), expected.end(), [&](ObjectId a, ObjectId b) {
    const double da = open.space().distance(0, a), db = open.space().distance(0, b);
    if (da != db) return da < db;
    return a < b;
  });
  CHECK(order == expected);
}

TEST_CASE("ranking tiny sets asks no questions") {
  const HiddenSpace s = make_torus_dataset(4, 1, 6);
  OracleSession session(s);
  CHECK(rank_objects(session, 0, {}).empty());
  CHECK(rank_objects(session, 0, {2}) == std::vector<ObjectId>{2});
  CHECK(session.ledger().total() == 0);
}

TEST_CASE("ranking rejects a center inside the set") {
  const HiddenSpace s = make_torus_dataset(4, 1, 6);
  OracleSession session(s);
  CHECK_THROWS_AS(rank_objects(session, 1, {0, 1, 2}), std::invalid_argument);
}

TEST_CASE("the registered query can be the ranking center") {
  const std::uint32_t n = 17;
  const HiddenSpace s = make_torus_dataset(n, 1, 7);
  OracleSession session(s);
  session.register_query({0.37});
  std::vector<ObjectId> all(n);
  for (ObjectId v = 0; v < n; ++v) all[v] = v;
  const std::vector<ObjectId> order = rank_objects(session, kQueryPoint, all);

  OracleSession open(s, false);
  std::vector<double> qrow(n);
  const double q = 0.37;
  for (ObjectId v = 0; v < n; ++v) qrow[v] = open.space().point_distance(&q, v);
  std::vector<ObjectId> expected = all;
  std::sort(expected.begin(), expected.end(), [&](ObjectId a, ObjectId b) {
    if (qrow[a] != qrow[b]) return qrow[a] < qrow[b];
    return a < b;
  });
  CHECK(order == expected);
}

TEST_CASE("truncated ranking matches the full prefix with fewer questions") {
  const std::uint32_t n = 64;
  const HiddenSpace s = make_torus_dataset(n, 2, 8);
  std::vector<ObjectId> rest;
  for (ObjectId v = 1; v < n; ++v) rest.push_back(v);

  for (std::size_t k : {1u, 4u, 16u, 63u}) {
    OracleSession full_session(s), topk_session(s);
    const std::vector<ObjectId> full = rank_objects(full_session, 0, rest);
    const std::vector<ObjectId> top = rank_objects_topk(topk_session, 0, rest, k);
    REQUIRE(top.size() == std::min<std::size_t>(k, rest.size()));
    for (std::size_t i = 0; i < top.size(); ++i) CHECK(top[i] == full[i]);
    CHECK(topk_session.ledger().total() <= full_session.ledger().total());
    CHECK(topk_session.ledger().total() <= insertion_question_bound(rest.size()));
  }
}

TEST_CASE("star instance geometry follows the branch chain construction") {
  const StarInstance star = make_star_graph(4, 4, 11);
  const HiddenSpace& s = star.space;
  REQUIRE(s.size() == 64);
  CHECK(star.epsilon == doctest::Approx(1.0 / 1600.0));

  // Leaf ids: (branch*4 + supernode)*4 + slot; edge weights (slot+1)/16.
  // Same supernode: just the two leaf weights.
  CHECK(s.distance(0, 1) == doctest::Approx(1.0 / 16 + 2.0 / 16));
  CHECK(s.distance(2, 3) == doctest::Approx(3.0 / 16 + 4.0 / 16));
  // Same branch, supernodes 0 and 2: weight 2 chain between them.
  CHECK(s.distance(0, 2 * 4 + 1) == doctest::Approx(1.0 / 16 + 2.0 + 2.0 / 16));
  // Different branches, both depth-1 supernodes: up and down the center.
  CHECK(s.distance(0, (1 * 4 + 0) * 4 + 0) ==
        doctest::Approx(1.0 / 16 + 1.0 + 1.0 + 1.0 / 16));

  CHECK_THROWS_AS(make_star_graph(1, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_star_graph(4, 0, 1), std::invalid_argument);
}

TEST_CASE("star query hugs its direct neighbors") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const StarInstance star = make_star_graph(3, 5, seed);
    REQUIRE(star.direct_neighbors.size() == 3);
    // Distinct attachment weights within [1, 1+eps].
    for (std::uint32_t b = 0; b < 3; ++b) {
      CHECK(star.query_edge_weights[b] >= 1.0);
      CHECK(star.query_edge_weights[b] <= 1.0 + star.epsilon);
      for (std::uint32_t b2 = b + 1; b2 < 3; ++b2)
        CHECK(star.query_edge_weights[b] != star.query_edge_weights[b2]);
    }
    // Every direct neighbor strictly closer than every non-neighbor.
    double worst_direct = 0.0, best_other = 1e300;
    for (ObjectId o = 0; o < star.space.size(); ++o) {
      const bool direct =
          std::find(star.direct_neighbors.begin(), star.direct_neighbors.end(),
                    o) != star.direct_neighbors.end();
      if (direct)
        worst_direct = std::max(worst_direct, star.query_distances[o]);
      else
        best_other = std::min(best_other, star.query_distances[o]);
    }
    CHECK(worst_direct < best_other);
  }
}
