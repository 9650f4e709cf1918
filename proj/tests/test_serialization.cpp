#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "ranknn/ranknn.hpp"

using namespace ranknn;

namespace {

template <class T>
std::string bytes_of(const T& obj) {
  std::ostringstream os(std::ios::binary);
  obj.save(os);
  return os.str();
}

template <class T>
T from_bytes(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  return T::load(is);
}

// Every prefix of a valid stream must be rejected, not misparsed.
template <class T>
void check_truncations(const std::string& bytes) {
  for (std::size_t cut : {std::size_t(0), std::size_t(2), bytes.size() / 2,
                          bytes.size() - 1}) {
    std::istringstream is(bytes.substr(0, cut), std::ios::binary);
    CHECK_THROWS_AS(T::load(is), IoError);
  }
}

}  // namespace

TEST_CASE("geometric spaces round-trip byte for byte") {
  const HiddenSpace s = make_torus_dataset(20, 2, 201);
  const std::string first = bytes_of(s);
  const HiddenSpace back = from_bytes<HiddenSpace>(first);
  CHECK(bytes_of(back) == first);

  CHECK(back.kind() == SpaceKind::torus);
  CHECK(back.size() == 20);
  CHECK(back.dim() == 2);
  CHECK(back.coords() == s.coords());
  for (ObjectId u = 0; u < 20; ++u)
    for (ObjectId v = 0; v < 20; ++v)
      CHECK(back.distance(u, v) == s.distance(u, v));
}

TEST_CASE("matrix spaces round-trip byte for byte") {
  const StarInstance star = make_star_graph(3, 2, 7);
  const std::string first = bytes_of(star.space);
  const HiddenSpace back = from_bytes<HiddenSpace>(first);
  CHECK(bytes_of(back) == first);
  CHECK(back.kind() == SpaceKind::star_graph);
  CHECK(back.size() == star.space.size());
  for (ObjectId u = 0; u < back.size(); ++u)
    for (ObjectId v = 0; v < back.size(); ++v)
      CHECK(back.distance(u, v) == star.space.distance(u, v));
  // Matrix kinds have no point geometry to query.
  const double p = 0.0;
  CHECK_THROWS_AS(back.point_distance(&p, 0), StateError);
}

TEST_CASE("space files survive a disk round trip") {
  const HiddenSpace s = make_torus_dataset(8, 1, 202);
  const std::string path = "/tmp/ranknn_test_space.bin";
  s.save_file(path);
  const HiddenSpace back = HiddenSpace::load_file(path);
  CHECK(bytes_of(back) == bytes_of(s));
  std::remove(path.c_str());
  CHECK_THROWS_AS(HiddenSpace::load_file(path), IoError);
}

TEST_CASE("explicit matrices parse from CSV") {
  std::istringstream csv(
      "0,1,2\n"
      "1,0,1.5\n"
      "2,1.5,0\n");
  const HiddenSpace s = explicit_space_from_csv(csv);
  CHECK(s.kind() == SpaceKind::explicit_matrix);
  CHECK(s.size() == 3);
  CHECK(s.distance(0, 2) == 2.0);
  CHECK(s.distance(2, 1) == 1.5);

  // The parsed space serializes like any other.
  const std::string first = bytes_of(s);
  CHECK(bytes_of(from_bytes<HiddenSpace>(first)) == first);

  std::istringstream ragged("0,1\n1,0,2\n");
  CHECK_THROWS_AS(explicit_space_from_csv(ragged), IoError);
  std::istringstream rect("0,1,2\n1,0,1\n");
  CHECK_THROWS_AS(explicit_space_from_csv(rect), IoError);
  std::istringstream askew(
      "0,1,2\n"
      "1,0,1.5\n"
      "2,9,0\n");
  CHECK_THROWS_AS(explicit_space_from_csv(askew), std::invalid_argument);
}

TEST_CASE("space loading rejects tampered streams") {
  const HiddenSpace s = make_torus_dataset(6, 1, 203);
  std::string bytes = bytes_of(s);

  std::string bad = bytes;
  bad[0] = 'X';
  std::istringstream is(bad, std::ios::binary);
  CHECK_THROWS_AS(HiddenSpace::load(is), IoError);

  check_truncations<HiddenSpace>(bytes);

  // An unknown space kind byte is data corruption, not a crash.
  std::string odd = bytes;
  odd[4] = 7;
  std::istringstream is2(odd, std::ios::binary);
  CHECK_THROWS_AS(HiddenSpace::load(is2), IoError);
}

TEST_CASE("hierarchical indexes round-trip and search identically") {
  const HiddenSpace s = make_torus_dataset(40, 1, 204);
  OracleSession session(s);
  BuildConfig cfg;
  cfg.D = 4.0;
  cfg.a = 1.0;
  cfg.seed = 11;
  const HierIndex idx = build_hier_index_retrying(session, cfg);

  const std::string first = bytes_of(idx);
  const HierIndex back = from_bytes<HierIndex>(first);
  CHECK(bytes_of(back) == first);

  CHECK(back.n == idx.n);
  CHECK(back.L == idx.L);
  CHECK(back.kappa == idx.kappa);
  CHECK(back.cfg.D == idx.cfg.D);
  CHECK(back.cfg.a == idx.cfg.a);
  CHECK(back.cfg.seed == idx.cfg.seed);
  CHECK(back.build_ledger.learn == idx.build_ledger.learn);
  CHECK(back.samples == idx.samples);
  CHECK(back.phi == idx.phi);
  CHECK(back.prefix == idx.prefix);

  // A loaded index drives the search exactly like the original.
  session.register_query({0.37});
  const ObjectId a = search_hier_rnn(session, idx, kQueryPoint, idx.L);
  const std::uint64_t qa = session.ledger().snapshot().search;
  const ObjectId b = search_hier_rnn(session, back, kQueryPoint, back.L);
  const std::uint64_t qb = session.ledger().snapshot().search;
  CHECK(a == b);
  CHECK(qb - qa == qa);  // identical question trajectory, run twice

  check_truncations<HierIndex>(first);
  std::string bad = first;
  bad[1] = '?';
  std::istringstream is(bad, std::ios::binary);
  CHECK_THROWS_AS(HierIndex::load(is), IoError);
}

TEST_CASE("annulus indexes round-trip and search identically") {
  const HiddenSpace s = make_torus_dataset(32, 2, 205);
  OracleSession session(s);
  const AnnulusIndex idx = learn_annulus(session, 6, 13);

  const std::string first = bytes_of(idx);
  const AnnulusIndex back = from_bytes<AnnulusIndex>(first);
  CHECK(bytes_of(back) == first);
  CHECK(back.n == idx.n);
  CHECK(back.m == idx.m);
  CHECK(back.seed == idx.seed);
  CHECK(back.samples == idx.samples);
  CHECK(back.rankings == idx.rankings);
  CHECK(back.learn_ledger.learn == idx.learn_ledger.learn);

  session.register_query({0.21, 0.84});
  const AnnulusResult ra = search_annulus(session, idx, kQueryPoint, 4, 3.0, 99);
  const AnnulusResult rb = search_annulus(session, back, kQueryPoint, 4, 3.0, 99);
  CHECK(ra.winner == rb.winner);
  CHECK(ra.trace.questions == rb.trace.questions);
  CHECK(ra.trace.draws == rb.trace.draws);

  check_truncations<AnnulusIndex>(first);
}

TEST_CASE("hash table sets round-trip and query identically") {
  const HiddenSpace s = make_torus_dataset(50, 1, 206);
  RshParams prm;
  prm.n = 50;
  prm.r = 6;
  prm.epsilon = 1.0;
  prm.p = 0.9;
  prm.P = 0.6;
  prm.theta = 1.1;
  prm.bits = 5;
  prm.tables = 4;
  OracleSession session(s);
  const RshTableSet set = build_rsh_tables(session, prm, 77);

  const std::string first = bytes_of(set);
  const RshTableSet back = from_bytes<RshTableSet>(first);
  CHECK(bytes_of(back) == first);

  CHECK(back.params.n == prm.n);
  CHECK(back.params.r == prm.r);
  CHECK(back.params.epsilon == prm.epsilon);
  CHECK(back.params.p == prm.p);
  CHECK(back.params.P == prm.P);
  CHECK(back.params.theta == prm.theta);
  CHECK(back.params.bits == prm.bits);
  CHECK(back.params.tables == prm.tables);
  CHECK(back.seed == set.seed);
  CHECK(back.build_ledger.learn == set.build_ledger.learn);
  REQUIRE(back.tables.size() == set.tables.size());
  for (std::size_t t = 0; t < set.tables.size(); ++t) {
    for (std::size_t i = 0; i < set.tables[t].specs.size(); ++i) {
      CHECK(back.tables[t].specs[i].x1 == set.tables[t].specs[i].x1);
      CHECK(back.tables[t].specs[i].x2 == set.tables[t].specs[i].x2);
    }
    CHECK(back.tables[t].buckets == set.tables[t].buckets);
  }

  session.register_query({0.66});
  const RshQueryResult qa = query_rsh(session, set, kQueryPoint, 12);
  const RshQueryResult qb = query_rsh(session, back, kQueryPoint, 12);
  CHECK(qa.winner == qb.winner);
  CHECK(qa.trace.keys == qb.trace.keys);
  CHECK(qa.trace.scanned == qb.trace.scanned);
  CHECK(qa.trace.questions == qb.trace.questions);

  check_truncations<RshTableSet>(first);
  std::string bad = first;
  bad[3] = '9';
  std::istringstream is(bad, std::ios::binary);
  CHECK_THROWS_AS(RshTableSet::load(is), IoError);
}

TEST_CASE("analysis tables export as CSV") {
  const HiddenSpace s = make_torus_dataset(12, 1, 207);
  OracleSession open(s, false);
  const RankMatrix rm = compute_rank_matrix(open, RankMode::direct);

  std::ostringstream ranks;
  rank_matrix_to_csv(rm, ranks);
  std::istringstream lines(ranks.str());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 11);
    ++rows;
  }
  CHECK(rows == 12);

  const DistortionFit fit = distortion_fit(rm, 4, 1);
  std::ostringstream dist;
  distortion_to_csv(fit, dist);
  std::istringstream dlines(dist.str());
  std::getline(dlines, line);
  CHECK(line == "rank,count,mean_l1,std_l1");
  rows = 0;
  while (std::getline(dlines, line)) ++rows;
  CHECK(rows == fit.buckets.size());
}
