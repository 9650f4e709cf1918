#pragma once
// Annulus sampling search: learn full rankings for m reference samples;
// to answer a query, find the best reference x by linear scan, binary
// search the query's rank j' within x's stored ranking, then draw
// candidates uniformly (without replacement) from the rank annulus around
// j' that the disorder constant permits the true neighbor to occupy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

#include "common.hpp"
#include "oracle.hpp"

namespace ranknn {

struct AnnulusIndex {
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  std::uint64_t seed = 0;
  std::vector<ObjectId> samples;                 // m reference ids, draw order
  std::vector<std::vector<ObjectId>> rankings;   // per sample: n-1 ids by rank
  LedgerSnapshot learn_ledger;

  void save(std::ostream& os) const {
    BinWriter w(os);
    w.magic("RKA1");
    w.u32(n);
    w.u32(m);
    w.u64(seed);
    w.u64(learn_ledger.learn);
    w.u64(learn_ledger.search);
    w.u64(learn_ledger.other);
    for (ObjectId s : samples) w.u32(s);
    for (const auto& r : rankings)
      for (ObjectId v : r) w.u32(v);
  }
  static AnnulusIndex load(std::istream& is) {
    BinReader r(is);
    r.expect_magic("RKA1");
    AnnulusIndex idx;
    idx.n = r.u32();
    idx.m = r.u32();
    idx.seed = r.u64();
    idx.learn_ledger.learn = r.u64();
    idx.learn_ledger.search = r.u64();
    idx.learn_ledger.other = r.u64();
    idx.samples.resize(idx.m);
    for (ObjectId& s : idx.samples) s = r.u32();
    idx.rankings.assign(idx.m, std::vector<ObjectId>(idx.n - 1));
    for (auto& row : idx.rankings)
      for (ObjectId& v : row) v = r.u32();
    return idx;
  }
  void save_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    save(os);
  }
  static AnnulusIndex load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    return load(is);
  }
};

// Draws m reference objects without replacement and ranks the full
// database from each: the ledger grows by exactly
// m * sum_{i=2}^{n-1} ceil(log2 i).
inline AnnulusIndex learn_annulus(OracleSession& session, std::uint32_t m,
                                  std::uint64_t seed) {
  const std::uint32_t n = session.size();
  if (m < 1 || m > n) throw std::invalid_argument("need 1 <= m <= n");

  PhaseScope scope(session, Phase::learn);
  const LedgerSnapshot before = session.ledger().snapshot();

  AnnulusIndex idx;
  idx.n = n;
  idx.m = m;
  idx.seed = seed;
  Rng rng(seed);
  idx.samples = sample_without_replacement(n, m, rng);
  idx.rankings.reserve(m);
  std::vector<ObjectId> rest;
  for (ObjectId s : idx.samples) {
    rest.clear();
    for (ObjectId v = 0; v < n; ++v)
      if (v != s) rest.push_back(v);
    idx.rankings.push_back(rank_objects(session, s, rest));
  }

  const LedgerSnapshot after = session.ledger().snapshot();
  idx.learn_ledger.learn = after.learn - before.learn;
  idx.learn_ledger.search = after.search - before.search;
  idx.learn_ledger.other = after.other - before.other;
  return idx;
}

struct AnnulusTrace {
  ObjectId x = 0;              // winning reference sample
  std::uint64_t j_prime = 0;   // query rank within x's ranking (1-based)
  std::uint64_t lo = 0;        // annulus rank bounds actually used
  std::uint64_t hi = 0;
  std::vector<ObjectId> draws; // candidates drawn, in draw order
  std::uint64_t questions = 0; // total oracle questions for this search
  bool empty_annulus = false;  // fell back to returning x
  bool exhausted = false;      // annulus ran out before the budget
};

struct AnnulusResult {
  ObjectId winner = 0;
  AnnulusTrace trace;
};

// q may be the registered query point or a database id.  R is the target
// rank slack, D the disorder estimate; the draw budget is
// ceil(multiplier * ((D+1) + D^2 * j' / R)).
inline AnnulusResult search_annulus(OracleSession& session,
                                    const AnnulusIndex& idx, ObjectId q,
                                    std::uint64_t R, double D,
                                    std::uint64_t seed,
                                    double multiplier = 4.0) {
  if (R < 1) throw std::invalid_argument("annulus search needs R >= 1");
  if (D < 1.0) throw std::invalid_argument("annulus search needs D >= 1");
  if (multiplier <= 0.0) throw std::invalid_argument("budget multiplier must be positive");

  PhaseScope scope(session, Phase::search);
  const LedgerSnapshot before = session.ledger().snapshot();
  AnnulusResult res;

  // (1) closest reference sample by linear scan: m-1 questions.
  ObjectId x = idx.samples[0];
  for (std::uint32_t k = 1; k < idx.m; ++k)
    x = session.oracle_query(q, x, idx.samples[k]);
  res.trace.x = x;

  // (2) the query's rank within x's stored ranking, by binary search
  // against the ranking (at most ceil(log2 n) questions).  j' counts the
  // objects at least as close to x as the query, x included.
  std::size_t xi = 0;
  while (idx.samples[xi] != x) ++xi;
  const std::vector<ObjectId>& ranking = idx.rankings[xi];
  std::size_t lo = 0, hi = ranking.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (session.oracle_query(x, ranking[mid], q) == ranking[mid])
      lo = mid + 1;
    else
      hi = mid;
  }
  const std::uint64_t j_prime = static_cast<std::uint64_t>(lo) + 1;
  res.trace.j_prime = j_prime;

  // (3) uniform draws without replacement from the rank annulus
  // [max(1, ceil(j'/D^2) - R), D^2 j' + D R], best-so-far seeded with x.
  const double lo_raw =
      std::ceil(static_cast<double>(j_prime) / (D * D)) - static_cast<double>(R);
  std::uint64_t lo_rank = lo_raw < 1.0 ? 1 : static_cast<std::uint64_t>(lo_raw);
  std::uint64_t hi_rank = static_cast<std::uint64_t>(
      std::floor(D * D * static_cast<double>(j_prime) + D * static_cast<double>(R)));
  hi_rank = std::min<std::uint64_t>(hi_rank, idx.n - 1);
  res.trace.lo = lo_rank;
  res.trace.hi = hi_rank;

  ObjectId best = x;
  if (lo_rank > hi_rank) {
    // Possible only when there are no candidates at all (n = 1): fall back
    // to the scan winner and flag the trace.
    res.trace.empty_annulus = true;
  } else if (R >= idx.n) {
    // Vacuous target: every object is within rank R, so the scan winner
    // already qualifies and no draws are needed.
  } else {
    const std::uint64_t span = hi_rank - lo_rank + 1;
    const std::uint64_t budget = static_cast<std::uint64_t>(std::ceil(
        multiplier * ((D + 1.0) + D * D * static_cast<double>(j_prime) /
                                      static_cast<double>(R))));
    // Partial Fisher-Yates over the annulus index range.
    std::vector<std::uint32_t> pool(span);
    for (std::uint64_t t = 0; t < span; ++t)
      pool[t] = static_cast<std::uint32_t>(lo_rank - 1 + t);  // 0-based slots
    Rng rng(seed);
    const std::uint64_t draws = std::min<std::uint64_t>(budget, span);
    res.trace.exhausted = draws == span && span < budget;
    for (std::uint64_t t = 0; t < draws; ++t) {
      const std::uint64_t u = t + rng.bounded(span - t);
      std::swap(pool[t], pool[u]);
      const ObjectId cand = ranking[pool[t]];
      res.trace.draws.push_back(cand);
      best = session.oracle_query(q, best, cand);
    }
  }

  const LedgerSnapshot after = session.ledger().snapshot();
  res.trace.questions = after.total() - before.total();
  res.winner = best;
  return res;
}

}  // namespace ranknn
