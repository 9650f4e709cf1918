#pragma once
// Rank-sensitive hashing.  A hash bit compares an object against anchor
// x2 from anchor x1's viewpoint; objects land in the same bucket when all
// bits agree.  Collision probability for a pair relates linearly to the
// L1 distance between their rank vectors, which the parameter derivation
// turns into (p, P, theta, bits, tables) for a target rank r and
// approximation slack epsilon.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <unordered_set>
#include <vector>

#include "common.hpp"
#include "distortion.hpp"
#include "oracle.hpp"
#include "rank_matrix.hpp"

namespace ranknn {

struct HashSpec {
  ObjectId x1 = 0, x2 = 0;  // distinct anchors
};

// One oracle question per evaluation: 0 when u is strictly closer to x1
// than x2 is (ties included per the oracle's rule), 1 otherwise.  The
// anchors themselves hash to x1 -> 0, x2 -> 1.
inline int hash_value(OracleSession& session, const HashSpec& spec, ObjectId u) {
  if (spec.x1 == spec.x2) throw std::invalid_argument("hash anchors must differ");
  const ObjectId winner = session.oracle_query(spec.x1, spec.x2, u);
  if (u == spec.x2) return 1;  // self-comparison would otherwise report 0
  return winner == u ? 0 : 1;
}

// Exact collision probability of the pair (u, v) under a uniformly random
// anchor pair: 1 - |rho_u - rho_v|_1 / n^2.
inline double collision_prob_exact(const RankMatrix& rm, ObjectId u, ObjectId v) {
  const double n = rm.size();
  return 1.0 - static_cast<double>(rho_l1(rm, u, v)) / (n * n);
}

// Same for an external query whose rank column is supplied: q_col[i] must
// hold r_i(q), the query's position in i's ranking of the database plus
// query, not counting i itself.
inline double collision_prob_exact(const RankMatrix& rm, ObjectId u,
                                   const std::vector<std::uint32_t>& q_col) {
  const std::uint32_t n = rm.size();
  if (q_col.size() != n) throw std::invalid_argument("query column size mismatch");
  std::uint64_t acc = 0;
  for (ObjectId i = 0; i < n; ++i) {
    const std::uint32_t a = rm.at(i, u), b = q_col[i];
    acc += a > b ? a - b : b - a;
  }
  const double dn = n;
  return 1.0 - static_cast<double>(acc) / (dn * dn);
}

struct RshParams {
  std::uint32_t n = 0;
  std::uint32_t r = 0;       // target rank
  double epsilon = 0.0;      // approximation slack
  double c = 0.0;            // distortion fit lower slope
  double gamma = 1.0;        // distortion spread
  double p = 0.0;            // collision prob within rank r
  double P = 0.0;            // collision prob beyond rank (1+eps) r
  double theta = 0.0;        // log(1/p) / log(p/P)
  std::uint32_t bits = 0;    // ceil(log n / log(1/P))
  std::uint64_t tables = 0;  // ceil(n^theta)
};

// Derives the table parameterization from a distortion fit.  Regimes where
// the fit cannot separate rank r from rank (1+eps) r (gamma >= 1+eps, or
// degenerate probabilities) are rejected explicitly.
inline RshParams derive_params(std::uint32_t n, std::uint32_t r, double epsilon,
                               const DistortionFit& fit) {
  if (n < 2) throw std::invalid_argument("derive_params needs n >= 2");
  if (r < 1) throw std::invalid_argument("derive_params needs r >= 1");
  if (epsilon <= 0.0) throw std::invalid_argument("derive_params needs eps > 0");
  RshParams prm;
  prm.n = n;
  prm.r = r;
  prm.epsilon = epsilon;
  prm.c = fit.c;
  prm.gamma = fit.gamma;
  const double dn = n;
  prm.p = 1.0 - fit.c * static_cast<double>(r) / (dn * dn);
  prm.P = 1.0 - fit.c * (1.0 + epsilon) * static_cast<double>(r) / (dn * dn * fit.gamma);
  if (!(prm.P > 0.0) || !(prm.p < 1.0) || !(prm.P < prm.p))
    throw ParameterizationError(
        "collision probabilities cannot separate r from (1+eps)r "
        "(needs gamma < 1+eps and 0 < P < p < 1)");
  prm.theta = std::log(1.0 / prm.p) / std::log(prm.p / prm.P);
  prm.bits = static_cast<std::uint32_t>(
      std::ceil(std::log(dn) / std::log(1.0 / prm.P)));
  prm.tables = static_cast<std::uint64_t>(std::ceil(std::pow(dn, prm.theta)));
  return prm;
}

struct RshTable {
  std::vector<HashSpec> specs;                         // one per bit
  std::map<std::string, std::vector<ObjectId>> buckets;  // packed key -> ids
};

struct RshTableSet {
  RshParams params;
  std::uint64_t seed = 0;
  std::vector<RshTable> tables;
  LedgerSnapshot build_ledger;

  void save(std::ostream& os) const;
  static RshTableSet load(std::istream& is);
  void save_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    save(os);
  }
  static RshTableSet load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    return load(is);
  }
};

namespace detail {

inline std::string pack_bits(const std::vector<int>& bits) {
  std::string key((bits.size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) key[i / 8] = static_cast<char>(key[i / 8] | (1 << (7 - i % 8)));
  return key;
}

}  // namespace detail

// Anchor pairs are drawn with replacement across bits and tables (each
// pair internally distinct).  The ledger grows by exactly
// n * tables * bits.
inline RshTableSet build_rsh_tables(OracleSession& session,
                                    const RshParams& params,
                                    std::uint64_t seed) {
  const std::uint32_t n = session.size();
  if (n != params.n) throw std::invalid_argument("params built for different n");

  PhaseScope scope(session, Phase::learn);
  const LedgerSnapshot before = session.ledger().snapshot();

  RshTableSet set;
  set.params = params;
  set.seed = seed;
  set.tables.resize(params.tables);
  Rng rng(seed);
  std::vector<int> bits(params.bits);
  for (std::uint64_t t = 0; t < params.tables; ++t) {
    RshTable& table = set.tables[t];
    table.specs.resize(params.bits);
    for (HashSpec& spec : table.specs) {
      spec.x1 = static_cast<ObjectId>(rng.bounded(n));
      spec.x2 = static_cast<ObjectId>(rng.bounded(n - 1));
      if (spec.x2 >= spec.x1) ++spec.x2;
    }
    for (ObjectId u = 0; u < n; ++u) {
      for (std::uint32_t b = 0; b < params.bits; ++b)
        bits[b] = hash_value(session, table.specs[b], u);
      table.buckets[detail::pack_bits(bits)].push_back(u);
    }
  }

  const LedgerSnapshot after = session.ledger().snapshot();
  set.build_ledger.learn = after.learn - before.learn;
  set.build_ledger.search = after.search - before.search;
  set.build_ledger.other = after.other - before.other;
  return set;
}

struct RshQueryTrace {
  std::vector<std::string> keys;          // per-table query key
  std::vector<std::uint32_t> bucket_sizes;  // per-table matched bucket size
  std::uint64_t scanned = 0;              // distinct candidates compared
  std::uint64_t questions = 0;            // hash + comparison questions
};

struct RshQueryResult {
  std::optional<ObjectId> winner;
  RshQueryTrace trace;
};

// Hashes the query into every table (tables * bits questions), then scans
// the union of matched buckets in encounter order, one question per
// distinct candidate, stopping after scan_cap candidates (default
// 3 * tables).  R is the target rank (1+eps)r the parameterization
// promises; it must match the params.
inline RshQueryResult query_rsh(OracleSession& session, const RshTableSet& set,
                                ObjectId q, std::uint32_t R,
                                std::uint64_t scan_cap = 0) {
  const RshParams& prm = set.params;
  const auto expected = static_cast<std::uint32_t>(
      std::ceil((1.0 + prm.epsilon) * static_cast<double>(prm.r)));
  if (R != expected)
    throw std::invalid_argument("R inconsistent with the parameterization");
  if (scan_cap == 0) scan_cap = 3 * std::max<std::uint64_t>(1, prm.tables);

  PhaseScope scope(session, Phase::search);
  const LedgerSnapshot before = session.ledger().snapshot();

  RshQueryResult res;
  std::vector<int> bits(prm.bits);
  std::vector<const std::vector<ObjectId>*> matched;
  for (const RshTable& table : set.tables) {
    for (std::uint32_t b = 0; b < prm.bits; ++b)
      bits[b] = hash_value(session, table.specs[b], q);
    const std::string key = detail::pack_bits(bits);
    res.trace.keys.push_back(key);
    const auto it = table.buckets.find(key);
    if (it == table.buckets.end()) {
      res.trace.bucket_sizes.push_back(0);
      matched.push_back(nullptr);
    } else {
      res.trace.bucket_sizes.push_back(static_cast<std::uint32_t>(it->second.size()));
      matched.push_back(&it->second);
    }
  }

  std::optional<ObjectId> best;
  std::unordered_set<ObjectId> seen;
  for (const auto* bucket : matched) {
    if (!bucket) continue;
    for (ObjectId cand : *bucket) {
      if (res.trace.scanned >= scan_cap) break;
      if (!seen.insert(cand).second) continue;
      ++res.trace.scanned;
      // One question per scanned candidate, the first included (comparing
      // the candidate against itself is a legal question).
      best = session.oracle_query(q, best ? *best : cand, cand);
    }
    if (res.trace.scanned >= scan_cap) break;
  }

  const LedgerSnapshot after = session.ledger().snapshot();
  res.trace.questions = after.total() - before.total();
  res.winner = best;
  return res;
}

// ---------------------------------------------------------------------------
// Serialization (magic "RKR1")
// ---------------------------------------------------------------------------

inline void RshTableSet::save(std::ostream& os) const {
  BinWriter w(os);
  w.magic("RKR1");
  w.u32(params.n);
  w.u32(params.r);
  w.f64(params.epsilon);
  w.f64(params.c);
  w.f64(params.gamma);
  w.f64(params.p);
  w.f64(params.P);
  w.f64(params.theta);
  w.u32(params.bits);
  w.u64(params.tables);
  w.u64(seed);
  w.u64(build_ledger.learn);
  w.u64(build_ledger.search);
  w.u64(build_ledger.other);
  for (const RshTable& t : tables) {
    for (const HashSpec& s : t.specs) {
      w.u32(s.x1);
      w.u32(s.x2);
    }
    w.u64(t.buckets.size());
    const std::size_t key_len = (params.bits + 7) / 8;
    for (const auto& [key, ids] : t.buckets) {
      if (key.size() != key_len) throw IoError("inconsistent bucket key width");
      w.bytes(key);
      w.u32(static_cast<std::uint32_t>(ids.size()));
      for (ObjectId id : ids) w.u32(id);
    }
  }
}

inline RshTableSet RshTableSet::load(std::istream& is) {
  BinReader r(is);
  r.expect_magic("RKR1");
  RshTableSet set;
  set.params.n = r.u32();
  set.params.r = r.u32();
  set.params.epsilon = r.f64();
  set.params.c = r.f64();
  set.params.gamma = r.f64();
  set.params.p = r.f64();
  set.params.P = r.f64();
  set.params.theta = r.f64();
  set.params.bits = r.u32();
  set.params.tables = r.u64();
  set.seed = r.u64();
  set.build_ledger.learn = r.u64();
  set.build_ledger.search = r.u64();
  set.build_ledger.other = r.u64();
  set.tables.resize(set.params.tables);
  const std::size_t key_len = (set.params.bits + 7) / 8;
  for (RshTable& t : set.tables) {
    t.specs.resize(set.params.bits);
    for (HashSpec& s : t.specs) {
      s.x1 = r.u32();
      s.x2 = r.u32();
    }
    const std::uint64_t buckets = r.u64();
    for (std::uint64_t b = 0; b < buckets; ++b) {
      const std::string key = r.bytes(key_len);
      std::vector<ObjectId> ids(r.u32());
      for (ObjectId& id : ids) id = r.u32();
      t.buckets.emplace(key, std::move(ids));
    }
  }
  return set;
}

}  // namespace ranknn
