#pragma once
// Randomized hierarchical search structure.  The build phase samples
// nested levels S_1..S_L (m_i = min(n, ceil(a*(2D)^i*log2 n)), without
// replacement, so the last level covers everything) and keeps, per object
// and level, the kappa = ceil(4aD*log2 n) nearest samples plus the single
// nearest sample phi.  Search descends the levels, keeping only samples
// whose previous-level nearest sample appears in the query's current
// prefix.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <unordered_set>
#include <vector>

#include "common.hpp"
#include "oracle.hpp"
#include "rank_matrix.hpp"

namespace ranknn {

struct BuildConfig {
  double D = 1.0;          // disorder input; larger than the true value is safe
  double a = 2.0;          // sampling constant
  std::uint64_t seed = 0;

  void validate() const {
    if (!(D >= 1.0)) throw std::invalid_argument("build needs D >= 1");
    if (!(a >= 1.0)) throw std::invalid_argument("build needs a >= 1");
  }

  std::uint32_t level_count(std::uint32_t n) const {
    validate();
    if (n < 1) throw std::invalid_argument("build needs n >= 1");
    const double l = std::log2(static_cast<double>(n)) / std::log2(2.0 * D);
    const auto L = static_cast<std::uint32_t>(std::ceil(l));
    return std::max<std::uint32_t>(1, L);
  }

  // m_i for level i in 1..L.
  std::uint32_t level_sample_size(std::uint32_t n, std::uint32_t i) const {
    const double raw =
        a * std::pow(2.0 * D, static_cast<double>(i)) * std::log2(static_cast<double>(n));
    double m = std::ceil(raw);
    if (!(m < static_cast<double>(n))) return n;
    return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(m));
  }

  std::uint32_t kappa(std::uint32_t n) const {
    const double k = 4.0 * a * D * std::log2(static_cast<double>(n));
    return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::ceil(k)));
  }
};

struct HierIndex {
  std::uint32_t n = 0;
  BuildConfig cfg;
  std::uint32_t L = 0;
  std::uint32_t kappa = 0;
  // levels[i] = S_{i+1} in draw order; phi[i][j] = nearest level-(i+1)
  // sample to object j; prefix[i][j] = first kappa of c'_j(i+1).
  std::vector<std::vector<ObjectId>> samples;
  std::vector<std::vector<ObjectId>> phi;
  std::vector<std::vector<std::vector<ObjectId>>> prefix;
  LedgerSnapshot build_ledger;
  std::uint64_t max_candidates = 0;  // transient: largest candidate set ranked

  void save(std::ostream& os) const;
  static HierIndex load(std::istream& is);
  void save_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    save(os);
  }
  static HierIndex load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    return load(is);
  }
};

namespace detail {

// Sorted prefix of cand as seen from center o (o may be a member; it then
// leads the list at rank 0 without costing questions for itself).
inline std::vector<ObjectId> sorted_prefix(OracleSession& session, ObjectId o,
                                           const std::vector<ObjectId>& cand,
                                           std::uint32_t kappa) {
  bool contains_o = false;
  std::vector<ObjectId> rest;
  rest.reserve(cand.size());
  for (ObjectId v : cand) {
    if (v == o)
      contains_o = true;
    else
      rest.push_back(v);
  }
  if (!contains_o) return rank_objects_topk(session, o, rest, kappa);
  std::vector<ObjectId> out;
  out.reserve(std::min<std::size_t>(kappa, rest.size() + 1));
  out.push_back(o);
  if (kappa > 1) {
    std::vector<ObjectId> tail = rank_objects_topk(session, o, rest, kappa - 1);
    out.insert(out.end(), tail.begin(), tail.end());
  }
  return out;
}

}  // namespace detail

inline HierIndex build_hier_index(OracleSession& session, const BuildConfig& cfg) {
  cfg.validate();
  const std::uint32_t n = session.size();
  if (n < 1) throw std::invalid_argument("build needs n >= 1");

  PhaseScope scope(session, Phase::learn);
  const LedgerSnapshot before = session.ledger().snapshot();

  HierIndex idx;
  idx.n = n;
  idx.cfg = cfg;
  idx.L = cfg.level_count(n);
  idx.kappa = cfg.kappa(n);
  idx.samples.resize(idx.L);
  idx.phi.assign(idx.L, std::vector<ObjectId>(n, 0));
  idx.prefix.assign(idx.L, std::vector<std::vector<ObjectId>>(n));

  for (std::uint32_t i = 0; i < idx.L; ++i) {
    Rng rng(derive_seed(cfg.seed, i));
    idx.samples[i] = sample_without_replacement(n, cfg.level_sample_size(n, i + 1), rng);
  }

  for (std::uint32_t i = 0; i < idx.L; ++i) {
    // Membership of phi values in the previous level's prefixes drives the
    // candidate filter; precompute each object's prefix as a set.
    std::vector<std::unordered_set<ObjectId>> prev_sets;
    if (i > 0) {
      prev_sets.resize(n);
      for (ObjectId j = 0; j < n; ++j)
        prev_sets[j].insert(idx.prefix[i - 1][j].begin(), idx.prefix[i - 1][j].end());
    }
    for (ObjectId j = 0; j < n; ++j) {
      std::vector<ObjectId> cand;
      if (i == 0) {
        cand = idx.samples[0];
      } else {
        for (ObjectId v : idx.samples[i])
          if (prev_sets[j].count(idx.phi[i - 1][v])) cand.push_back(v);
      }
      if (cand.empty()) throw BuildFailure(j, i + 1);
      idx.max_candidates = std::max<std::uint64_t>(idx.max_candidates, cand.size());
      idx.prefix[i][j] = detail::sorted_prefix(session, j, cand, idx.kappa);
      idx.phi[i][j] = idx.prefix[i][j].front();
    }
  }

  const LedgerSnapshot after = session.ledger().snapshot();
  idx.build_ledger.learn = after.learn - before.learn;
  idx.build_ledger.search = after.search - before.search;
  idx.build_ledger.other = after.other - before.other;
  return idx;
}

// Retries the build with derived seeds when a candidate set comes up empty.
inline HierIndex build_hier_index_retrying(OracleSession& session, BuildConfig cfg,
                                           std::uint32_t max_attempts = 8) {
  for (std::uint32_t attempt = 0;; ++attempt) {
    try {
      return build_hier_index(session, cfg);
    } catch (const BuildFailure&) {
      if (attempt + 1 >= max_attempts) throw;
      cfg.seed = derive_seed(cfg.seed, 0xB111D000 + attempt);
    }
  }
}

// Descends to stop_level and returns the best candidate found there.
// q may be the registered query point or a database id.
inline ObjectId search_hier_rnn(OracleSession& session, const HierIndex& idx,
                                ObjectId q, std::uint32_t stop_level) {
  if (stop_level < 1 || stop_level > idx.L)
    throw std::invalid_argument("stop_level out of range");
  PhaseScope scope(session, Phase::search);
  std::vector<ObjectId> current =
      detail::sorted_prefix(session, q, idx.samples[0], idx.kappa);
  for (std::uint32_t i = 1; i < stop_level; ++i) {
    std::unordered_set<ObjectId> prev(current.begin(), current.end());
    std::vector<ObjectId> cand;
    for (ObjectId v : idx.samples[i])
      if (prev.count(idx.phi[i - 1][v])) cand.push_back(v);
    if (cand.empty()) throw SearchFailure(i + 1);
    current = detail::sorted_prefix(session, q, cand, idx.kappa);
  }
  if (current.empty()) throw SearchFailure(stop_level);
  return current.front();
}

inline ObjectId search_hier(OracleSession& session, const HierIndex& idx,
                            ObjectId q) {
  return search_hier_rnn(session, idx, q, idx.L);
}

// ---------------------------------------------------------------------------
// Sampling-property verifier
// ---------------------------------------------------------------------------
//
// For every object o and level i (1-based), with lambda_i = n/(2D)^(i-1)
// and counts over rank balls beta_o(r) = {v : r_o(v) <= r}:
//
//   (1) |S_i     ∩ beta_o(lambda_{i+1})|  >= 1
//   (2) |S_i     ∩ beta_o(lambda_i)|      <= 4aD log2 n
//   (3) |S_{i+1} ∩ beta_o(lambda_{i-1})|  <= 16aD^3 log2 n
//   (4) |S_i     ∩ beta_o(4 lambda_i)|    >= lower bound, see below
//   (5) |S_{i+1} ∩ beta_o(4 lambda_{i-1})| <= 64aD^3 log2 n
//
// The nominal lower bound in (4) is 4aD log2 n = half the expected count
// when neither the sample size nor the ball is clipped by n.  At level 1
// the ball 4*lambda_1 always covers the whole database while |S_1| is only
// about 2aD log2 n, so the nominal constant is unattainable by counting
// alone.  The verifier therefore uses half the exact hypergeometric
// expectation, min(4aD log2 n, m_i * |ball| / (2n)), which coincides with
// the nominal constant whenever the asymptotic regime applies.

struct SamplingPropertyEntry {
  bool p[5] = {true, true, true, true, true};
  bool all() const { return p[0] && p[1] && p[2] && p[3] && p[4]; }
};

struct SamplingPropertyReport {
  // entries[i][o]: object o at level i+1; query_entries[i] when q given.
  std::vector<std::vector<SamplingPropertyEntry>> entries;
  std::vector<SamplingPropertyEntry> query_entries;
  bool overall = true;
};

namespace detail {

// |{v in sample : rank_of_v <= radius}| where ranks come from a row view.
template <typename RankOf>
std::uint32_t ball_hits(const std::vector<ObjectId>& sample, RankOf&& rank_of,
                        double radius) {
  std::uint32_t hits = 0;
  for (ObjectId v : sample)
    if (static_cast<double>(rank_of(v)) <= radius) ++hits;
  return hits;
}

template <typename RankOf>
SamplingPropertyEntry evaluate_properties(const HierIndex& idx, std::uint32_t i,
                                          RankOf&& rank_of,
                                          std::uint32_t ball4_size) {
  const double n = idx.n;
  const double D = idx.cfg.D;
  const double a = idx.cfg.a;
  const double lg = std::log2(n);
  const auto lambda = [&](double level) { return n / std::pow(2.0 * D, level - 1.0); };

  SamplingPropertyEntry e;
  const double cap2 = 4.0 * a * D * lg;
  const double cap35 = 16.0 * a * D * D * D * lg;
  e.p[0] = ball_hits(idx.samples[i], rank_of, lambda(i + 2.0)) >= 1;
  e.p[1] = ball_hits(idx.samples[i], rank_of, lambda(i + 1.0)) <= cap2;
  if (i + 1 < idx.L) {
    e.p[2] = ball_hits(idx.samples[i + 1], rank_of, lambda(static_cast<double>(i))) <= cap35;
    e.p[4] = ball_hits(idx.samples[i + 1], rank_of, 4.0 * lambda(static_cast<double>(i))) <=
             4.0 * cap35;
  }
  const double m_i = static_cast<double>(idx.samples[i].size());
  const double expect4 = m_i * static_cast<double>(ball4_size) / n;
  const double bound4 = std::min(cap2, expect4 / 2.0);
  e.p[3] = ball_hits(idx.samples[i], rank_of, 4.0 * lambda(i + 1.0)) >= bound4;
  return e;
}

}  // namespace detail

// q_ranks, when given, is the query's view of the database: q_ranks[v] =
// 1 + the number of objects beating v from q (so the nearest object has
// value 1), i.e. row n of the query-extended rank matrix.  Database rows
// give rank 0 to the object itself, so the query view is shifted down by
// one internally: the query's nearest object plays the self role and the
// ball convention beta(r) = {rank <= r} stays uniform across rows.
inline SamplingPropertyReport verify_sampling_properties(
    const HierIndex& idx, const RankMatrix& rm,
    const std::vector<std::uint32_t>* q_ranks = nullptr) {
  idx.cfg.validate();
  if (rm.size() != idx.n)
    throw std::invalid_argument("rank matrix size mismatch");
  if (q_ranks) {
    if (q_ranks->size() != idx.n)
      throw std::invalid_argument("query rank row size mismatch");
    for (std::uint32_t v : *q_ranks)
      if (v < 1 || v > idx.n)
        throw std::invalid_argument("query rank row must be a 1-based view");
  }

  SamplingPropertyReport rep;
  rep.entries.assign(idx.L, std::vector<SamplingPropertyEntry>(idx.n));
  if (q_ranks) rep.query_entries.resize(idx.L);

  const double n = idx.n;
  const double D = idx.cfg.D;
  for (std::uint32_t i = 0; i < idx.L; ++i) {
    const double lambda_i = n / std::pow(2.0 * D, static_cast<double>(i));
    const double radius4 = 4.0 * lambda_i;
    for (ObjectId o = 0; o < idx.n; ++o) {
      const std::uint32_t* row = rm.row(o);
      std::uint32_t ball4 = 0;
      for (ObjectId v = 0; v < idx.n; ++v)
        if (static_cast<double>(row[v]) <= radius4) ++ball4;
      rep.entries[i][o] = detail::evaluate_properties(
          idx, i, [&](ObjectId v) { return row[v]; }, ball4);
      if (!rep.entries[i][o].all()) rep.overall = false;
    }
    if (q_ranks) {
      const auto q_rank = [&](ObjectId v) { return (*q_ranks)[v] - 1; };
      std::uint32_t ball4 = 0;
      for (ObjectId v = 0; v < idx.n; ++v)
        if (static_cast<double>(q_rank(v)) <= radius4) ++ball4;
      rep.query_entries[i] = detail::evaluate_properties(idx, i, q_rank, ball4);
      if (!rep.query_entries[i].all()) rep.overall = false;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization (magic "RKH1")
// ---------------------------------------------------------------------------

inline void HierIndex::save(std::ostream& os) const {
  BinWriter w(os);
  w.magic("RKH1");
  w.u32(n);
  w.u32(L);
  w.f64(cfg.D);
  w.f64(cfg.a);
  w.u64(cfg.seed);
  w.u32(kappa);
  w.u64(build_ledger.learn);
  w.u64(build_ledger.search);
  w.u64(build_ledger.other);
  for (std::uint32_t i = 0; i < L; ++i) {
    w.u32(static_cast<std::uint32_t>(samples[i].size()));
    for (ObjectId v : samples[i]) w.u32(v);
  }
  for (std::uint32_t i = 0; i < L; ++i)
    for (ObjectId j = 0; j < n; ++j) w.u32(phi[i][j]);
  for (std::uint32_t i = 0; i < L; ++i)
    for (ObjectId j = 0; j < n; ++j) {
      w.u32(static_cast<std::uint32_t>(prefix[i][j].size()));
      for (ObjectId v : prefix[i][j]) w.u32(v);
    }
}

inline HierIndex HierIndex::load(std::istream& is) {
  BinReader r(is);
  r.expect_magic("RKH1");
  HierIndex idx;
  idx.n = r.u32();
  idx.L = r.u32();
  idx.cfg.D = r.f64();
  idx.cfg.a = r.f64();
  idx.cfg.seed = r.u64();
  idx.kappa = r.u32();
  idx.build_ledger.learn = r.u64();
  idx.build_ledger.search = r.u64();
  idx.build_ledger.other = r.u64();
  idx.samples.resize(idx.L);
  for (std::uint32_t i = 0; i < idx.L; ++i) {
    idx.samples[i].resize(r.u32());
    for (ObjectId& v : idx.samples[i]) v = r.u32();
  }
  idx.phi.assign(idx.L, std::vector<ObjectId>(idx.n, 0));
  for (std::uint32_t i = 0; i < idx.L; ++i)
    for (ObjectId j = 0; j < idx.n; ++j) idx.phi[i][j] = r.u32();
  idx.prefix.assign(idx.L, std::vector<std::vector<ObjectId>>(idx.n));
  for (std::uint32_t i = 0; i < idx.L; ++i)
    for (ObjectId j = 0; j < idx.n; ++j) {
      idx.prefix[i][j].resize(r.u32());
      for (ObjectId& v : idx.prefix[i][j]) v = r.u32();
    }
  return idx;
}

}  // namespace ranknn
