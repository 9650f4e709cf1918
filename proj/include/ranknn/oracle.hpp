#pragma once
// The similarity oracle: the only sanctioned access path to the hidden
// space.  Every comparison increments a phase-tagged question ledger,
// and algorithms observe nothing but the winners.

#include <atomic>
#include <cstdint>
#include <optional>
#include <vector>

#include "common.hpp"
#include "hidden_space.hpp"

namespace ranknn {

enum class Phase : std::uint8_t { learn = 0, search = 1, other = 2 };

struct LedgerSnapshot {
  std::uint64_t learn = 0;
  std::uint64_t search = 0;
  std::uint64_t other = 0;
  std::uint64_t total() const { return learn + search + other; }
};

// Thread-safe exact counter of oracle questions, split by phase.
class QuestionLedger {
 public:
  void add(Phase p) { counts_[static_cast<int>(p)].fetch_add(1, std::memory_order_relaxed); }
  LedgerSnapshot snapshot() const {
    LedgerSnapshot s;
    s.learn = counts_[0].load(std::memory_order_relaxed);
    s.search = counts_[1].load(std::memory_order_relaxed);
    s.other = counts_[2].load(std::memory_order_relaxed);
    return s;
  }
  std::uint64_t total() const { return snapshot().total(); }
  void reset() {
    for (auto& c : counts_) c.store(0, std::memory_order_relaxed);
  }

 private:
  std::atomic<std::uint64_t> counts_[3] = {0, 0, 0};
};

// A session binds a hidden space to a ledger.  When constructed concealed
// (the default for algorithm runs), the raw space is unreachable through
// it; verification code uses non-concealed sessions or its own copy.
class OracleSession {
 public:
  explicit OracleSession(const HiddenSpace& space, bool conceal = true)
      : space_(space), conceal_(conceal) {}

  std::uint32_t size() const { return space_.size(); }

  // Direct distance access is reserved for verification layers.
  const HiddenSpace& space() const {
    if (conceal_) throw StateError("session conceals the hidden space");
    return space_;
  }
  bool concealed() const { return conceal_; }

  QuestionLedger& ledger() { return ledger_; }
  const QuestionLedger& ledger() const { return ledger_; }

  Phase phase() const { return phase_; }
  void set_phase(Phase p) { phase_ = p; }

  // External query point, addressed as kQueryPoint in oracle calls.
  void register_query(const std::vector<double>& coords) {
    if (space_.kind() == SpaceKind::explicit_matrix ||
        space_.kind() == SpaceKind::star_graph)
      throw StateError("matrix-backed space: register a distance row instead");
    if (coords.size() != space_.dim())
      throw std::invalid_argument("query dimensionality mismatch");
    query_row_.assign(space_.size(), 0.0);
    for (ObjectId v = 0; v < space_.size(); ++v)
      query_row_[v] = space_.point_distance(coords.data(), v);
    has_query_ = true;
  }

  // For matrix-backed spaces: the query's distance to every object.
  void register_query_distances(const std::vector<double>& row) {
    if (row.size() != space_.size())
      throw std::invalid_argument("query distance row size mismatch");
    query_row_ = row;
    has_query_ = true;
  }

  void clear_query() {
    has_query_ = false;
    query_row_.clear();
  }
  bool has_query() const { return has_query_; }

  // The similarity oracle O(q; u, v): which of u, v is closer to q?
  // Ties break toward the lower object id, and the external query loses
  // ties against database objects.  Center q may be a database id or the
  // registered query; so may either contestant (the annulus rank probe and
  // hashing compare database objects against the query point).  Exactly
  // one ledger increment per call; u == v returns u.
  ObjectId oracle_query(ObjectId q, ObjectId u, ObjectId v) {
    ledger_.add(phase_);
    const double du = distance_to_center(q, u);
    const double dv = distance_to_center(q, v);
    if (du < dv) return u;
    if (dv < du) return v;
    return tie_key(u) <= tie_key(v) ? u : v;
  }

 private:
  double distance_to_center(ObjectId q, ObjectId c) const {
    if (c == kQueryPoint) {
      require_query();
      if (q == kQueryPoint) return 0.0;
      check_id(q);
      return query_row_[q];
    }
    check_id(c);
    if (q == kQueryPoint) {
      require_query();
      return query_row_[c];
    }
    check_id(q);
    return space_.distance(q, c);
  }

  // Lower wins; the query point compares above every database id.
  std::uint64_t tie_key(ObjectId u) const {
    return u == kQueryPoint ? std::uint64_t(1) << 32 : u;
  }

  void check_id(ObjectId u) const {
    if (u >= space_.size()) throw std::invalid_argument("object id out of range");
  }
  void require_query() const {
    if (!has_query_) throw StateError("no query registered");
  }

  const HiddenSpace& space_;
  QuestionLedger ledger_;
  Phase phase_ = Phase::other;
  bool conceal_;
  bool has_query_ = false;
  std::vector<double> query_row_;
};

// RAII phase tag for a block of oracle work.
class PhaseScope {
 public:
  PhaseScope(OracleSession& s, Phase p) : s_(s), prev_(s.phase()) { s_.set_phase(p); }
  ~PhaseScope() { s_.set_phase(prev_); }

 private:
  OracleSession& s_;
  Phase prev_;
};

// ---------------------------------------------------------------------------
// Comparison-based ranking
// ---------------------------------------------------------------------------

// Sorts S by distance from o (ties by id, query losing) using binary
// insertion.  Inserting the i-th element costs exactly ceil(log2 i)
// questions, so the total is sum_{i=2}^{|S|} ceil(log2 i).  o must not be
// a member of S; o may be a database id or the registered query point.
inline std::vector<ObjectId> rank_objects(OracleSession& session, ObjectId o,
                                          const std::vector<ObjectId>& S) {
  std::vector<ObjectId> sorted;
  sorted.reserve(S.size());
  for (ObjectId x : S) {
    if (x == o) throw std::invalid_argument("rank_objects: o must not be in S");
    std::size_t lo = 0, hi = sorted.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (session.oracle_query(o, sorted[mid], x) == sorted[mid])
        lo = mid + 1;
      else
        hi = mid;
    }
    sorted.insert(sorted.begin() + static_cast<std::ptrdiff_t>(lo), x);
  }
  return sorted;
}

// Maintains only the k closest while scanning S: each insertion binary
// searches a list of length min(i-1, k), so the question count never
// exceeds the full sort's and the returned prefix is identical to the
// first k entries of rank_objects(session, o, S).
inline std::vector<ObjectId> rank_objects_topk(OracleSession& session,
                                               ObjectId o,
                                               const std::vector<ObjectId>& S,
                                               std::size_t k) {
  if (k == 0) return {};
  std::vector<ObjectId> sorted;
  sorted.reserve(std::min(k + 1, S.size()));
  for (ObjectId x : S) {
    if (x == o) throw std::invalid_argument("rank_objects: o must not be in S");
    std::size_t lo = 0, hi = sorted.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (session.oracle_query(o, sorted[mid], x) == sorted[mid])
        lo = mid + 1;
      else
        hi = mid;
    }
    if (lo >= k) continue;  // falls off the kept prefix
    sorted.insert(sorted.begin() + static_cast<std::ptrdiff_t>(lo), x);
    if (sorted.size() > k) sorted.pop_back();
  }
  return sorted;
}

}  // namespace ranknn
