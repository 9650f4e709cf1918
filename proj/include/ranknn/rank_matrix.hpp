#pragma once
// Rank matrices: r_i(j) is the 0-based position of j in object i's
// distance ordering of the whole database (so r_i(i) = 0 and each row is
// a permutation).  Ranks are asymmetric.  Restricted-subset ranks and
// rank balls derive from the full matrix without further questions.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <vector>

#include "common.hpp"
#include "oracle.hpp"

namespace ranknn {

class RankMatrix {
 public:
  RankMatrix() = default;
  RankMatrix(std::uint32_t n, std::vector<std::uint32_t> ranks)
      : n_(n), r_(std::move(ranks)) {
    if (r_.size() != static_cast<std::size_t>(n_) * n_)
      throw std::invalid_argument("rank payload size mismatch");
  }

  std::uint32_t size() const { return n_; }

  std::uint32_t at(ObjectId i, ObjectId j) const {
    return r_[static_cast<std::size_t>(i) * n_ + j];
  }

  const std::uint32_t* row(ObjectId i) const {
    return &r_[static_cast<std::size_t>(i) * n_];
  }

  // Rank vector rho_u: column u of the matrix, i.e. how every object
  // ranks u.
  std::vector<std::uint32_t> column(ObjectId u) const {
    std::vector<std::uint32_t> col(n_);
    for (ObjectId i = 0; i < n_; ++i) col[i] = at(i, u);
    return col;
  }

  // r_i(j, S): rank of j within subset S from i's viewpoint; i and j must
  // belong to S.  Counts members of S that i ranks strictly before j.
  std::uint32_t restricted_rank(ObjectId i, ObjectId j,
                                const std::vector<ObjectId>& S) const {
    require_member(i, S);
    require_member(j, S);
    const std::uint32_t rj = at(i, j);
    std::uint32_t count = 0;
    for (ObjectId k : S)
      if (at(i, k) < rj) ++count;
    return count;
  }

  // All of i's restricted ranks over S at once (same order as S).
  std::vector<std::uint32_t> restricted_row(ObjectId i,
                                            const std::vector<ObjectId>& S) const {
    require_member(i, S);
    std::vector<std::uint32_t> idx(S.size());
    std::iota(idx.begin(), idx.end(), 0u);
    std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
      return at(i, S[a]) < at(i, S[b]);
    });
    std::vector<std::uint32_t> out(S.size());
    for (std::uint32_t pos = 0; pos < idx.size(); ++pos) out[idx[pos]] = pos;
    return out;
  }

 private:
  void require_member(ObjectId i, const std::vector<ObjectId>& S) const {
    if (std::find(S.begin(), S.end(), i) == S.end())
      throw std::invalid_argument("restricted rank: id not in subset");
  }

  std::uint32_t n_ = 0;
  std::vector<std::uint32_t> r_;  // row-major n*n
};

enum class RankMode {
  oracle,  // comparison questions only (costs sum of insertion bounds per row)
  direct   // read distances (verification; needs a non-concealed session)
};

inline RankMatrix compute_rank_matrix(OracleSession& session,
                                      RankMode mode = RankMode::oracle) {
  const std::uint32_t n = session.size();
  std::vector<std::uint32_t> ranks(static_cast<std::size_t>(n) * n);
  if (mode == RankMode::direct) {
    const HiddenSpace& space = session.space();
    std::vector<ObjectId> order(n);
    for (ObjectId i = 0; i < n; ++i) {
      std::iota(order.begin(), order.end(), 0u);
      std::sort(order.begin(), order.end(), [&](ObjectId a, ObjectId b) {
        const double da = space.distance(i, a), db = space.distance(i, b);
        if (da != db) return da < db;
        return a < b;
      });
      for (std::uint32_t pos = 0; pos < n; ++pos)
        ranks[static_cast<std::size_t>(i) * n + order[pos]] = pos;
    }
    return RankMatrix(n, std::move(ranks));
  }
  std::vector<ObjectId> rest(n > 0 ? n - 1 : 0);
  for (ObjectId i = 0; i < n; ++i) {
    rest.clear();
    for (ObjectId j = 0; j < n; ++j)
      if (j != i) rest.push_back(j);
    const std::vector<ObjectId> sorted = rank_objects(session, i, rest);
    ranks[static_cast<std::size_t>(i) * n + i] = 0;
    for (std::uint32_t pos = 0; pos < sorted.size(); ++pos)
      ranks[static_cast<std::size_t>(i) * n + sorted[pos]] = pos + 1;
  }
  return RankMatrix(n, std::move(ranks));
}

// Rank matrix of T plus an external query adjoined as id n (the largest
// id, so the tie rule's "query loses ties" falls out of id ordering).
// Row n is the query's view; entry (i, n) counts the members of T union
// {q} that i ranks before q, which is one more than the query-column
// convention used by the hashing module.
inline RankMatrix rank_matrix_with_query(const HiddenSpace& space,
                                         const std::vector<double>& query_row) {
  const std::uint32_t n = space.size();
  if (query_row.size() != n)
    throw std::invalid_argument("query distance row size mismatch");
  const std::uint32_t m = n + 1;
  std::vector<double> dm(static_cast<std::size_t>(m) * m, 0.0);
  for (ObjectId i = 0; i < n; ++i) {
    for (ObjectId j = 0; j < n; ++j)
      dm[static_cast<std::size_t>(i) * m + j] = space.distance(i, j);
    dm[static_cast<std::size_t>(i) * m + n] = query_row[i];
    dm[static_cast<std::size_t>(n) * m + i] = query_row[i];
  }
  std::vector<std::uint32_t> ranks(static_cast<std::size_t>(m) * m);
  std::vector<ObjectId> order(m);
  for (ObjectId i = 0; i < m; ++i) {
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](ObjectId a, ObjectId b) {
      const double da = dm[static_cast<std::size_t>(i) * m + a];
      const double db = dm[static_cast<std::size_t>(i) * m + b];
      if (da != db) return da < db;
      return a < b;
    });
    for (std::uint32_t pos = 0; pos < m; ++pos)
      ranks[static_cast<std::size_t>(i) * m + order[pos]] = pos;
  }
  return RankMatrix(m, std::move(ranks));
}

// L1 distance between the rank vectors of u and v.
inline std::uint64_t rho_l1(const RankMatrix& rm, ObjectId u, ObjectId v) {
  std::uint64_t acc = 0;
  const std::uint32_t n = rm.size();
  for (ObjectId j = 0; j < n; ++j) {
    const std::uint32_t a = rm.at(j, u), b = rm.at(j, v);
    acc += a > b ? a - b : b - a;
  }
  return acc;
}

// beta_x(r): ids whose rank from x is at most r (includes x itself).
inline std::vector<ObjectId> rank_ball(const RankMatrix& rm, ObjectId x,
                                       std::uint32_t r) {
  if (r > rm.size() - 1) throw std::invalid_argument("ball radius exceeds n-1");
  std::vector<ObjectId> out;
  for (ObjectId j = 0; j < rm.size(); ++j)
    if (rm.at(x, j) <= r) out.push_back(j);
  return out;
}

// Rank diameter of S: max over ordered pairs (u, v) in S of
// w_uv = r_u(v, S) + r_v(u, S).  Singleton and empty sets have diameter 0.
inline std::uint64_t rank_diameter(const RankMatrix& rm,
                                   const std::vector<ObjectId>& S) {
  if (S.size() <= 1) return 0;
  std::vector<std::vector<std::uint32_t>> rows(S.size());
  for (std::size_t i = 0; i < S.size(); ++i)
    rows[i] = rm.restricted_row(S[i], S);
  std::uint64_t best = 0;
  for (std::size_t i = 0; i < S.size(); ++i)
    for (std::size_t j = i + 1; j < S.size(); ++j) {
      const std::uint64_t w = static_cast<std::uint64_t>(rows[i][j]) + rows[j][i];
      best = std::max(best, w);
    }
  return best;
}

// The query's view of the database, from a row of query-object distances:
// out[v] = 1 + the number of objects beating v from the query (nearest
// object gets 1).  Equals row n of rank_matrix_with_query.
inline std::vector<std::uint32_t> query_view_ranks(
    const std::vector<double>& query_row) {
  const std::uint32_t n = static_cast<std::uint32_t>(query_row.size());
  std::vector<ObjectId> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](ObjectId a, ObjectId b) {
    if (query_row[a] != query_row[b]) return query_row[a] < query_row[b];
    return a < b;
  });
  std::vector<std::uint32_t> out(n);
  for (std::uint32_t pos = 0; pos < n; ++pos) out[order[pos]] = pos + 1;
  return out;
}

// The query's rank column: out[i] = r_i(q), the query's position in i's
// ranking of the database plus query, not counting i itself.  Because the
// query loses ties, this counts the objects other than i at distance at
// most d(i, q) from i.
inline std::vector<std::uint32_t> query_column_ranks(
    const HiddenSpace& space, const std::vector<double>& query_row) {
  const std::uint32_t n = space.size();
  if (query_row.size() != n)
    throw std::invalid_argument("query distance row size mismatch");
  std::vector<std::uint32_t> out(n, 0);
  for (ObjectId i = 0; i < n; ++i) {
    std::uint32_t count = 0;
    for (ObjectId w = 0; w < n; ++w) {
      if (w == i) continue;
      if (space.distance(i, w) <= query_row[i]) ++count;
    }
    out[i] = count;
  }
  return out;
}

// True nearest neighbor of the query under the tie rule.
inline ObjectId query_nearest(const std::vector<double>& query_row) {
  if (query_row.empty()) throw std::invalid_argument("empty query row");
  ObjectId best = 0;
  for (ObjectId v = 1; v < query_row.size(); ++v)
    if (query_row[v] < query_row[best]) best = v;
  return best;
}

inline void rank_matrix_to_csv(const RankMatrix& rm, std::ostream& os) {
  for (ObjectId i = 0; i < rm.size(); ++i) {
    for (ObjectId j = 0; j < rm.size(); ++j) {
      if (j) os << ',';
      os << rm.at(i, j);
    }
    os << '\n';
  }
}

}  // namespace ranknn
