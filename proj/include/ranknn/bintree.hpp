#pragma once
// Rank-ball cuts and the binary partition tree built from them, plus
// popularity scores (how often an object lands on the inside of a cut)
// and the good-cut probability model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "common.hpp"
#include "oracle.hpp"
#include "rank_matrix.hpp"

namespace ranknn {

// One random cut of S: anchors x1 != x2 drawn uniformly; every other
// member joins S0 when it beats x2 from x1's viewpoint, S1 otherwise.
// The anchors are assigned without questions (x1 -> S0, x2 -> S1), so the
// ledger grows by exactly |S| - 2 and k = |S0| = r_x1(x2, S).
struct CutResult {
  ObjectId x1 = 0, x2 = 0;
  std::vector<ObjectId> s0, s1;
  std::uint32_t k = 0;
};

inline CutResult rank_ball_cut(OracleSession& session,
                               const std::vector<ObjectId>& S,
                               std::uint64_t seed) {
  if (S.size() < 2) throw std::invalid_argument("cut needs |S| >= 2");
  Rng rng(seed);
  const std::size_t i1 = rng.bounded(S.size());
  std::size_t i2 = rng.bounded(S.size() - 1);
  if (i2 >= i1) ++i2;

  CutResult cut;
  cut.x1 = S[i1];
  cut.x2 = S[i2];
  cut.s0.push_back(cut.x1);
  cut.s1.push_back(cut.x2);
  for (ObjectId u : S) {
    if (u == cut.x1 || u == cut.x2) continue;
    if (session.oracle_query(cut.x1, cut.x2, u) == u)
      cut.s0.push_back(u);
    else
      cut.s1.push_back(u);
  }
  cut.k = static_cast<std::uint32_t>(cut.s0.size());
  return cut;
}

// ---------------------------------------------------------------------------
// Partition tree
// ---------------------------------------------------------------------------

struct TreeNode {
  std::vector<ObjectId> members;  // every node records its subset
  ObjectId x1 = 0, x2 = 0;        // anchors (internal nodes only)
  std::unique_ptr<TreeNode> left;   // the S0 side
  std::unique_ptr<TreeNode> right;  // the S1 side
  bool is_leaf() const { return !left; }
};

struct BinTree {
  std::unique_ptr<TreeNode> root;
  std::uint32_t depth = 0;       // edges on the longest root-leaf path
  std::uint32_t min_leaf = 0;
  std::uint32_t max_depth = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::unique_ptr<TreeNode> build_tree_node(OracleSession& session,
                                                 std::vector<ObjectId> S,
                                                 std::uint32_t depth,
                                                 const BinTree& params,
                                                 std::uint64_t node_seed,
                                                 std::uint32_t& max_seen) {
  auto node = std::make_unique<TreeNode>();
  node->members = std::move(S);
  max_seen = std::max(max_seen, depth);
  if (node->members.size() <= params.min_leaf || depth >= params.max_depth)
    return node;

  // A degenerate cut (one side keeping only its anchor) is retried with
  // fresh anchors up to three times, then accepted as is.
  CutResult cut;
  for (std::uint32_t attempt = 0;; ++attempt) {
    cut = rank_ball_cut(session, node->members, derive_seed(node_seed, attempt));
    const bool degenerate = cut.s0.size() <= 1 || cut.s1.size() <= 1;
    if (!degenerate || attempt >= 3) break;
  }
  node->x1 = cut.x1;
  node->x2 = cut.x2;
  node->left = build_tree_node(session, std::move(cut.s0), depth + 1, params,
                               derive_seed(node_seed, 0xA0), max_seen);
  node->right = build_tree_node(session, std::move(cut.s1), depth + 1, params,
                                derive_seed(node_seed, 0xA1), max_seen);
  return node;
}

}  // namespace detail

inline BinTree build_tree(OracleSession& session, const std::vector<ObjectId>& S,
                          std::uint32_t min_leaf, std::uint32_t max_depth,
                          std::uint64_t seed) {
  if (S.empty()) throw std::invalid_argument("tree needs a non-empty set");
  if (min_leaf < 1) throw std::invalid_argument("min_leaf must be >= 1");
  if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  BinTree tree;
  tree.min_leaf = min_leaf;
  tree.max_depth = max_depth;
  tree.seed = seed;
  std::uint32_t max_seen = 0;
  tree.root = detail::build_tree_node(session, S, 0, tree, seed, max_seen);
  tree.depth = max_seen;
  return tree;
}

// ---------------------------------------------------------------------------
// Popularity
// ---------------------------------------------------------------------------

// Exact popularity phi_u = (1/n) * sum_j (1 - r_j(u)/n): the probability
// that u lands inside the ball of a uniformly chosen anchor pair drawn
// with replacement.
inline double phi_exact(const RankMatrix& rm, ObjectId u) {
  const std::uint32_t n = rm.size();
  std::uint64_t total = 0;
  for (ObjectId j = 0; j < n; ++j) total += rm.at(j, u);
  return 1.0 - static_cast<double>(total) /
                   (static_cast<double>(n) * static_cast<double>(n));
}

// Literal enumeration over ordered distinct anchor pairs (x1, x2): the
// fraction with r_x1(u) < r_x1(x2).  Differs from phi_exact by exactly
// T_u / (n^2 (n-1)) < 1/n, where T_u is u's rank column sum.
inline double phi_exhaustive_pairs(const RankMatrix& rm, ObjectId u) {
  const std::uint32_t n = rm.size();
  std::uint64_t hits = 0;
  for (ObjectId x1 = 0; x1 < n; ++x1)
    for (ObjectId x2 = 0; x2 < n; ++x2) {
      if (x2 == x1) continue;
      if (rm.at(x1, u) < rm.at(x1, x2)) ++hits;
    }
  return static_cast<double>(hits) /
         (static_cast<double>(n) * static_cast<double>(n - 1));
}

struct PopularityEstimate {
  std::vector<double> phi;        // exact values
  std::vector<std::uint64_t> y;   // Monte Carlo inside-counts per object
  std::uint64_t cuts = 0;
  std::vector<ObjectId> ranking;  // ids by decreasing y (ties by id)
};

// Runs `cuts` independent full-set cuts with a per-cut derived seed and
// counts how often each object lands in S0.  phi is computed exactly from
// the rank matrix: through the session when it permits direct access,
// otherwise by spending oracle questions.
inline PopularityEstimate popularity_scores(OracleSession& session,
                                            std::uint64_t cuts,
                                            std::uint64_t seed) {
  if (cuts < 1) throw std::invalid_argument("need at least one cut");
  const std::uint32_t n = session.size();
  if (n < 2) throw std::invalid_argument("popularity needs n >= 2");

  PopularityEstimate est;
  est.cuts = cuts;
  const RankMatrix rm = compute_rank_matrix(
      session, session.concealed() ? RankMode::oracle : RankMode::direct);
  est.phi.resize(n);
  for (ObjectId u = 0; u < n; ++u) est.phi[u] = phi_exact(rm, u);

  std::vector<ObjectId> all(n);
  for (ObjectId u = 0; u < n; ++u) all[u] = u;
  est.y.assign(n, 0);
  for (std::uint64_t c = 0; c < cuts; ++c) {
    const CutResult cut = rank_ball_cut(session, all, derive_seed(seed, c));
    for (ObjectId u : cut.s0) est.y[u] += 1;
  }

  est.ranking = all;
  std::sort(est.ranking.begin(), est.ranking.end(), [&](ObjectId a, ObjectId b) {
    if (est.y[a] != est.y[b]) return est.y[a] > est.y[b];
    return a < b;
  });
  return est;
}

// ---------------------------------------------------------------------------
// Good-cut probability
// ---------------------------------------------------------------------------

struct GoodCutModel {
  double D = 1.0;
  double epsilon = 0.0;
  double value = 0.0;
  bool valid = false;  // radicand nonnegative, i.e. epsilon >= 1 - 1/(8D)
};

// Closed form (1/(2D)) * sqrt(1 - 8D(1-eps)); flagged invalid when the
// radicand is negative (the model then predicts no good cuts).
inline GoodCutModel good_cut_probability(double D, double epsilon) {
  if (D < 1.0) throw std::invalid_argument("good cut model needs D >= 1");
  if (!(epsilon > 0.0) || epsilon > 1.0)
    throw std::invalid_argument("good cut model needs 0 < eps <= 1");
  GoodCutModel m;
  m.D = D;
  m.epsilon = epsilon;
  const double radicand = 1.0 - 8.0 * D * (1.0 - epsilon);
  m.valid = radicand >= 0.0;
  m.value = m.valid ? std::sqrt(radicand) / (2.0 * D) : 0.0;
  return m;
}

// Counting form: the fraction of anchor ranks k in 1..n for which the
// cut-size quadratic (2D/n)k^2 - k + (1-eps)n is negative.  Agrees with
// the closed form to within 2/n.
inline double good_cut_count(double D, double epsilon, std::uint32_t n) {
  if (D < 1.0) throw std::invalid_argument("good cut model needs D >= 1");
  if (!(epsilon > 0.0) || epsilon > 1.0)
    throw std::invalid_argument("good cut model needs 0 < eps <= 1");
  if (n < 1) throw std::invalid_argument("good cut count needs n >= 1");
  std::uint64_t hits = 0;
  for (std::uint64_t k = 1; k <= n; ++k) {
    const double kd = static_cast<double>(k);
    const double q = (2.0 * D / n) * kd * kd - kd + (1.0 - epsilon) * n;
    if (q < 0.0) ++hits;
  }
  return static_cast<double>(hits) / n;
}

}  // namespace ranknn
