#pragma once
// Concealed metric/dissimilarity spaces that the oracle mediates access to.
// Algorithms never touch distances directly; tests and verification layers
// may, through a non-concealed session.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"

namespace ranknn {

enum class SpaceKind : std::uint8_t {
  torus = 0,           // points in [0,1)^d, per-coordinate wraparound metric
  line = 1,            // points in R^d, plain Euclidean metric
  star_graph = 2,      // shortest-path metric of the planted star instance
  explicit_matrix = 3  // arbitrary symmetric dissimilarity matrix
};

class HiddenSpace {
 public:
  SpaceKind kind() const { return kind_; }
  std::uint32_t size() const { return n_; }
  std::uint32_t dim() const { return dim_; }

  double distance(ObjectId u, ObjectId v) const {
    check_id(u);
    check_id(v);
    if (kind_ == SpaceKind::explicit_matrix || kind_ == SpaceKind::star_graph)
      return matrix_[static_cast<std::size_t>(u) * n_ + v];
    return point_distance(&coords_[static_cast<std::size_t>(u) * dim_], v);
  }

  // Distance from an arbitrary point (query coordinates) to object v.
  double point_distance(const double* p, ObjectId v) const {
    check_id(v);
    if (kind_ == SpaceKind::explicit_matrix || kind_ == SpaceKind::star_graph)
      throw StateError("matrix-backed space has no point geometry");
    const double* q = &coords_[static_cast<std::size_t>(v) * dim_];
    double acc = 0.0;
    for (std::uint32_t k = 0; k < dim_; ++k) {
      double delta = std::fabs(p[k] - q[k]);
      if (kind_ == SpaceKind::torus) delta = std::min(delta, 1.0 - delta);
      acc += delta * delta;
    }
    return std::sqrt(acc);
  }

  const std::vector<double>& coords() const { return coords_; }

  static HiddenSpace from_points(SpaceKind kind, std::uint32_t n,
                                 std::uint32_t d, std::vector<double> coords) {
    if (kind != SpaceKind::torus && kind != SpaceKind::line)
      throw std::invalid_argument("from_points wants a geometric kind");
    if (n == 0 || d == 0) throw std::invalid_argument("empty space");
    if (coords.size() != static_cast<std::size_t>(n) * d)
      throw std::invalid_argument("coordinate payload size mismatch");
    HiddenSpace s;
    s.kind_ = kind;
    s.n_ = n;
    s.dim_ = d;
    s.coords_ = std::move(coords);
    return s;
  }

  static HiddenSpace from_matrix(SpaceKind kind, std::uint32_t n,
                                 std::vector<double> matrix) {
    if (kind != SpaceKind::explicit_matrix && kind != SpaceKind::star_graph)
      throw std::invalid_argument("from_matrix wants a matrix kind");
    if (n == 0) throw std::invalid_argument("empty space");
    if (matrix.size() != static_cast<std::size_t>(n) * n)
      throw std::invalid_argument("matrix payload size mismatch");
    for (std::uint32_t i = 0; i < n; ++i) {
      if (matrix[static_cast<std::size_t>(i) * n + i] != 0.0)
        throw std::invalid_argument("matrix diagonal must be zero");
      for (std::uint32_t j = i + 1; j < n; ++j) {
        const double a = matrix[static_cast<std::size_t>(i) * n + j];
        const double b = matrix[static_cast<std::size_t>(j) * n + i];
        if (a != b) throw std::invalid_argument("matrix must be symmetric");
        if (!(a >= 0.0)) throw std::invalid_argument("negative dissimilarity");
      }
    }
    HiddenSpace s;
    s.kind_ = kind;
    s.n_ = n;
    s.dim_ = 0;
    s.matrix_ = std::move(matrix);
    return s;
  }

  void save(std::ostream& os) const {
    BinWriter w(os);
    w.magic("RKQ1");
    w.u8(static_cast<std::uint8_t>(kind_));
    w.u32(n_);
    w.u32(dim_);
    if (kind_ == SpaceKind::torus || kind_ == SpaceKind::line) {
      for (double c : coords_) w.f64(c);
    } else {
      for (double c : matrix_) w.f64(c);
    }
  }

  static HiddenSpace load(std::istream& is) {
    BinReader r(is);
    r.expect_magic("RKQ1");
    const auto kind = static_cast<SpaceKind>(r.u8());
    const std::uint32_t n = r.u32();
    const std::uint32_t d = r.u32();
    if (kind == SpaceKind::torus || kind == SpaceKind::line) {
      std::vector<double> coords(static_cast<std::size_t>(n) * d);
      for (double& c : coords) c = r.f64();
      return from_points(kind, n, d, std::move(coords));
    }
    if (kind == SpaceKind::explicit_matrix || kind == SpaceKind::star_graph) {
      std::vector<double> m(static_cast<std::size_t>(n) * n);
      for (double& c : m) c = r.f64();
      return from_matrix(kind, n, std::move(m));
    }
    throw IoError("unknown space kind");
  }

  void save_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    save(os);
  }

  static HiddenSpace load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    return load(is);
  }

 private:
  void check_id(ObjectId u) const {
    if (u >= n_) throw std::invalid_argument("object id out of range");
  }

  SpaceKind kind_ = SpaceKind::torus;
  std::uint32_t n_ = 0;
  std::uint32_t dim_ = 0;
  std::vector<double> coords_;  // n*dim, row-major (geometric kinds)
  std::vector<double> matrix_;  // n*n (matrix kinds)
};

// n points drawn uniformly from [0,1)^d with the wraparound metric.
inline HiddenSpace make_torus_dataset(std::uint32_t n, std::uint32_t d,
                                      std::uint64_t seed) {
  if (n == 0 || d == 0) throw std::invalid_argument("torus needs n,d >= 1");
  Rng rng(seed);
  std::vector<double> coords(static_cast<std::size_t>(n) * d);
  for (double& c : coords) c = rng.unit();
  return HiddenSpace::from_points(SpaceKind::torus, n, d, std::move(coords));
}

// Fixed 1-d points with the plain metric; handy for small worked examples.
inline HiddenSpace make_line_space(const std::vector<double>& points) {
  if (points.empty()) throw std::invalid_argument("line needs points");
  return HiddenSpace::from_points(SpaceKind::line,
                                  static_cast<std::uint32_t>(points.size()), 1,
                                  std::vector<double>(points));
}

// Parses an n x n comma-separated matrix into an explicit space.
inline HiddenSpace explicit_space_from_csv(std::istream& is) {
  std::vector<double> values;
  std::string linebuf;
  std::uint32_t rows = 0;
  std::size_t cols = 0;
  while (std::getline(is, linebuf)) {
    if (linebuf.empty()) continue;
    std::stringstream ss(linebuf);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(std::stod(cell));
      ++c;
    }
    if (rows == 0) cols = c;
    else if (c != cols) throw IoError("ragged CSV matrix");
    ++rows;
  }
  if (rows == 0 || cols != rows) throw IoError("CSV matrix must be square");
  return HiddenSpace::from_matrix(SpaceKind::explicit_matrix, rows,
                                  std::move(values));
}

// ---------------------------------------------------------------------------
// Planted star instance
// ---------------------------------------------------------------------------
//
// A center vertex fans out into `alpha` branches.  Each branch is a chain of
// `spb` supernodes connected by weight-1 edges (the first chained to the
// center).  Every supernode root hangs `alpha` database leaves with edge
// weights i/(4*alpha), i = 1..alpha.  Only the leaves are database objects:
// n = alpha^2 * spb.  The query attaches to one uniformly chosen leaf per
// branch with distinct edge weights in [1, 1+eps], eps = 1/(400*alpha), so
// each direct neighbor is strictly closer to the query than every
// non-neighbor while the branch chains keep the rest of the space far away.

struct StarInstance {
  HiddenSpace space;                        // database leaves, graph metric
  std::uint32_t alpha = 0;
  std::uint32_t supernodes_per_branch = 0;
  double epsilon = 0.0;
  std::vector<ObjectId> direct_neighbors;    // one per branch
  std::vector<double> query_edge_weights;    // one per branch, distinct
  std::vector<double> query_distances;       // query to every database object
};

inline StarInstance make_star_graph(std::uint32_t alpha, std::uint32_t spb,
                                    std::uint64_t seed) {
  if (alpha < 2) throw std::invalid_argument("star needs alpha >= 2");
  if (spb < 1) throw std::invalid_argument("star needs >= 1 supernode per branch");
  const std::uint32_t n = alpha * alpha * spb;

  // Leaf id layout: branch b, supernode s (depth s+1 from the center),
  // leaf slot i -> id = (b*spb + s)*alpha + i, leaf edge weight (i+1)/(4a).
  const auto leaf_id = [&](std::uint32_t b, std::uint32_t s, std::uint32_t i) {
    return (b * spb + s) * alpha + i;
  };
  const auto leaf_weight = [&](std::uint32_t i) {
    return static_cast<double>(i + 1) / (4.0 * alpha);
  };

  std::vector<double> dm(static_cast<std::size_t>(n) * n, 0.0);
  for (std::uint32_t b1 = 0; b1 < alpha; ++b1)
    for (std::uint32_t s1 = 0; s1 < spb; ++s1)
      for (std::uint32_t i1 = 0; i1 < alpha; ++i1) {
        const ObjectId u = leaf_id(b1, s1, i1);
        for (std::uint32_t b2 = 0; b2 < alpha; ++b2)
          for (std::uint32_t s2 = 0; s2 < spb; ++s2)
            for (std::uint32_t i2 = 0; i2 < alpha; ++i2) {
              const ObjectId v = leaf_id(b2, s2, i2);
              if (v <= u) continue;
              double d = leaf_weight(i1) + leaf_weight(i2);
              if (b1 == b2) {
                d += std::fabs(static_cast<double>(s1) - s2);
              } else {
                d += static_cast<double>(s1 + 1) + static_cast<double>(s2 + 1);
              }
              dm[static_cast<std::size_t>(u) * n + v] = d;
              dm[static_cast<std::size_t>(v) * n + u] = d;
            }
      }

  StarInstance inst;
  inst.alpha = alpha;
  inst.supernodes_per_branch = spb;
  inst.epsilon = 1.0 / (400.0 * alpha);
  inst.space = HiddenSpace::from_matrix(SpaceKind::star_graph, n, std::move(dm));

  Rng rng(seed);
  inst.direct_neighbors.resize(alpha);
  inst.query_edge_weights.resize(alpha);
  for (std::uint32_t b = 0; b < alpha; ++b) {
    const std::uint32_t s = static_cast<std::uint32_t>(rng.bounded(spb));
    const std::uint32_t i = static_cast<std::uint32_t>(rng.bounded(alpha));
    inst.direct_neighbors[b] = leaf_id(b, s, i);
    // Distinct with probability 1; nudge deterministically on collision.
    double w;
    bool fresh;
    do {
      w = 1.0 + inst.epsilon * rng.unit();
      fresh = true;
      for (std::uint32_t b2 = 0; b2 < b; ++b2)
        if (inst.query_edge_weights[b2] == w) fresh = false;
    } while (!fresh);
    inst.query_edge_weights[b] = w;
  }

  // d(q, o) = min over branches of (query edge weight + graph distance from
  // that branch's direct neighbor to o).
  inst.query_distances.assign(n, 0.0);
  for (ObjectId o = 0; o < n; ++o) {
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t b = 0; b < alpha; ++b) {
      const ObjectId dn = inst.direct_neighbors[b];
      const double d = inst.query_edge_weights[b] +
                       (dn == o ? 0.0 : inst.space.distance(dn, o));
      best = std::min(best, d);
    }
    inst.query_distances[o] = best;
  }
  return inst;
}

}  // namespace ranknn
