#pragma once
// Empirical distortion of the rank-vector embedding: for anchors u and
// their peers v, relate the rank r_u(v) to the L1 distance between the
// rank vectors rho_u, rho_v.  The fit picks c and gamma so that
// c * r <= l1 <= gamma * c * r over all sampled pairs with r >= 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

#include "common.hpp"
#include "rank_matrix.hpp"

namespace ranknn {

struct DistortionBucket {
  std::uint32_t rank = 0;
  std::uint32_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

struct DistortionFit {
  std::vector<std::pair<std::uint32_t, std::uint64_t>> pairs;  // (rank, l1)
  std::vector<DistortionBucket> buckets;  // per distinct rank, ascending
  double c = 0.0;      // min over pairs of l1 / rank
  double gamma = 1.0;  // (max over pairs of l1 / rank) / c
  std::uint32_t n = 0;
  std::uint32_t anchor_count = 0;
};

// Samples anchor objects without replacement and collects one (rank, l1)
// pair for every anchor/peer combination.  Each anchor contributes exactly
// one pair at every rank 1..n-1, so every bucket aggregates anchor_count
// values.  Needs n >= 2 (a 2-point space yields the single rank-1 bucket).
inline DistortionFit distortion_fit(const RankMatrix& rm,
                                    std::uint32_t anchor_count,
                                    std::uint64_t seed) {
  const std::uint32_t n = rm.size();
  if (n < 2) throw std::invalid_argument("distortion needs n >= 2");
  if (anchor_count < 1) throw std::invalid_argument("need at least one anchor");
  anchor_count = std::min(anchor_count, n);

  Rng rng(seed);
  const std::vector<ObjectId> anchors =
      sample_without_replacement(n, anchor_count, rng);

  DistortionFit fit;
  fit.n = n;
  fit.anchor_count = anchor_count;
  fit.pairs.reserve(static_cast<std::size_t>(anchor_count) * (n - 1));

  // Accumulate per-rank sums for the buckets in one pass.
  std::vector<double> sum(n, 0.0), sumsq(n, 0.0);
  std::vector<std::uint32_t> cnt(n, 0);

  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
  for (ObjectId u : anchors) {
    // l1 between rho_u and rho_v for all v in one column sweep.
    std::vector<std::uint64_t> l1(n, 0);
    for (ObjectId j = 0; j < n; ++j) {
      const std::uint32_t* row = rm.row(j);
      const std::uint32_t ru = row[u];
      for (ObjectId v = 0; v < n; ++v) {
        const std::uint32_t rv = row[v];
        l1[v] += ru > rv ? ru - rv : rv - ru;
      }
    }
    const std::uint32_t* urow = rm.row(u);
    for (ObjectId v = 0; v < n; ++v) {
      if (v == u) continue;
      const std::uint32_t r = urow[v];
      fit.pairs.emplace_back(r, l1[v]);
      const double val = static_cast<double>(l1[v]);
      sum[r] += val;
      sumsq[r] += val * val;
      cnt[r] += 1;
      const double ratio = val / static_cast<double>(r);
      min_ratio = std::min(min_ratio, ratio);
      max_ratio = std::max(max_ratio, ratio);
    }
  }

  for (std::uint32_t r = 1; r < n; ++r) {
    if (cnt[r] == 0) continue;
    DistortionBucket b;
    b.rank = r;
    b.count = cnt[r];
    b.mean = sum[r] / cnt[r];
    const double var = std::max(0.0, sumsq[r] / cnt[r] - b.mean * b.mean);
    b.stddev = std::sqrt(var);
    fit.buckets.push_back(b);
  }

  fit.c = min_ratio;
  fit.gamma = max_ratio / min_ratio;
  return fit;
}

// Bucket mean at an exact rank (throws if that rank was never sampled).
inline double bucket_mean_at(const DistortionFit& fit, std::uint32_t rank) {
  for (const DistortionBucket& b : fit.buckets)
    if (b.rank == rank) return b.mean;
  throw std::invalid_argument("no bucket at requested rank");
}

// Two-point linearization of the measured curve between ranks r and
// scale*r: c matches the mean l1 at r, gamma the ratio needed to reach the
// mean at scale*r.  Useful when a hashing parameterization only needs the
// curve to be right at the two radii it actually uses.
inline DistortionFit local_linear_fit(const DistortionFit& fit,
                                      std::uint32_t r, double scale) {
  if (r < 1 || scale <= 1.0)
    throw std::invalid_argument("local fit needs r >= 1, scale > 1");
  const auto far_rank = static_cast<std::uint32_t>(
      std::llround(scale * static_cast<double>(r)));
  const double near_mean = bucket_mean_at(fit, r);
  const double far_mean = bucket_mean_at(fit, far_rank);
  DistortionFit out = fit;
  out.c = near_mean / static_cast<double>(r);
  out.gamma = std::max(1.0 + 1e-9,
                       far_mean / (out.c * static_cast<double>(far_rank)));
  return out;
}

inline void distortion_to_csv(const DistortionFit& fit, std::ostream& os) {
  os << "rank,count,mean_l1,std_l1\n";
  for (const DistortionBucket& b : fit.buckets)
    os << b.rank << ',' << b.count << ',' << b.mean << ',' << b.stddev << '\n';
}

}  // namespace ranknn
