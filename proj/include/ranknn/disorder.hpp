#pragma once
// The disorder constant D of a rank matrix: the smallest value >= 1 such
// that for every ordered triple (x, y, z)
//
//   (1) r_x(y) <= D * (r_z(x) + r_z(y))
//   (2) r_x(y) <= D * (r_x(z) + r_y(z))
//   (3) r_x(y) <= D * (r_x(z) + r_z(y))
//   (4) r_x(y) <= D * (r_z(x) + r_y(z))
//
// Computed exactly as the maximum numerator/denominator ratio (zero
// denominators only occur with zero numerators and are skipped).  The
// returned double is the smallest double satisfying the binding witness,
// so one ulp down fails it.  O(n^3); callers cap n.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "common.hpp"
#include "rank_matrix.hpp"

namespace ranknn {

struct DisorderWitness {
  ObjectId x = 0, y = 0, z = 0;
  int inequality = 0;        // 1..4
  std::uint64_t num = 0;     // r_x(y)
  std::uint64_t den = 1;     // the corresponding rank sum
  double ratio = 0.0;        // minimal double with num <= ratio * den
};

struct DisorderResult {
  double D = 1.0;
  std::array<DisorderWitness, 4> witnesses;  // per-inequality maxima
  int binding = 0;                           // index of the overall max
};

namespace detail {

// Smallest double d with num <= d * den under round-to-nearest evaluation.
inline double minimal_ratio_double(std::uint64_t num, std::uint64_t den) {
  if (num == 0) return 0.0;
  const double dn = static_cast<double>(num), dd = static_cast<double>(den);
  double d = dn / dd;
  while (dn <= std::nextafter(d, 0.0) * dd) d = std::nextafter(d, 0.0);
  while (dn > d * dd) d = std::nextafter(d, std::numeric_limits<double>::infinity());
  return d;
}

// a/b > c/d for nonnegative integers (exact; denominators positive).
inline bool ratio_greater(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                          std::uint64_t d) {
  return a * d > c * b;
}

}  // namespace detail

// Scans triples with z in [z_begin, z_end); combine partitions with
// merge_disorder.  Ratios are tracked as exact integer fractions; a shared
// quick filter against the weakest per-inequality maximum keeps the scan
// close to one multiply per triple.
inline DisorderResult disorder_constant_range(const RankMatrix& rm,
                                              ObjectId z_begin, ObjectId z_end) {
  const std::uint32_t n = rm.size();
  if (n < 2) throw std::invalid_argument("disorder needs n >= 2");
  if (z_begin > z_end || z_end > n)
    throw std::invalid_argument("bad z range");

  // Transposed copy so column reads are contiguous.
  std::vector<std::uint32_t> tr(static_cast<std::size_t>(n) * n);
  for (ObjectId i = 0; i < n; ++i) {
    const std::uint32_t* row = rm.row(i);
    for (ObjectId j = 0; j < n; ++j)
      tr[static_cast<std::size_t>(j) * n + i] = row[j];
  }

  DisorderResult res;
  for (int f = 0; f < 4; ++f) res.witnesses[f].inequality = f + 1;
  // Weakest current maximum across the four inequalities, as a fraction.
  std::uint64_t gmn = 0, gmd = 1;
  const auto refresh_weakest = [&]() {
    gmn = res.witnesses[0].num;
    gmd = res.witnesses[0].den;
    for (int f = 1; f < 4; ++f)
      if (detail::ratio_greater(gmn, gmd, res.witnesses[f].num,
                                res.witnesses[f].den)) {
        gmn = res.witnesses[f].num;
        gmd = res.witnesses[f].den;
      }
  };

  for (ObjectId z = z_begin; z < z_end; ++z) {
    const std::uint32_t* rowz = rm.row(z);                       // r_z(.)
    const std::uint32_t* colz = &tr[static_cast<std::size_t>(z) * n];  // r_.(z)
    for (ObjectId x = 0; x < n; ++x) {
      const std::uint32_t* numrow = rm.row(x);
      const std::uint64_t a1 = rowz[x];  // r_z(x)
      const std::uint64_t a2 = colz[x];  // r_x(z)
      for (ObjectId y = 0; y < n; ++y) {
        const std::uint64_t num = numrow[y];
        const std::uint64_t d1 = a1 + rowz[y];
        const std::uint64_t d2 = a2 + colz[y];
        const std::uint64_t d3 = a2 + rowz[y];
        const std::uint64_t d4 = a1 + colz[y];
        std::uint64_t dmin = d1 < d2 ? d1 : d2;
        const std::uint64_t d34 = d3 < d4 ? d3 : d4;
        if (d34 < dmin) dmin = d34;
        // No inequality can improve if num/dmin <= weakest maximum.
        if (num * gmd <= gmn * dmin) continue;
        const std::uint64_t dens[4] = {d1, d2, d3, d4};
        bool changed = false;
        for (int f = 0; f < 4; ++f) {
          const std::uint64_t den = dens[f];
          if (den == 0) continue;  // implies num == 0
          DisorderWitness& w = res.witnesses[f];
          if (detail::ratio_greater(num, den, w.num, w.den)) {
            w.x = x;
            w.y = y;
            w.z = z;
            w.num = num;
            w.den = den;
            changed = true;
          }
        }
        if (changed) refresh_weakest();
      }
    }
  }

  res.binding = 0;
  for (int f = 0; f < 4; ++f) {
    res.witnesses[f].ratio = detail::minimal_ratio_double(res.witnesses[f].num,
                                                          res.witnesses[f].den);
    if (detail::ratio_greater(res.witnesses[f].num, res.witnesses[f].den,
                              res.witnesses[res.binding].num,
                              res.witnesses[res.binding].den))
      res.binding = f;
  }
  res.D = std::max(1.0, res.witnesses[res.binding].ratio);
  return res;
}

inline DisorderResult merge_disorder(const DisorderResult& a,
                                     const DisorderResult& b) {
  DisorderResult out = a;
  for (int f = 0; f < 4; ++f) {
    const DisorderWitness& wb = b.witnesses[f];
    if (detail::ratio_greater(wb.num, wb.den, out.witnesses[f].num,
                              out.witnesses[f].den))
      out.witnesses[f] = wb;
  }
  out.binding = 0;
  for (int f = 0; f < 4; ++f) {
    out.witnesses[f].ratio = detail::minimal_ratio_double(
        out.witnesses[f].num, out.witnesses[f].den);
    if (detail::ratio_greater(out.witnesses[f].num, out.witnesses[f].den,
                              out.witnesses[out.binding].num,
                              out.witnesses[out.binding].den))
      out.binding = f;
  }
  out.D = std::max(1.0, out.witnesses[out.binding].ratio);
  return out;
}

inline DisorderResult disorder_constant(const RankMatrix& rm) {
  return disorder_constant_range(rm, 0, rm.size());
}

// Annulus rank bounds: an object at rank j from some vantage point, seen
// through disorder D with slack zeta, must sit at rank between
// max(1, ceil(j/D) - zeta) and ceil(D*(j+zeta)).
inline std::pair<std::uint64_t, std::uint64_t> annulus_bounds(std::uint64_t j,
                                                              std::uint64_t zeta,
                                                              double D) {
  if (j < 1) throw std::invalid_argument("annulus_bounds needs j >= 1");
  if (D < 1.0) throw std::invalid_argument("annulus_bounds needs D >= 1");
  const double lo_raw = std::ceil(static_cast<double>(j) / D) - static_cast<double>(zeta);
  const std::uint64_t lo = lo_raw < 1.0 ? 1 : static_cast<std::uint64_t>(lo_raw);
  const std::uint64_t hi =
      static_cast<std::uint64_t>(std::ceil(D * static_cast<double>(j + zeta)));
  return {lo, hi};
}

}  // namespace ranknn
