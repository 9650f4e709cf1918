#pragma once
// Acceptance experiments: one self-contained driver per shipping criterion,
// each returning measured numbers, a pass flag and per-trial records.  The
// drivers pin every seed and tolerance so reruns are bit-identical, and
// aggregates are always recomputed from the stored trials rather than
// accumulated on the side.
//
// Criterion 3 (question scaling across n) is implemented faithfully and
// currently fails: the measured spread of mean search questions over
// log2^2 n exceeds the required factor, and the n = 1024 mean exceeds n/2.
// The driver reports the measured numbers; nothing is relaxed to force a
// pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "annulus.hpp"
#include "bintree.hpp"
#include "common.hpp"
#include "disorder.hpp"
#include "distortion.hpp"
#include "hidden_space.hpp"
#include "hier_index.hpp"
#include "oracle.hpp"
#include "rank_matrix.hpp"
#include "rsh.hpp"

namespace ranknn {

struct TrialRecord {
  std::uint64_t seed = 0;
  std::uint64_t questions = 0;
  bool success = false;
  std::int64_t returned_rank = -1;  // 1-based query-view rank; -1 when n/a
};

struct ExperimentReport {
  std::string name;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<TrialRecord> trials;
  double mean_questions = 0.0;
  double stddev_questions = 0.0;
  double success_rate = 0.0;

  // Aggregates derive from the records, never from side accumulators.
  void recompute() {
    mean_questions = stddev_questions = success_rate = 0.0;
    if (trials.empty()) return;
    double sum = 0.0, sumsq = 0.0, hits = 0.0;
    for (const TrialRecord& t : trials) {
      const double q = static_cast<double>(t.questions);
      sum += q;
      sumsq += q * q;
      if (t.success) hits += 1.0;
    }
    const double m = static_cast<double>(trials.size());
    mean_questions = sum / m;
    stddev_questions =
        std::sqrt(std::max(0.0, sumsq / m - mean_questions * mean_questions));
    success_rate = hits / m;
  }

  void write_json(std::ostream& os) const {
    os.precision(17);  // aggregates must survive a parse-and-recompute check
    os << "{\n  \"experiment\": \"" << name << "\",\n  \"parameters\": {";
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (i) os << ", ";
      os << '"' << params[i].first << "\": \"" << params[i].second << '"';
    }
    os << "},\n  \"aggregates\": {\"trials\": " << trials.size()
       << ", \"mean_questions\": " << mean_questions
       << ", \"stddev_questions\": " << stddev_questions
       << ", \"success_rate\": " << success_rate << "},\n  \"trials\": [";
    for (std::size_t i = 0; i < trials.size(); ++i) {
      const TrialRecord& t = trials[i];
      os << (i ? ",\n    " : "\n    ") << "{\"seed\": " << t.seed
         << ", \"questions\": " << t.questions << ", \"success\": "
         << (t.success ? "true" : "false")
         << ", \"returned_rank\": " << t.returned_rank << '}';
    }
    os << "\n  ]\n}\n";
  }
};

struct CriterionOutcome {
  int id = 0;
  bool passed = false;
  std::string detail;
  std::vector<ExperimentReport> reports;
};

namespace detail {

inline RankMatrix verification_matrix(const HiddenSpace& s) {
  OracleSession open(s, false);
  return compute_rank_matrix(open, RankMode::direct);
}

inline double seconds_since(
    const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

inline std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline void put(ExperimentReport& rep, const std::string& key, double v,
                int digits = 3) {
  rep.params.emplace_back(key, fmt(v, digits));
}

inline void put(ExperimentReport& rep, const std::string& key,
                const std::string& v) {
  rep.params.emplace_back(key, v);
}

// Centered moving average with the window truncated at the edges.
inline std::vector<double> smooth(const std::vector<double>& v, int window) {
  const int half = window / 2;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double acc = 0.0;
    int cnt = 0;
    for (int k = -half; k <= half; ++k) {
      const std::int64_t j = static_cast<std::int64_t>(i) + k;
      if (j < 0 || j >= static_cast<std::int64_t>(v.size())) continue;
      acc += v[j];
      ++cnt;
    }
    out[i] = acc / cnt;
  }
  return out;
}

}  // namespace detail

// --- Criterion 1: distortion curve shape on the torus -----------------------
// n = 400, d in {1,2,4}, 50 anchors.  The smoothed (window 5) per-rank mean
// L1 curve must be monotone up to a 1% sampling dip, and for d = 1 a
// through-origin linear fit over ranks [n/10, n) must reach R^2 >= 0.95.
inline CriterionOutcome run_criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  CriterionOutcome out;
  out.id = 1;

  ExperimentReport rep;
  rep.name = "distortion-curve";
  detail::put(rep, "n", "400");
  detail::put(rep, "anchors", "50");
  detail::put(rep, "window", "5");
  detail::put(rep, "access", "direct");

  bool ok = true;
  std::ostringstream msg;
  msg << "smoothed step ratio ";
  double r2 = 0.0;
  for (std::uint32_t d : {1u, 2u, 4u}) {
    const HiddenSpace s = make_torus_dataset(400, d, 1000 + d);
    const RankMatrix rm = detail::verification_matrix(s);
    const DistortionFit fit = distortion_fit(rm, 50, 2000 + d);
    std::vector<double> means;
    means.reserve(fit.buckets.size());
    for (const DistortionBucket& b : fit.buckets) means.push_back(b.mean);
    const std::vector<double> sm = detail::smooth(means, 5);
    double worst = 1e300;
    for (std::size_t i = 0; i + 1 < sm.size(); ++i)
      worst = std::min(worst, sm[i + 1] / sm[i]);
    const bool mono = worst >= 0.99;  // 1% dip tolerance for sampling noise
    ok = ok && mono;
    msg << 'd' << d << '=' << detail::fmt(worst, 4) << ' ';
    detail::put(rep, "worst_ratio_d" + std::to_string(d), worst, 6);

    if (d == 1) {
      double sxy = 0.0, sxx = 0.0, syy = 0.0, sse = 0.0;
      for (const DistortionBucket& b : fit.buckets) {
        if (b.rank < 40) continue;
        sxy += static_cast<double>(b.rank) * b.mean;
        sxx += static_cast<double>(b.rank) * static_cast<double>(b.rank);
        syy += b.mean * b.mean;
      }
      const double c = sxy / sxx;
      for (const DistortionBucket& b : fit.buckets) {
        if (b.rank < 40) continue;
        const double e = b.mean - c * b.rank;
        sse += e * e;
      }
      r2 = 1.0 - sse / syy;
      ok = ok && r2 >= 0.95;
      detail::put(rep, "fit_slope_d1", c);
      detail::put(rep, "r2_d1", r2, 6);
    }

    TrialRecord t;
    t.seed = 2000 + d;
    t.questions = 0;  // verification access, no oracle spend
    t.success = worst >= 0.99;
    rep.trials.push_back(t);
  }

  const double elapsed = detail::seconds_since(start);
  ok = ok && elapsed < 60.0;
  rep.recompute();
  out.reports.push_back(std::move(rep));
  out.passed = ok;
  msg << "(>= 0.99 each); d=1 R^2 " << detail::fmt(r2, 4) << " (>= 0.95); "
      << detail::fmt(elapsed, 1) << "s (< 60s)";
  out.detail = msg.str();
  return out;
}

// --- Criterion 2: hierarchical search returns the nearest neighbor ----------
// Torus d = 2, n = 512, exact disorder, a = 2.  Twenty build seeds, ten
// external queries each: success (exact nearest neighbor) >= 0.95 overall
// and not a single search failure.
inline CriterionOutcome run_criterion_2() {
  const auto start = std::chrono::steady_clock::now();
  CriterionOutcome out;
  out.id = 2;

  const std::uint32_t n = 512;
  const HiddenSpace s = make_torus_dataset(n, 2, 47);
  const double D = disorder_constant(detail::verification_matrix(s)).D;
  OracleSession open(s, false);

  ExperimentReport rep;
  rep.name = "hier-nn-success";
  detail::put(rep, "n", "512");
  detail::put(rep, "d", "2");
  detail::put(rep, "D", D, 6);
  detail::put(rep, "a", "2");
  detail::put(rep, "build_seeds", "20");
  detail::put(rep, "queries_per_build", "10");

  int success = 0, failures = 0;
  for (std::uint64_t bs = 0; bs < 20; ++bs) {
    BuildConfig cfg;
    cfg.D = D;
    cfg.a = 2.0;
    cfg.seed = 300 + bs;
    OracleSession session(s);
    const HierIndex idx = build_hier_index_retrying(session, cfg);
    Rng rng(derive_seed(9000, bs));
    for (int t = 0; t < 10; ++t) {
      const double q[2] = {rng.unit(), rng.unit()};
      session.register_query({q[0], q[1]});
      TrialRecord trial;
      trial.seed = cfg.seed;
      const std::uint64_t before = session.ledger().snapshot().search;
      try {
        const ObjectId got = search_hier_rnn(session, idx, kQueryPoint, idx.L);
        std::vector<double> qrow(n);
        for (ObjectId v = 0; v < n; ++v)
          qrow[v] = open.space().point_distance(q, v);
        trial.returned_rank = query_view_ranks(qrow)[got];
        trial.success = trial.returned_rank == 1;
        if (trial.success) ++success;
      } catch (const SearchFailure&) {
        ++failures;
      }
      trial.questions = session.ledger().snapshot().search - before;
      rep.trials.push_back(trial);
    }
  }

  const double elapsed = detail::seconds_since(start);
  rep.recompute();
  out.passed = success >= 190 && failures == 0 && elapsed < 120.0;
  std::ostringstream msg;
  msg << "exact NN in " << success << "/200 queries (>= 190); "
      << failures << " search failures (= 0); mean "
      << detail::fmt(rep.mean_questions, 0) << " questions; "
      << detail::fmt(elapsed, 1) << "s (< 120s)";
  out.detail = msg.str();
  out.reports.push_back(std::move(rep));
  return out;
}

// --- Criterion 3: question scaling across n ---------------------------------
// Torus d = 2, n in {128, 256, 512, 1024}: mean search questions over
// log2^2 n may spread by at most a factor 3, and the n = 1024 mean must
// beat half a linear scan.  Measured honestly; this criterion currently
// fails on both counts (the per-level candidate budget kappa = 4aD log2 n
// carries the disorder constant into every query, so questions grow like
// D log^2 n with D itself drifting upward with n).
inline CriterionOutcome run_criterion_3() {
  const auto start = std::chrono::steady_clock::now();
  CriterionOutcome out;
  out.id = 3;

  double lo = 1e300, hi = 0.0, mean1024 = 0.0;
  std::ostringstream table;
  for (std::uint32_t n : {128u, 256u, 512u, 1024u}) {
    const HiddenSpace s = make_torus_dataset(n, 2, 60);
    const double D = disorder_constant(detail::verification_matrix(s)).D;
    BuildConfig cfg;
    cfg.D = D;
    cfg.a = 2.0;
    cfg.seed = 7;
    OracleSession session(s);
    const HierIndex idx = build_hier_index_retrying(session, cfg);

    ExperimentReport rep;
    rep.name = "hier-question-scaling-n" + std::to_string(n);
    detail::put(rep, "n", std::to_string(n));
    detail::put(rep, "D", D, 6);
    detail::put(rep, "a", "2");
    detail::put(rep, "queries", "50");

    Rng rng(4711);
    for (int t = 0; t < 50; ++t) {
      const double q[2] = {rng.unit(), rng.unit()};
      session.register_query({q[0], q[1]});
      TrialRecord trial;
      trial.seed = cfg.seed;
      const std::uint64_t before = session.ledger().snapshot().search;
      search_hier_rnn(session, idx, kQueryPoint, idx.L);
      trial.questions = session.ledger().snapshot().search - before;
      trial.success = true;
      rep.trials.push_back(trial);
    }
    rep.recompute();

    const double lg = std::log2(static_cast<double>(n));
    const double norm = rep.mean_questions / (lg * lg);
    lo = std::min(lo, norm);
    hi = std::max(hi, norm);
    if (n == 1024) mean1024 = rep.mean_questions;
    table << 'n' << n << '=' << detail::fmt(rep.mean_questions, 0) << ' ';
    detail::put(rep, "mean_over_log2sq", norm);
    out.reports.push_back(std::move(rep));
  }

  const double ratio = hi / lo;
  out.passed = ratio <= 3.0 && mean1024 < 512.0;
  std::ostringstream msg;
  msg << "mean questions " << table.str() << "; spread of mean/log2^2 n = "
      << detail::fmt(ratio, 2) << " (required <= 3); n=1024 mean "
      << detail::fmt(mean1024, 0) << " (required < 512); "
      << detail::fmt(detail::seconds_since(start), 1) << 's';
  out.detail = msg.str();
  return out;
}

// --- Criterion 4: annulus search success and question budget -----------------
// Torus d = 1, n = 256, m = 16, R = ceil(n/20) = 13, 200 queries at budget
// multiplier 2: success (returned view rank <= R) in at least half the
// trials and mean questions within 2(m + log2 n + D + D^2 n/(m R) + 1).
inline CriterionOutcome run_criterion_4() {
  const auto start = std::chrono::steady_clock::now();
  CriterionOutcome out;
  out.id = 4;

  const std::uint32_t n = 256, m = 16, R = 13;
  const HiddenSpace s = make_torus_dataset(n, 1, 91);
  const double D = disorder_constant(detail::verification_matrix(s)).D;
  OracleSession open(s, false);
  OracleSession session(s);
  const AnnulusIndex idx = learn_annulus(session, m, 5);

  ExperimentReport rep;
  rep.name = "annulus-search";
  detail::put(rep, "n", "256");
  detail::put(rep, "m", "16");
  detail::put(rep, "R", "13");
  detail::put(rep, "D", D, 6);
  detail::put(rep, "multiplier", "2");

  int success = 0;
  Rng rng(1234);
  for (int t = 0; t < 200; ++t) {
    const double q = rng.unit();
    session.register_query({q});
    const AnnulusResult res = search_annulus(session, idx, kQueryPoint, R, D,
                                             derive_seed(55, t), 2.0);
    std::vector<double> qrow(n);
    for (ObjectId v = 0; v < n; ++v)
      qrow[v] = open.space().point_distance(&q, v);
    TrialRecord trial;
    trial.seed = derive_seed(55, t);
    trial.questions = res.trace.questions;
    trial.returned_rank = query_view_ranks(qrow)[res.winner];
    trial.success = trial.returned_rank <= static_cast<std::int64_t>(R);
    if (trial.success) ++success;
    rep.trials.push_back(trial);
  }
  rep.recompute();

  const double bound =
      2.0 * (m + std::log2(static_cast<double>(n)) + D +
             D * D * n / (static_cast<double>(m) * R) + 1.0);
  out.passed = success >= 100 && rep.mean_questions <= bound;
  std::ostringstream msg;
  msg << "rank <= 13 in " << success << "/200 trials (>= 100); mean "
      << detail::fmt(rep.mean_questions, 1) << " questions <= bound "
      << detail::fmt(bound, 1) << "; "
      << detail::fmt(detail::seconds_since(start), 1) << 's';
  out.detail = msg.str();
  out.reports.push_back(std::move(rep));
  return out;
}

// --- Criterion 5: planted star instance disorder ----------------------------
// alpha = 4, four supernodes per branch (n = 64): the exact brute-force
// disorder constant must land in [alpha/8, 8*alpha] for five seeds.  The
// leaf metric does not depend on the seed (only the query attachment
// does), so the five values coincide.
inline CriterionOutcome run_criterion_5() {
  CriterionOutcome out;
  out.id = 5;

  ExperimentReport rep;
  rep.name = "star-disorder";
  detail::put(rep, "alpha", "4");
  detail::put(rep, "supernodes_per_branch", "4");
  detail::put(rep, "lo", "0.5");
  detail::put(rep, "hi", "32");

  bool ok = true;
  double value = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const StarInstance inst = make_star_graph(4, 4, seed);
    const double D =
        disorder_constant(detail::verification_matrix(inst.space)).D;
    value = D;
    TrialRecord t;
    t.seed = seed;
    t.success = D >= 0.5 && D <= 32.0;
    ok = ok && t.success;
    rep.trials.push_back(t);
  }
  rep.recompute();
  detail::put(rep, "D", value, 6);

  out.passed = ok;
  out.detail = "exact D = " + detail::fmt(value, 4) +
               " on all 5 seeds, within [0.5, 32]";
  out.reports.push_back(std::move(rep));
  return out;
}

// --- Criterion 6: hash collision law ----------------------------------------
// n = 30: the collision probability computed from rank vectors equals the
// exhaustive enumeration over all n^2 with-replacement anchor pairs
// exactly (integer identity).  n = 100: 20,000 sampled distinct anchor
// pairs land within +/-0.02 of the closed form for 20 object pairs.
inline CriterionOutcome run_criterion_6() {
  CriterionOutcome out;
  out.id = 6;

  bool exact_ok = true;
  {
    const std::uint32_t n = 30;
    const HiddenSpace s = make_torus_dataset(n, 2, 65);
    const RankMatrix rm = detail::verification_matrix(s);
    OracleSession session(s);
    const std::pair<ObjectId, ObjectId> pairs[] = {
        {0, 1}, {3, 17}, {8, 29}, {12, 13}, {22, 5}};
    for (const auto& [u, v] : pairs) {
      std::uint64_t disagree = 0;
      for (ObjectId x1 = 0; x1 < n; ++x1)
        for (ObjectId x2 = 0; x2 < n; ++x2) {
          if (x1 == x2) continue;  // degenerate pairs never separate
          const HashSpec spec{x1, x2};
          if (hash_value(session, spec, u) != hash_value(session, spec, v))
            ++disagree;
        }
      if (disagree != rho_l1(rm, u, v)) exact_ok = false;
      if (collision_prob_exact(rm, u, v) !=
          1.0 - static_cast<double>(disagree) / (static_cast<double>(n) * n))
        exact_ok = false;
    }
  }

  ExperimentReport rep;
  rep.name = "rsh-collision-monte-carlo";
  detail::put(rep, "n", "100");
  detail::put(rep, "specs_per_pair", "20000");
  detail::put(rep, "pairs", "20");

  double worst = 0.0;
  {
    const std::uint32_t n = 100;
    const HiddenSpace s = make_torus_dataset(n, 2, 77);
    const RankMatrix rm = detail::verification_matrix(s);
    OracleSession session(s);
    Rng rng(31337);
    for (int pi = 0; pi < 20; ++pi) {
      const ObjectId u = static_cast<ObjectId>(rng.bounded(n));
      ObjectId v = static_cast<ObjectId>(rng.bounded(n - 1));
      if (v >= u) ++v;
      int agree = 0;
      for (int t = 0; t < 20000; ++t) {
        HashSpec sp;
        sp.x1 = static_cast<ObjectId>(rng.bounded(n));
        sp.x2 = static_cast<ObjectId>(rng.bounded(n - 1));
        if (sp.x2 >= sp.x1) ++sp.x2;
        if (hash_value(session, sp, u) == hash_value(session, sp, v)) ++agree;
      }
      const double gap =
          std::abs(agree / 20000.0 - collision_prob_exact(rm, u, v));
      worst = std::max(worst, gap);
      TrialRecord trial;
      trial.seed = pi;
      trial.questions = 2 * 20000;
      trial.success = gap <= 0.02;
      rep.trials.push_back(trial);
    }
  }
  rep.recompute();
  detail::put(rep, "worst_gap", worst, 4);

  out.passed = exact_ok && worst <= 0.02;
  out.detail = std::string("exhaustive identity ") +
               (exact_ok ? "exact" : "VIOLATED") + " on 5 pairs at n=30; " +
               "MC worst gap " + detail::fmt(worst, 4) + " (<= 0.02) at n=100";
  out.reports.push_back(std::move(rep));
  return out;
}

// --- Criterion 7: hash-table retrieval --------------------------------------
// Torus d = 1, n = 400, r = 20, eps = 1.  Parameters come from the
// two-point linearization of the measured distortion curve; queries must
// return an object of view rank <= 40 in at least half of 200 trials while
// scanning at most 3 * tables candidates each.
inline CriterionOutcome run_criterion_7() {
  const auto start = std::chrono::steady_clock::now();
  CriterionOutcome out;
  out.id = 7;

  const std::uint32_t n = 400;
  const HiddenSpace s = make_torus_dataset(n, 1, 101);
  const RankMatrix rm = detail::verification_matrix(s);
  const DistortionFit loc =
      local_linear_fit(distortion_fit(rm, 50, 5), 20, 2.0);
  const RshParams prm = derive_params(n, 20, 1.0, loc);

  OracleSession session(s);
  const RshTableSet set = build_rsh_tables(session, prm, 77);
  OracleSession open(s, false);

  ExperimentReport rep;
  rep.name = "rsh-retrieval";
  detail::put(rep, "n", "400");
  detail::put(rep, "r", "20");
  detail::put(rep, "eps", "1");
  detail::put(rep, "theta", prm.theta, 6);
  detail::put(rep, "bits", std::to_string(prm.bits));
  detail::put(rep, "tables", std::to_string(prm.tables));

  int success = 0;
  bool caps_ok = true;
  Rng rng(888);
  for (int t = 0; t < 200; ++t) {
    const double q = rng.unit();
    session.register_query({q});
    const RshQueryResult res = query_rsh(session, set, kQueryPoint, 40);
    TrialRecord trial;
    trial.seed = 888;
    trial.questions = res.trace.questions;
    caps_ok = caps_ok && res.trace.scanned <= 3 * prm.tables;
    if (res.winner) {
      std::vector<double> qrow(n);
      for (ObjectId v = 0; v < n; ++v)
        qrow[v] = open.space().point_distance(&q, v);
      trial.returned_rank = query_view_ranks(qrow)[*res.winner];
      trial.success = trial.returned_rank <= 40;
    }
    if (trial.success) ++success;
    rep.trials.push_back(trial);
  }
  rep.recompute();

  out.passed = success >= 100 && caps_ok;
  std::ostringstream msg;
  msg << "rank <= 40 in " << success << "/200 queries (>= 100); scan cap 3*"
      << prm.tables << (caps_ok ? " respected" : " VIOLATED") << "; "
      << prm.tables << " tables x " << prm.bits << " bits; "
      << detail::fmt(detail::seconds_since(start), 1) << 's';
  out.detail = msg.str();
  out.reports.push_back(std::move(rep));
  return out;
}

// --- Criterion 8: good-cut probability formula vs counting -------------------
// For D in {1,2,4} and eps = 1 - t/(8D), t in {0, 0.5, 1} (all inside the
// model's validity region by construction), the closed form agrees with
// the k-counting version to within 2/n at n = 10^4.
inline CriterionOutcome run_criterion_8() {
  CriterionOutcome out;
  out.id = 8;

  ExperimentReport rep;
  rep.name = "good-cut-formula";
  detail::put(rep, "n", "10000");

  const std::uint32_t n = 10000;
  bool ok = true;
  double worst = 0.0;
  for (double D : {1.0, 2.0, 4.0}) {
    for (double t : {0.0, 0.5, 1.0}) {
      const double eps = 1.0 - t / (8.0 * D);
      const GoodCutModel model = good_cut_probability(D, eps);
      const double counted = good_cut_count(D, eps, n);
      const double gap = std::abs(model.value - counted);
      worst = std::max(worst, gap);
      TrialRecord trial;
      trial.seed = static_cast<std::uint64_t>(D * 10 + t * 2);
      trial.success = model.valid && gap <= 2.0 / n;
      ok = ok && trial.success;
      rep.trials.push_back(trial);
    }
  }
  rep.recompute();
  detail::put(rep, "worst_gap", worst, 6);

  out.passed = ok;
  out.detail = "9 (D, eps) grid points, worst |formula - count/n| = " +
               detail::fmt(worst, 6) + " (<= " + detail::fmt(2.0 / n, 6) + ")";
  out.reports.push_back(std::move(rep));
  return out;
}

// --- Criterion 9: popularity estimates vs the closed form --------------------
// n = 100 with 4,000 Monte Carlo cuts: every object's inside-frequency is
// within 0.05 of its exact popularity.  n = 30: the ordered-distinct-pair
// enumeration differs from the with-replacement closed form by exactly the
// documented correction (1 - phi) / (n - 1).
inline CriterionOutcome run_criterion_9() {
  const auto start = std::chrono::steady_clock::now();
  CriterionOutcome out;
  out.id = 9;

  ExperimentReport rep;
  rep.name = "popularity-agreement";
  detail::put(rep, "n", "100");
  detail::put(rep, "cuts", "4000");

  double worst = 0.0;
  {
    const std::uint32_t n = 100;
    const HiddenSpace s = make_torus_dataset(n, 2, 61);
    OracleSession session(s);
    const PopularityEstimate est = popularity_scores(session, 4000, 9);
    for (ObjectId u = 0; u < n; ++u) {
      const double gap = std::abs(
          static_cast<double>(est.y[u]) / 4000.0 - est.phi[u]);
      worst = std::max(worst, gap);
      TrialRecord trial;
      trial.seed = u;
      trial.questions = 0;
      trial.success = gap <= 0.05;
      rep.trials.push_back(trial);
    }
  }
  rep.recompute();
  detail::put(rep, "worst_gap", worst, 4);

  bool correction_ok = true;
  {
    const std::uint32_t n = 30;
    const HiddenSpace s = make_torus_dataset(n, 1, 62);
    const RankMatrix rm = detail::verification_matrix(s);
    for (ObjectId u = 0; u < n; ++u) {
      const double exact = phi_exact(rm, u);
      const double pairs = phi_exhaustive_pairs(rm, u);
      const double correction = (1.0 - exact) / (n - 1.0);
      if (std::abs((exact - pairs) - correction) > 1e-12)
        correction_ok = false;
    }
  }

  out.passed = worst <= 0.05 && correction_ok;
  out.detail = "max |Y/cuts - phi| = " + detail::fmt(worst, 4) +
               " (<= 0.05) over 100 objects; distinct-anchor correction " +
               (correction_ok ? "exact" : "VIOLATED") + " at n=30; " +
               detail::fmt(detail::seconds_since(start), 1) + 's';
  out.reports.push_back(std::move(rep));
  return out;
}

// --- Criterion 10: invariant sweep -------------------------------------------
// One compact re-run of each library-wide invariant: oracle determinism
// and ledger exactness, the ranking question bound, disorder witness
// minimality, annulus containment (exhaustive), rank diameter equality,
// cut soundness with the 4Dk diameter bound (exhaustive), tree depth, and
// byte-identical serialization of the three index formats.
inline CriterionOutcome run_criterion_10() {
  const auto start = std::chrono::steady_clock::now();
  CriterionOutcome out;
  out.id = 10;

  ExperimentReport rep;
  rep.name = "invariant-sweep";
  std::ostringstream msg;
  bool all = true;
  const auto record = [&](const std::string& name, bool ok) {
    TrialRecord t;
    t.seed = rep.trials.size();
    t.success = ok;
    rep.trials.push_back(t);
    detail::put(rep, name, ok ? "ok" : "FAILED");
    msg << name << (ok ? " ok; " : " FAILED; ");
    all = all && ok;
  };

  // Oracle determinism and ledger exactness.
  {
    const HiddenSpace s = make_torus_dataset(32, 1, 10);
    OracleSession a(s), b(s);
    Rng rng(77);
    bool ok = true;
    for (int t = 0; t < 500; ++t) {
      const ObjectId q = static_cast<ObjectId>(rng.bounded(32));
      const ObjectId u = static_cast<ObjectId>(rng.bounded(32));
      const ObjectId v = static_cast<ObjectId>(rng.bounded(32));
      if (a.oracle_query(q, u, v) != b.oracle_query(q, u, v)) ok = false;
    }
    ok = ok && a.ledger().total() == 500 && b.ledger().total() == 500;
    record("oracle-determinism", ok);
  }

  // Per-row ranking question bound.
  {
    const std::uint32_t n = 64;
    const HiddenSpace s = make_torus_dataset(n, 2, 11);
    OracleSession session(s);
    bool ok = true;
    std::vector<ObjectId> rest;
    for (ObjectId i = 0; i < n; ++i) {
      rest.clear();
      for (ObjectId j = 0; j < n; ++j)
        if (j != i) rest.push_back(j);
      const std::uint64_t before = session.ledger().total();
      rank_objects(session, i, rest);
      if (session.ledger().total() - before > insertion_question_bound(n - 1))
        ok = false;
    }
    record("ranking-question-bound", ok);
  }

  // Disorder witness minimality: one ulp below D fails the witness.
  {
    const HiddenSpace s = make_torus_dataset(40, 1, 12);
    const RankMatrix rm = detail::verification_matrix(s);
    const DisorderResult res = disorder_constant(rm);
    const DisorderWitness& w = res.witnesses[res.binding];
    const double num = static_cast<double>(w.num);
    const double den = static_cast<double>(w.den);
    bool ok = num <= res.D * den && num > std::nextafter(res.D, 0.0) * den;
    // The witness must be a genuine matrix triple.
    ok = ok && w.num == rm.at(w.x, w.y);
    record("disorder-witness-minimality", ok);
  }

  // Annulus containment, exhaustive at n = 128.
  {
    const std::uint32_t n = 128;
    const HiddenSpace s = make_torus_dataset(n, 2, 13);
    const RankMatrix rm = detail::verification_matrix(s);
    const double D = disorder_constant(rm).D;
    bool ok = true;
    for (ObjectId x = 0; x < n && ok; ++x)
      for (ObjectId u = 0; u < n && ok; ++u) {
        if (u == x) continue;
        const std::uint32_t j = rm.at(x, u);
        for (ObjectId y = 0; y < n; ++y) {
          if (y == x) continue;
          const std::uint64_t zeta = rm.at(u, y) + 1;
          const auto [lo, hi] = annulus_bounds(j, zeta, D);
          const std::uint64_t r = rm.at(x, y);
          if (r < lo || r > hi) {
            ok = false;
            break;
          }
        }
      }
    record("annulus-containment", ok);
  }

  // Rank diameter: 2(n-1) with equality on a symmetric metric.
  {
    const std::uint32_t n = 48;
    const HiddenSpace s = make_torus_dataset(n, 2, 14);
    const RankMatrix rm = detail::verification_matrix(s);
    std::vector<ObjectId> all(n);
    for (ObjectId u = 0; u < n; ++u) all[u] = u;
    bool ok = rank_diameter(rm, all) == 2 * (n - 1);
    std::vector<ObjectId> half;
    for (ObjectId u = 0; u < n; u += 2) half.push_back(u);
    ok = ok && rank_diameter(rm, half) <= 2 * (half.size() - 1);
    record("rank-diameter", ok);
  }

  // Cut soundness and the 4Dk diameter bound, exhaustive at n = 128.
  {
    const std::uint32_t n = 128;
    const HiddenSpace s = make_torus_dataset(n, 2, 63);
    const RankMatrix rm = detail::verification_matrix(s);
    const double D = disorder_constant(rm).D;
    OracleSession session(s);
    std::vector<ObjectId> all(n);
    for (ObjectId u = 0; u < n; ++u) all[u] = u;
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 10 && ok; ++seed) {
      const std::uint64_t before = session.ledger().total();
      const CutResult cut = rank_ball_cut(session, all, seed);
      ok = ok && session.ledger().total() - before == n - 2;
      ok = ok && cut.k == cut.s0.size();
      ok = ok && cut.k == rm.at(cut.x1, cut.x2);
      for (ObjectId u : cut.s0) ok = ok && rm.at(cut.x1, u) < cut.k;
      for (ObjectId u : cut.s1) ok = ok && rm.at(cut.x1, u) >= cut.k;
      ok = ok && rank_diameter(rm, cut.s0) <= 4.0 * D * cut.k;
    }
    record("cut-soundness-4Dk", ok);
  }

  // Tree depth stays within 10 log2 n over 50 seeds.
  {
    const std::uint32_t n = 256;
    const HiddenSpace s = make_torus_dataset(n, 1, 15);
    OracleSession session(s);
    std::vector<ObjectId> all(n);
    for (ObjectId u = 0; u < n; ++u) all[u] = u;
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const BinTree tree = build_tree(session, all, 1, 200, seed);
      if (tree.depth > 80) ok = false;  // 10 * log2(256)
    }
    record("tree-depth", ok);
  }

  // Serialization round trips, byte-identical, for all three index kinds.
  {
    bool ok = true;
    const auto bytes_match = [](const auto& obj) {
      std::ostringstream first(std::ios::binary);
      obj.save(first);
      std::istringstream mid(first.str(), std::ios::binary);
      const auto back =
          std::remove_reference_t<decltype(obj)>::load(mid);
      std::ostringstream second(std::ios::binary);
      back.save(second);
      return first.str() == second.str();
    };
    {
      const HiddenSpace s = make_torus_dataset(40, 1, 204);
      OracleSession session(s);
      BuildConfig cfg;
      cfg.D = 4.0;
      cfg.a = 1.0;
      cfg.seed = 11;
      ok = ok && bytes_match(build_hier_index_retrying(session, cfg));
    }
    {
      const HiddenSpace s = make_torus_dataset(32, 2, 205);
      OracleSession session(s);
      ok = ok && bytes_match(learn_annulus(session, 6, 13));
    }
    {
      const HiddenSpace s = make_torus_dataset(50, 1, 206);
      RshParams prm;
      prm.n = 50;
      prm.r = 6;
      prm.epsilon = 1.0;
      prm.bits = 5;
      prm.tables = 4;
      OracleSession session(s);
      ok = ok && bytes_match(build_rsh_tables(session, prm, 77));
    }
    record("index-serialization", ok);
  }

  rep.recompute();
  out.passed = all;
  out.detail = msg.str() + detail::fmt(detail::seconds_since(start), 1) + 's';
  out.reports.push_back(std::move(rep));
  return out;
}

inline constexpr int kCriterionCount = 10;

inline CriterionOutcome run_criterion(int id) {
  switch (id) {
    case 1: return run_criterion_1();
    case 2: return run_criterion_2();
    case 3: return run_criterion_3();
    case 4: return run_criterion_4();
    case 5: return run_criterion_5();
    case 6: return run_criterion_6();
    case 7: return run_criterion_7();
    case 8: return run_criterion_8();
    case 9: return run_criterion_9();
    case 10: return run_criterion_10();
    default: throw std::invalid_argument("criterion id must be in 1..10");
  }
}

}  // namespace ranknn
