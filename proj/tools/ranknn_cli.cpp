// ranknn_cli: command-line front end for the rank-based search library.
//
// Subcommands cover dataset generation, rank/disorder/distortion analysis,
// the three index lifecycles (hier, annulus, rsh), tree/popularity tools, a
// distortion benchmark, and the acceptance suite runner.
//
// Exit codes: 0 success, 2 invalid arguments or unreadable input, 1
// algorithmic failure (build/search/parameterization) with a diagnostic
// JSON on stdout.
//
// Access discipline: every subcommand works through a concealed
// OracleSession (comparison questions only, all counted).  Hidden
// coordinates/distances are consulted only under an explicit --verify
// flag, and any output produced that way carries "verify": true.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <ranknn/annulus.hpp>
#include <ranknn/bintree.hpp>
#include <ranknn/common.hpp>
#include <ranknn/disorder.hpp>
#include <ranknn/distortion.hpp>
#include <ranknn/experiments.hpp>
#include <ranknn/hidden_space.hpp>
#include <ranknn/hier_index.hpp>
#include <ranknn/oracle.hpp>
#include <ranknn/rank_matrix.hpp>
#include <ranknn/rsh.hpp>

using nlohmann::json;
using namespace ranknn;

namespace {

std::string g_invocation;  // exact argv join, embedded in every output

void emit(const json& result, bool as_json) {
  if (as_json) {
    std::cout << result.dump(2) << '\n';
    return;
  }
  for (const auto& [key, value] : result.items()) {
    if (key == "invocation") continue;
    std::cout << key << ": "
              << (value.is_string() ? value.get<std::string>() : value.dump())
              << '\n';
  }
}

json base_result() {
  json j;
  j["invocation"] = g_invocation;
  return j;
}

void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream of(path, std::ios::binary);
  if (!of) throw IoError("cannot open " + path + " for writing");
  of << body;
}

std::string csv_provenance(std::uint64_t seed) {
  std::ostringstream os;
  os << "# invocation: " << g_invocation << "\n# seed: " << seed << '\n';
  return os.str();
}

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> coords;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    coords.push_back(std::stod(tok, &used));
    if (used != tok.size())
      throw std::invalid_argument("bad coordinate '" + tok + "'");
  }
  if (coords.empty()) throw std::invalid_argument("empty query point");
  return coords;
}

// Registers q as the session's external query; validates dimensions and
// point-kind up front so the errors surface as argument problems.
void register_point(OracleSession& session, const HiddenSpace& s,
                    const std::vector<double>& coords) {
  if (s.kind() == SpaceKind::explicit_matrix)
    throw std::invalid_argument(
        "external point queries need a point-kind space; use --object");
  if (coords.size() != s.dim())
    throw std::invalid_argument("query point has " +
                                std::to_string(coords.size()) +
                                " coordinates, space has dimension " +
                                std::to_string(s.dim()));
  session.register_query(coords);
}

RankMatrix oracle_rank_matrix(OracleSession& session) {
  return compute_rank_matrix(session, RankMode::oracle);
}

// The true 1-based rank of `winner` in the query's view.  Touches hidden
// distances, so callers gate it behind --verify.
std::int64_t verified_rank(const HiddenSpace& s,
                           const std::vector<double>& coords,
                           ObjectId winner) {
  std::vector<double> qrow(s.size());
  for (ObjectId v = 0; v < s.size(); ++v)
    qrow[v] = s.point_distance(coords.data(), v);
  return query_view_ranks(qrow)[winner];
}

struct Options {
  // shared
  std::string in, out, index;
  std::uint64_t seed = 1;
  bool as_json = false;
  bool verify = false;
  // gen
  std::string kind = "torus";
  std::uint32_t n = 0, dim = 1, alpha = 4, spb = 4;
  // disorder
  std::uint32_t max_n = 2048;
  // distortion / rsh fit
  std::uint32_t anchors = 50;
  // hier
  double D = 0.0, a = 2.0;
  std::uint32_t retries = 8, stop_level = 0;
  // query
  std::string query;
  std::int64_t object = -1;
  // annulus
  std::uint32_t m = 16;
  std::uint64_t R = 0;
  double multiplier = 4.0;
  std::uint64_t search_seed = 1;
  // tree
  std::uint32_t min_leaf = 1, max_depth = 64;
  // popularity
  std::uint64_t cuts = 4000;
  // rsh
  std::uint32_t r = 0;
  double eps = 1.0;
  std::uint32_t local_rank = 0;  // 0: defaults to r
  double local_scale = 2.0;
  bool global_fit = false;
  std::uint32_t queries = 0;
  std::uint64_t query_seed = 1;
  // suite
  std::string config;
};

int run_gen(const Options& o) {
  HiddenSpace s;
  if (o.kind == "torus") {
    if (o.n < 1 || o.dim < 1)
      throw std::invalid_argument("gen --kind torus needs --n >= 1, --d >= 1");
    s = make_torus_dataset(o.n, o.dim, o.seed);
  } else if (o.kind == "line") {
    if (o.n < 1) throw std::invalid_argument("gen --kind line needs --n >= 1");
    Rng rng(o.seed);
    std::vector<double> pts(o.n);
    for (double& p : pts) p = rng.unit();
    s = make_line_space(pts);
  } else if (o.kind == "star") {
    s = make_star_graph(o.alpha, o.spb, o.seed).space;
  } else {
    throw std::invalid_argument("unknown --kind '" + o.kind +
                                "' (torus|line|star)");
  }
  if (o.out.empty()) throw std::invalid_argument("gen needs --out");
  s.save_file(o.out);

  json res = base_result();
  res["kind"] = o.kind;
  res["n"] = s.size();
  res["dim"] = s.dim();
  res["seed"] = o.seed;
  res["out"] = o.out;
  emit(res, o.as_json);
  return 0;
}

int run_ranks(const Options& o) {
  const HiddenSpace s = HiddenSpace::load_file(o.in);
  if (o.out.empty()) throw std::invalid_argument("ranks needs --out");
  OracleSession session(s, !o.verify);
  const RankMatrix rm = compute_rank_matrix(
      session, o.verify ? RankMode::direct : RankMode::oracle);
  std::ostringstream csv;
  rank_matrix_to_csv(rm, csv);
  write_text_file(o.out, csv.str());

  json res = base_result();
  res["n"] = s.size();
  res["questions"] = session.ledger().total();
  res["out"] = o.out;
  if (o.verify) res["verify"] = true;
  emit(res, o.as_json);
  return 0;
}

int run_disorder(const Options& o) {
  const HiddenSpace s = HiddenSpace::load_file(o.in);
  if (s.size() > o.max_n) {
    std::cerr << "disorder: the O(n^3) witness scan is capped at --max-n "
              << o.max_n << " objects and the input has " << s.size()
              << "; raise --max-n to proceed\n";
    return 2;
  }
  OracleSession session(s);
  const RankMatrix rm = oracle_rank_matrix(session);
  const DisorderResult dres = disorder_constant(rm);
  const DisorderWitness& w = dres.witnesses[dres.binding];

  json res = base_result();
  res["n"] = s.size();
  res["D"] = dres.D;
  res["questions"] = session.ledger().total();
  res["witness"] = {{"inequality", w.inequality}, {"x", w.x}, {"y", w.y},
                    {"z", w.z},                   {"num", w.num},
                    {"den", w.den}};
  emit(res, o.as_json);
  return 0;
}

int run_distortion(const Options& o, bool require_out) {
  const HiddenSpace s = HiddenSpace::load_file(o.in);
  if (require_out && o.out.empty())
    throw std::invalid_argument("bench distortion needs --out");
  OracleSession session(s);
  const RankMatrix rm = oracle_rank_matrix(session);
  const DistortionFit fit = distortion_fit(rm, o.anchors, o.seed);
  if (!o.out.empty()) {
    std::ostringstream csv;
    distortion_to_csv(fit, csv);
    write_text_file(o.out, csv_provenance(o.seed) + csv.str());
  }

  // Worst consecutive step ratio of the window-5 smoothed per-rank means;
  // >= 1 means monotone non-decreasing after smoothing.
  std::vector<double> means;
  for (const DistortionBucket& b : fit.buckets) means.push_back(b.mean);
  double worst = 1e300;
  for (std::size_t i = 0; i + 1 < means.size(); ++i) {
    double lo_acc = 0, hi_acc = 0;
    int lo_cnt = 0, hi_cnt = 0;
    for (int k = -2; k <= 2; ++k) {
      const std::int64_t ja = static_cast<std::int64_t>(i) + k;
      const std::int64_t jb = ja + 1;
      if (ja >= 0 && ja < static_cast<std::int64_t>(means.size())) {
        lo_acc += means[ja];
        ++lo_cnt;
      }
      if (jb >= 0 && jb < static_cast<std::int64_t>(means.size())) {
        hi_acc += means[jb];
        ++hi_cnt;
      }
    }
    worst = std::min(worst, (hi_acc / hi_cnt) / (lo_acc / lo_cnt));
  }

  json res = base_result();
  res["n"] = s.size();
  res["anchors"] = o.anchors;
  res["seed"] = o.seed;
  res["c"] = fit.c;
  res["gamma"] = fit.gamma;
  res["buckets"] = fit.buckets.size();
  res["worst_smoothed_step_ratio"] = worst;
  res["questions"] = session.ledger().total();
  if (!o.out.empty()) res["out"] = o.out;
  emit(res, o.as_json);
  return 0;
}

int run_build_hier(const Options& o) {
  const HiddenSpace s = HiddenSpace::load_file(o.in);
  if (o.out.empty()) throw std::invalid_argument("build-hier needs --out");
  if (o.D < 1.0)
    throw std::invalid_argument("build-hier needs --D >= 1 "
                                "(measure it with the disorder subcommand)");
  BuildConfig cfg;
  cfg.D = o.D;
  cfg.a = o.a;
  cfg.seed = o.seed;
  OracleSession session(s);
  const HierIndex idx = build_hier_index_retrying(session, cfg, o.retries);
  std::ofstream of(o.out, std::ios::binary);
  if (!of) throw IoError("cannot open " + o.out + " for writing");
  idx.save(of);

  json res = base_result();
  res["n"] = s.size();
  res["levels"] = idx.L;
  res["kappa"] = idx.kappa;
  res["build_questions"] = idx.build_ledger.total();
  res["out"] = o.out;
  emit(res, o.as_json);
  return 0;
}

int run_query_hier(const Options& o) {
  const HiddenSpace s = HiddenSpace::load_file(o.in);
  if (o.index.empty()) throw std::invalid_argument("query-hier needs --index");
  std::ifstream in(o.index, std::ios::binary);
  if (!in) throw IoError("cannot open " + o.index);
  const HierIndex idx = HierIndex::load(in);

  OracleSession session(s);
  ObjectId q = kQueryPoint;
  std::vector<double> coords;
  if (!o.query.empty()) {
    coords = parse_point(o.query);
    register_point(session, s, coords);
  } else if (o.object >= 0) {
    q = static_cast<ObjectId>(o.object);
    if (q >= s.size()) throw std::invalid_argument("--object out of range");
  } else {
    throw std::invalid_argument("query-hier needs --query or --object");
  }

  const std::uint32_t stop = o.stop_level ? o.stop_level : idx.L;
  const ObjectId winner = search_hier_rnn(session, idx, q, stop);

  json res = base_result();
  res["winner"] = winner;
  res["stop_level"] = stop;
  res["questions"] = session.ledger().snapshot().search;
  if (o.verify && !coords.empty()) {
    res["verify"] = true;
    res["winner_rank"] = verified_rank(s, coords, winner);
  }
  emit(res, o.as_json);
  return 0;
}

int run_annulus(const Options& o) {
  const HiddenSpace s = HiddenSpace::load_file(o.in);
  OracleSession session(s);
  const AnnulusIndex idx = learn_annulus(session, o.m, o.seed);
  if (!o.out.empty()) {
    std::ofstream of(o.out, std::ios::binary);
    if (!of) throw IoError("cannot open " + o.out + " for writing");
    idx.save(of);
  }

  json res = base_result();
  res["n"] = s.size();
  res["m"] = o.m;
  res["learn_questions"] = idx.learn_ledger.total();
  if (!o.out.empty()) res["out"] = o.out;

  if (!o.query.empty() || o.object >= 0) {
    if (o.R < 1 || o.D < 1.0)
      throw std::invalid_argument("annulus search needs --R >= 1 and --D >= 1");
    ObjectId q = kQueryPoint;
    std::vector<double> coords;
    if (!o.query.empty()) {
      coords = parse_point(o.query);
      register_point(session, s, coords);
    } else {
      q = static_cast<ObjectId>(o.object);
      if (q >= s.size()) throw std::invalid_argument("--object out of range");
    }
    const AnnulusResult ares =
        search_annulus(session, idx, q, o.R, o.D, o.search_seed, o.multiplier);
    res["winner"] = ares.winner;
    res["trace"] = {{"x", ares.trace.x},
                    {"j_prime", ares.trace.j_prime},
                    {"lo", ares.trace.lo},
                    {"hi", ares.trace.hi},
                    {"draws", ares.trace.draws.size()},
                    {"questions", ares.trace.questions},
                    {"empty_annulus", ares.trace.empty_annulus},
                    {"exhausted", ares.trace.exhausted}};
    if (o.verify && !coords.empty()) {
      res["verify"] = true;
      res["winner_rank"] = verified_rank(s, coords, ares.winner);
    }
  }
  emit(res, o.as_json);
  return 0;
}

int run_tree(const Options& o) {
  const HiddenSpace s = HiddenSpace::load_file(o.in);
  OracleSession session(s);
  std::vector<ObjectId> all(s.size());
  for (ObjectId u = 0; u < s.size(); ++u) all[u] = u;
  const BinTree tree = build_tree(session, all, o.min_leaf, o.max_depth, o.seed);

  std::uint64_t leaves = 0;
  const auto count = [&](const auto& self, const TreeNode& node) -> void {
    if (node.is_leaf()) {
      ++leaves;
      return;
    }
    self(self, *node.left);
    self(self, *node.right);
  };
  count(count, *tree.root);

  json res = base_result();
  res["n"] = s.size();
  res["depth"] = tree.depth;
  res["leaves"] = leaves;
  res["min_leaf"] = o.min_leaf;
  res["max_depth"] = o.max_depth;
  res["seed"] = o.seed;
  res["questions"] = session.ledger().total();
  emit(res, o.as_json);
  return 0;
}

int run_popularity(const Options& o) {
  const HiddenSpace s = HiddenSpace::load_file(o.in);
  OracleSession session(s);
  const PopularityEstimate est = popularity_scores(session, o.cuts, o.seed);

  double worst = 0.0;
  std::ostringstream csv;
  csv << csv_provenance(o.seed) << "object,y,freq,phi\n";
  for (ObjectId u = 0; u < s.size(); ++u) {
    const double freq = static_cast<double>(est.y[u]) / est.cuts;
    worst = std::max(worst, std::abs(freq - est.phi[u]));
    csv << u << ',' << est.y[u] << ',' << freq << ',' << est.phi[u] << '\n';
  }
  if (!o.out.empty()) write_text_file(o.out, csv.str());

  json res = base_result();
  res["n"] = s.size();
  res["cuts"] = est.cuts;
  res["max_gap"] = worst;
  res["top"] = std::vector<ObjectId>(
      est.ranking.begin(),
      est.ranking.begin() + std::min<std::size_t>(5, est.ranking.size()));
  res["questions"] = session.ledger().total();
  if (!o.out.empty()) res["out"] = o.out;
  emit(res, o.as_json);
  return 0;
}

int run_rsh(const Options& o) {
  const HiddenSpace s = HiddenSpace::load_file(o.in);
  if (o.r < 1) throw std::invalid_argument("rsh needs --r >= 1");
  OracleSession session(s);
  const RankMatrix rm = oracle_rank_matrix(session);
  DistortionFit fit = distortion_fit(rm, o.anchors, o.seed);
  if (!o.global_fit) {
    const std::uint32_t at = o.local_rank ? o.local_rank : o.r;
    fit = local_linear_fit(fit, at, o.local_scale);
  }
  const RshParams prm = derive_params(s.size(), o.r, o.eps, fit);
  const RshTableSet set = build_rsh_tables(session, prm, derive_seed(o.seed, 1));
  if (!o.out.empty()) {
    std::ofstream of(o.out, std::ios::binary);
    if (!of) throw IoError("cannot open " + o.out + " for writing");
    set.save(of);
  }

  json res = base_result();
  res["n"] = s.size();
  res["r"] = prm.r;
  res["eps"] = prm.epsilon;
  res["c"] = prm.c;
  res["gamma"] = prm.gamma;
  res["p"] = prm.p;
  res["P"] = prm.P;
  res["theta"] = prm.theta;
  res["bits"] = prm.bits;
  res["tables"] = prm.tables;
  res["build_questions"] = set.build_ledger.total();
  if (!o.out.empty()) res["out"] = o.out;

  if (o.queries > 0) {
    if (s.kind() == SpaceKind::explicit_matrix)
      throw std::invalid_argument(
          "rsh --queries draws random points and needs a point-kind space");
    const auto R = static_cast<std::uint32_t>(
        std::ceil((1.0 + prm.epsilon) * static_cast<double>(prm.r)));
    Rng rng(o.query_seed);
    std::uint64_t hits = 0, scanned = 0, questions = 0, found = 0;
    for (std::uint32_t t = 0; t < o.queries; ++t) {
      std::vector<double> coords(s.dim());
      for (double& x : coords) x = rng.unit();
      session.register_query(coords);
      const RshQueryResult qres = query_rsh(session, set, kQueryPoint, R);
      scanned += qres.trace.scanned;
      questions += qres.trace.questions;
      if (qres.winner) {
        ++found;
        if (o.verify && verified_rank(s, coords, *qres.winner) <=
                            static_cast<std::int64_t>(R))
          ++hits;
      }
    }
    res["queries"] = o.queries;
    res["R"] = R;
    res["returned"] = found;
    res["mean_scanned"] = static_cast<double>(scanned) / o.queries;
    res["mean_query_questions"] = static_cast<double>(questions) / o.queries;
    if (o.verify) {
      res["verify"] = true;
      res["success_rate"] = static_cast<double>(hits) / o.queries;
    }
  }
  emit(res, o.as_json);
  return 0;
}

int run_suite(const Options& o) {
  json cfg;
  {
    std::ifstream in(o.config);
    if (!in) {
      std::cerr << "suite: cannot open config " << o.config << '\n';
      return 2;
    }
    try {
      cfg = json::parse(in);
    } catch (const json::exception& e) {
      std::cerr << "suite: malformed config: " << e.what() << '\n';
      return 2;
    }
  }
  if (!cfg.is_object()) {
    std::cerr << "suite: config must be a JSON object\n";
    return 2;
  }
  std::vector<int> ids;
  if (cfg.contains("criteria")) {
    if (!cfg["criteria"].is_array()) {
      std::cerr << "suite: \"criteria\" must be an array of integers\n";
      return 2;
    }
    for (const json& v : cfg["criteria"]) {
      if (!v.is_number_integer() || v.get<int>() < 1 ||
          v.get<int>() > kCriterionCount) {
        std::cerr << "suite: criterion ids must be integers in 1.."
                  << kCriterionCount << '\n';
        return 2;
      }
      ids.push_back(v.get<int>());
    }
  } else {
    for (int i = 1; i <= kCriterionCount; ++i) ids.push_back(i);
  }
  const std::string out_dir =
      !o.out.empty() ? o.out : cfg.value("out", std::string("reports"));
  std::filesystem::create_directories(out_dir);

  json summary = base_result();
  summary["suite"] = cfg.value("name", std::string("acceptance"));
  summary["criteria"] = json::array();
  bool all_ok = true;
  for (int id : ids) {
    const CriterionOutcome res = run_criterion(id);
    std::cout << (res.passed ? "[PASS]" : "[FAIL]") << " criterion " << id
              << ": " << res.detail << '\n';
    std::cout.flush();
    all_ok = all_ok && res.passed;
    json entry = {{"id", id}, {"passed", res.passed}, {"detail", res.detail}};
    entry["reports"] = json::array();
    for (const ExperimentReport& rep : res.reports) {
      const std::string path = out_dir + "/" + rep.name + ".json";
      std::ofstream of(path);
      rep.write_json(of);
      entry["reports"].push_back(path);
    }
    summary["criteria"].push_back(entry);
  }
  summary["all_passed"] = all_ok;
  {
    std::ofstream of(out_dir + "/summary.json");
    of << summary.dump(2) << '\n';
  }
  std::cout << (all_ok ? "suite: all criteria passed\n"
                       : "suite: at least one criterion failed\n");
  return all_ok ? 0 : 1;
}

int run_command(const std::vector<std::string>& argv) {
  g_invocation = "ranknn_cli";
  for (const std::string& a : argv) g_invocation += ' ' + a;

  CLI::App app{"rank-based nearest-neighbor search toolkit"};
  app.require_subcommand(1);
  Options o;

  CLI::App* gen = app.add_subcommand("gen", "generate a dataset file");
  gen->add_option("--kind", o.kind, "torus|line|star")->capture_default_str();
  gen->add_option("--n", o.n, "object count (torus, line)");
  gen->add_option("--d", o.dim, "dimension (torus)")->capture_default_str();
  gen->add_option("--alpha", o.alpha, "star branching")->capture_default_str();
  gen->add_option("--spb", o.spb, "star supernodes per branch")
      ->capture_default_str();
  gen->add_option("--seed", o.seed, "generation seed")->capture_default_str();
  gen->add_option("--out", o.out, "output dataset file")->required();

  CLI::App* ranks = app.add_subcommand("ranks", "emit the rank matrix as CSV");
  ranks->add_option("--in", o.in, "dataset file")->required();
  ranks->add_option("--out", o.out, "output CSV")->required();
  ranks->add_flag("--verify", o.verify,
                  "rank via hidden distances instead of oracle questions");
  ranks->add_flag("--json", o.as_json, "JSON result on stdout");

  CLI::App* dis = app.add_subcommand("disorder",
                                     "exact disorder constant with witness");
  dis->add_option("--in", o.in, "dataset file")->required();
  dis->add_option("--max-n", o.max_n, "size cap for the O(n^3) scan")
      ->capture_default_str();
  dis->add_flag("--json", o.as_json, "JSON result on stdout");

  CLI::App* dist = app.add_subcommand("distortion",
                                      "rank-to-L1 distortion curve");
  dist->add_option("--in", o.in, "dataset file")->required();
  dist->add_option("--anchors", o.anchors, "anchor count")
      ->capture_default_str();
  dist->add_option("--seed", o.seed, "anchor seed")->capture_default_str();
  dist->add_option("--out", o.out, "output CSV (optional)");
  dist->add_flag("--json", o.as_json, "JSON result on stdout");

  CLI::App* bh = app.add_subcommand("build-hier", "build the level index");
  bh->add_option("--in", o.in, "dataset file")->required();
  bh->add_option("--D", o.D, "disorder constant to size levels")->required();
  bh->add_option("--a", o.a, "oversampling factor")->capture_default_str();
  bh->add_option("--seed", o.seed, "build seed")->capture_default_str();
  bh->add_option("--retries", o.retries, "build attempts before giving up")
      ->capture_default_str();
  bh->add_option("--out", o.out, "output index file")->required();
  bh->add_flag("--json", o.as_json, "JSON result on stdout");

  CLI::App* qh = app.add_subcommand("query-hier", "search the level index");
  qh->add_option("--in", o.in, "dataset file")->required();
  qh->add_option("--index", o.index, "index file")->required();
  qh->add_option("--query", o.query, "external point, comma-separated");
  qh->add_option("--object", o.object, "database object id as query");
  qh->add_option("--stop-level", o.stop_level, "0 = deepest")
      ->capture_default_str();
  qh->add_flag("--verify", o.verify, "report the winner's true rank");
  qh->add_flag("--json", o.as_json, "JSON result on stdout");

  CLI::App* ann = app.add_subcommand("annulus",
                                     "learn reference rankings; optional search");
  ann->add_option("--in", o.in, "dataset file")->required();
  ann->add_option("--m", o.m, "reference sample size")->capture_default_str();
  ann->add_option("--seed", o.seed, "learn seed")->capture_default_str();
  ann->add_option("--out", o.out, "save the learned index (optional)");
  ann->add_option("--query", o.query, "external point, comma-separated");
  ann->add_option("--object", o.object, "database object id as query");
  ann->add_option("--R", o.R, "target rank slack");
  ann->add_option("--D", o.D, "disorder estimate");
  ann->add_option("--multiplier", o.multiplier, "draw budget multiplier")
      ->capture_default_str();
  ann->add_option("--search-seed", o.search_seed, "draw seed")
      ->capture_default_str();
  ann->add_flag("--verify", o.verify, "report the winner's true rank");
  ann->add_flag("--json", o.as_json, "JSON result on stdout");

  CLI::App* tree = app.add_subcommand("tree", "build a rank-cut tree");
  tree->add_option("--in", o.in, "dataset file")->required();
  tree->add_option("--min-leaf", o.min_leaf, "leaf size floor")
      ->capture_default_str();
  tree->add_option("--max-depth", o.max_depth, "depth cap")
      ->capture_default_str();
  tree->add_option("--seed", o.seed, "cut seed")->capture_default_str();
  tree->add_flag("--json", o.as_json, "JSON result on stdout");

  CLI::App* pop = app.add_subcommand("popularity",
                                     "Monte Carlo cut popularity vs exact");
  pop->add_option("--in", o.in, "dataset file")->required();
  pop->add_option("--cuts", o.cuts, "Monte Carlo cut count")
      ->capture_default_str();
  pop->add_option("--seed", o.seed, "cut seed")->capture_default_str();
  pop->add_option("--out", o.out, "per-object CSV (optional)");
  pop->add_flag("--json", o.as_json, "JSON result on stdout");

  CLI::App* rsh = app.add_subcommand("rsh", "parameterize and build hash tables");
  rsh->add_option("--in", o.in, "dataset file")->required();
  rsh->add_option("--r", o.r, "target rank")->required();
  rsh->add_option("--eps", o.eps, "approximation slack")->capture_default_str();
  rsh->add_option("--anchors", o.anchors, "distortion fit anchors")
      ->capture_default_str();
  rsh->add_option("--seed", o.seed, "fit/build seed")->capture_default_str();
  rsh->add_option("--local-rank", o.local_rank,
                  "two-point linearization rank (0 = --r)");
  rsh->add_option("--local-scale", o.local_scale, "far/near rank ratio")
      ->capture_default_str();
  rsh->add_flag("--global-fit", o.global_fit,
                "use the raw fit instead of the local linearization");
  rsh->add_option("--out", o.out, "save the table set (optional)");
  rsh->add_option("--queries", o.queries, "random external queries to run");
  rsh->add_option("--query-seed", o.query_seed, "query point seed")
      ->capture_default_str();
  rsh->add_flag("--verify", o.verify, "report the true success rate");
  rsh->add_flag("--json", o.as_json, "JSON result on stdout");

  CLI::App* bench = app.add_subcommand("bench", "measurement drivers");
  bench->require_subcommand(1);
  CLI::App* bdist = bench->add_subcommand("distortion",
                                          "emit the distortion curve CSV");
  bdist->add_option("--in", o.in, "dataset file")->required();
  bdist->add_option("--anchors", o.anchors, "anchor count")
      ->capture_default_str();
  bdist->add_option("--seed", o.seed, "anchor seed")->capture_default_str();
  bdist->add_option("--out", o.out, "output CSV")->required();
  bdist->add_flag("--json", o.as_json, "JSON result on stdout");

  CLI::App* suite = app.add_subcommand("suite", "run the acceptance suite");
  suite->add_option("--config", o.config, "suite config JSON")->required();
  suite->add_option("--out", o.out, "report directory (overrides config)");

  try {
    std::vector<std::string> args(argv.rbegin(), argv.rend());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message and usage hint
    return 2;
  }

  try {
    if (gen->parsed()) return run_gen(o);
    if (ranks->parsed()) return run_ranks(o);
    if (dis->parsed()) return run_disorder(o);
    if (dist->parsed()) return run_distortion(o, false);
    if (bh->parsed()) return run_build_hier(o);
    if (qh->parsed()) return run_query_hier(o);
    if (ann->parsed()) return run_annulus(o);
    if (tree->parsed()) return run_tree(o);
    if (pop->parsed()) return run_popularity(o);
    if (rsh->parsed()) return run_rsh(o);
    if (bench->parsed() && bdist->parsed()) return run_distortion(o, true);
    if (suite->parsed()) return run_suite(o);
  } catch (const BuildFailure& e) {
    json diag = base_result();
    diag["error"] = "build-failure";
    diag["object"] = e.object;
    diag["level"] = e.level;
    diag["message"] = e.what();
    std::cout << diag.dump(2) << '\n';
    return 1;
  } catch (const SearchFailure& e) {
    json diag = base_result();
    diag["error"] = "search-failure";
    diag["level"] = e.level;
    diag["message"] = e.what();
    std::cout << diag.dump(2) << '\n';
    return 1;
  } catch (const ParameterizationError& e) {
    json diag = base_result();
    diag["error"] = "parameterization";
    diag["message"] = e.what();
    std::cout << diag.dump(2) << '\n';
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const StateError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    json diag = base_result();
    diag["error"] = "internal";
    diag["message"] = e.what();
    std::cout << diag.dump(2) << '\n';
    return 1;
  }
  return 2;  // unreachable with require_subcommand(1)
}

}  // namespace

int main(int argc, char** argv) {
  return run_command(std::vector<std::string>(argv + 1, argv + argc));
}
