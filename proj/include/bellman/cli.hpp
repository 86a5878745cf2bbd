#pragma once

#include "bellman/closed_form.hpp"
#include "bellman/envelope_dp.hpp"
#include "bellman/json_io.hpp"
#include "bellman/parallel.hpp"
#include "bellman/rational.hpp"
#include "bellman/weighted_dp.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace bellman::cli {

inline constexpr char const* kVersion = "v0.1.0";

enum ExitCode : int { kOk = 0, kViolations = 1, kUsage = 2 };

/// A usage or configuration problem detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ties a CLI option to a key of the subcommand's config-file section.
/// Explicit flags win over the config file, which wins over the default.
class Bindings {
 public:
  template <typename V>
  CLI::Option* option(CLI::App* app, std::string const& flags, std::string const& key, V& var, std::string const& help) {
    CLI::Option* opt = app->add_option(flags, var, help)->capture_default_str();
    add(opt, key, var);
    return opt;
  }

  CLI::Option* flag(CLI::App* app, std::string const& flags, std::string const& key, bool& var, std::string const& help) {
    CLI::Option* opt = app->add_flag(flags, var, help);
    add(opt, key, var);
    return opt;
  }

  /// Applies config values for options absent from the command line; returns the resolved parameters.
  Json resolve(Json const& section) const {
    Json resolved = Json::object();
    for (auto const& b : entries_) {
      if (b.opt->count() == 0 && section.is_object() && section.contains(b.key)) {
        try {
          b.load(section.at(b.key));
        } catch (nlohmann::json::exception const& e) {
          throw UsageError("config key '" + b.key + "': " + e.what());
        }
      }
      resolved[b.key] = b.dump();
    }
    if (section.is_object())
      for (auto const& [k, v] : section.items()) {
        bool known = false;
        for (auto const& b : entries_) known = known || b.key == k;
        if (!known) throw UsageError("unknown config key '" + k + "'");
      }
    return resolved;
  }

 private:
  struct Entry {
    CLI::Option* opt;
    std::string key;
    std::function<void(Json const&)> load;
    std::function<Json()> dump;
  };

  template <typename V>
  void add(CLI::Option* opt, std::string const& key, V& var) {
    entries_.push_back({opt, key, [&var](Json const& j) { var = j.get<V>(); }, [&var] { return Json(var); }});
  }

  std::vector<Entry> entries_;
};

inline std::vector<std::string> split_list(std::string const& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

inline Rational parse_rational_arg(std::string const& text, std::string const& what) {
  try {
    return parse_rational(text);
  } catch (std::invalid_argument const& e) {
    throw UsageError(what + ": " + e.what());
  }
}

inline std::vector<double> parse_double_list(std::string const& text, std::string const& what) {
  std::vector<double> out;
  for (auto const& s : split_list(text)) out.push_back(to_double(parse_rational_arg(s, what)));
  if (out.empty()) throw UsageError(what + ": empty list");
  return out;
}

/// "N1xN3xN4" with N1 == N3 (the (x1, x3) grid is a wedge on a square).
inline std::array<std::size_t, 3> parse_weighted_grid(std::string const& text) {
  std::array<std::size_t, 3> g{};
  std::stringstream ss(text);
  std::string part;
  std::size_t k = 0;
  while (std::getline(ss, part, 'x')) {
    if (k == 3) throw UsageError("grid must be N1xN3xN4");
    try {
      std::size_t used = 0;
      g[k] = std::stoul(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (std::exception const&) {
      throw UsageError("grid must be N1xN3xN4, got '" + text + "'");
    }
    ++k;
  }
  if (k != 3) throw UsageError("grid must be N1xN3xN4, got '" + text + "'");
  if (g[0] != g[1]) throw UsageError("grid needs N1 == N3");
  if (g[0] < 2 || g[2] < 2) throw UsageError("grid needs at least two nodes per axis");
  return g;
}

/// Output paths are left out so that a report's bytes depend only on what was computed.
inline Json make_report(std::string const& command, Json resolved, Json results, Json violations) {
  for (char const* key : {"out", "report", "witness"}) resolved.erase(key);
  Json cfg = {{"command", command}, {"parameters", resolved}};
  return {{"config_hash", fnv1a_hex(cfg.dump())},
          {"version", kVersion},
          {"command", command},
          {"parameters", resolved},
          {"results", std::move(results)},
          {"violations", std::move(violations)}};
}

inline void maybe_write(std::string const& path, std::string const& text) {
  if (!path.empty()) write_text_file(path, text);
}

inline constexpr char const* kFloorNote =
    "R(Q) here is a certified lower bound from finite-depth dynamic programming; the explicit depth-2 "
    "construction already forces R(Q) >= (2Q-1)/2. The growth Q (log Q)^(1/3) / 515 of the weak-type "
    "constant concerns the exact supremum over unbounded depth and is not reproduced numerically.";

inline unsigned resolve_threads(unsigned flag_value, bool flag_given, Json const& config) {
  if (flag_given) return std::max(1U, flag_value);
  if (char const* env = std::getenv("BELLMAN_THREADS")) {
    try {
      return std::max(1U, static_cast<unsigned>(std::stoul(env)));
    } catch (std::exception const&) {
      throw UsageError(std::string("BELLMAN_THREADS is not a number: ") + env);
    }
  }
  if (config.contains("threads")) return std::max(1U, config.at("threads").get<unsigned>());
  return default_thread_count();
}

inline int run(int argc, char const* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Bellman-function experiments: closed forms, envelope dynamic programming, tree search."};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.set_version_flag("--version", kVersion);

  std::string config_path;
  unsigned threads_flag = 1;
  app.add_option("--config", config_path, "JSON file with per-subcommand sections");
  auto* threads_opt = app.add_option("--threads", threads_flag, "worker threads (env BELLMAN_THREADS)");

  // exact
  auto* exact = app.add_subcommand("exact", "closed-form Bellman function");
  exact->require_subcommand(1);
  auto* eval = exact->add_subcommand("eval", "evaluate B at (x1, x2, x3)");
  Bindings eval_b;
  std::string ex1 = "0", ex2 = "-1", ex3 = "0", form = "full";
  bool eval_exact = false;
  eval_b.option(eval, "--form", "form", form, "full: B(x1,x2,x3) | boundary: B(x1,x2,|x1|) | y: M(y1,y2,y3) read from --x1..--x3")
      ->check(CLI::IsMember({"full", "boundary", "y"}));
  eval_b.option(eval, "--x1", "x1", ex1, "rational or decimal");
  eval_b.option(eval, "--x2", "x2", ex2, "rational or decimal");
  eval_b.option(eval, "--x3", "x3", ex3, "rational or decimal");
  eval_b.flag(eval, "--exact", "exact", eval_exact, "print the exact rational value");

  auto* verify = exact->add_subcommand("verify", "sampled supersolution check of a candidate");
  Bindings verify_b;
  std::string candidate = "full";
  std::size_t pairs = 20000, boundary = 2000;
  std::uint64_t seed = 1;
  std::string verify_report;
  verify_b.option(verify, "--candidate", "candidate", candidate, "full | one | zero")
      ->check(CLI::IsMember({"full", "one", "zero"}));
  verify_b.option(verify, "--pairs", "pairs", pairs, "sampled splits");
  verify_b.option(verify, "--boundary", "boundary", boundary, "sampled boundary points");
  verify_b.option(verify, "--seed", "seed", seed, "RNG seed");
  verify_b.option(verify, "--report", "report", verify_report, "JSON report path");

  // dp-unweighted
  auto* dpu = app.add_subcommand("dp-unweighted", "grid value iteration on the slice x2 = -1");
  Bindings dpu_b;
  DpSubOptions dpu_opt;
  std::string dpu_init = "boundary", dpu_out, dpu_report;
  dpu_b.option(dpu, "--grid", "grid", dpu_opt.grid, "nodes per axis");
  dpu_b.option(dpu, "--iters", "iters", dpu_opt.iterations, "iterations");
  dpu_b.option(dpu, "--x3max", "x3max", dpu_opt.x3max, "grid extent");
  dpu_b.option(dpu, "--init", "init", dpu_init, "boundary | obstacle")->check(CLI::IsMember({"boundary", "obstacle"}));
  dpu_b.flag(dpu, "--seeded,!--no-seeded", "seeded", dpu_opt.seeded, "add boundary-landing splits");
  dpu_b.option(dpu, "--out", "out", dpu_out, "CSV path");
  dpu_b.option(dpu, "--report", "report", dpu_report, "JSON report path");

  // pm-search
  auto* pms = app.add_subcommand("pm-search", "exhaustive +-1 tree search on a lattice");
  Bindings pms_b;
  std::string px1 = "0", px3 = "1/2", quant = "0,1/2,-1/2,1,-1,2,-2", box = "8", witness_path, pms_report;
  int depth = 8, refine = 2;
  std::size_t budget = PmSearchOptions{}.state_budget;
  pms_b.option(pms, "--x1", "x1", px1, "rational");
  pms_b.option(pms, "--x3", "x3", px3, "rational");
  pms_b.option(pms, "--depth", "depth", depth, "tree height bound");
  pms_b.option(pms, "--quant", "quant", quant, "comma-separated Haar increments");
  pms_b.option(pms, "--box", "box", box, "bound on |x1|, |x2|, x3 along the tree");
  pms_b.option(pms, "--x3-refine", "x3_refine", refine, "x3 lattice refinement");
  pms_b.option(pms, "--budget", "budget", budget, "maximum lattice states");
  pms_b.option(pms, "--witness", "witness", witness_path, "witness JSON path");
  pms_b.option(pms, "--report", "report", pms_report, "JSON report path");

  // dp-weighted
  auto* dpw = app.add_subcommand("dp-weighted", "weighted slice value iteration");
  Bindings dpw_b;
  double Q = 4;
  std::string wgrid = "65x65x33", dpw_out, dpw_report;
  DpWeightedOptions dpw_opt;
  dpw_b.option(dpw, "--Q", "Q", Q, "A1 characteristic bound");
  dpw_b.option(dpw, "--grid", "grid", wgrid, "N1xN3xN4");
  dpw_b.option(dpw, "--x3max", "x3max", dpw_opt.x3max, "grid extent in x1, x3");
  dpw_b.option(dpw, "--iters", "iters", dpw_opt.iterations, "iterations");
  dpw_b.flag(dpw, "--seeded,!--no-seeded", "seeded", dpw_opt.seeded, "add the extremal-triple splits");
  dpw_b.option(dpw, "--out", "out", dpw_out, "CSV path");
  dpw_b.option(dpw, "--report", "report", dpw_report, "JSON report path");

  // lower-bound
  auto* lb = app.add_subcommand("lower-bound", "table of R(Q) over a list of Q");
  Bindings lb_b;
  std::string qlist = "2,4,8", lb_grid = "65x65x33", lb_out, lb_report;
  int lb_iters = 2;
  bool lb_seeded = true;
  lb_b.option(lb, "--Q", "Q", qlist, "comma-separated Q values");
  lb_b.option(lb, "--grid", "grid", lb_grid, "N1xN3xN4");
  lb_b.option(lb, "--iters", "iters", lb_iters, "iterations");
  lb_b.flag(lb, "--seeded,!--no-seeded", "seeded", lb_seeded, "add the extremal-triple splits");
  lb_b.option(lb, "--out", "out", lb_out, "CSV path");
  lb_b.option(lb, "--report", "report", lb_report, "JSON report path");

  // diagnostics
  auto* diag = app.add_subcommand("diagnostics", "averaging diagnostics of the weighted slice function");
  diag->require_subcommand(1);
  auto* dbeta = diag->add_subcommand("beta", "beta, gamma, a(x4), derivative and elementary-inequality reports");
  Bindings db_b;
  std::string dq = "4,8", dgrid = "33x33x17", d_report;
  int d_iters = 2, d_steps = 128;
  db_b.option(dbeta, "--Q", "Q", dq, "comma-separated Q values");
  db_b.option(dbeta, "--grid", "grid", dgrid, "N1xN3xN4");
  db_b.option(dbeta, "--iters", "iters", d_iters, "iterations");
  db_b.option(dbeta, "--steps", "steps", d_steps, "trapezoid steps");
  db_b.option(dbeta, "--report", "report", d_report, "JSON report path");

  // replay
  auto* rp = app.add_subcommand("replay", "replay a tree witness in exact arithmetic");
  Bindings rp_b;
  std::string rp_path;
  rp_b.option(rp, "--witness", "witness", rp_path, "witness JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    Json config = Json::object();
    if (!config_path.empty()) {
      try {
        config = read_json_file(config_path);
      } catch (std::exception const& e) {
        throw UsageError(e.what());
      }
      if (!config.is_object()) throw UsageError("config file must hold a JSON object");
    }
    auto section = [&](std::string const& name) { return config.contains(name) ? config.at(name) : Json::object(); };
    unsigned threads = resolve_threads(threads_flag, threads_opt->count() > 0, config);

    if (eval->parsed()) {
      auto resolved = eval_b.resolve(section("exact eval"));
      Point3<Rational> p{parse_rational_arg(ex1, "--x1"), parse_rational_arg(ex2, "--x2"), parse_rational_arg(ex3, "--x3")};
      Rational v;
      try {
        if (form == "boundary")
          v = B_boundary(p.x1, p.x2);
        else if (form == "y")
          v = M_y(YPoint<Rational>{p.x1, p.x2, p.x3});
        else
          v = B_full(p);
      } catch (DomainError const& e) {
        throw UsageError(e.what());
      }
      out << (eval_exact ? to_string(v) : to_string(to_double(v))) << "\n";
      return kOk;
    }

    if (verify->parsed()) {
      auto resolved = verify_b.resolve(section("exact verify"));
      SupersolutionOptions o;
      o.pair_samples = pairs;
      o.boundary_samples = boundary;
      o.seed = seed;
      SupersolutionReport rep;
      if (candidate == "full")
        rep = supersolution_verify([](Point3<double> const& p) { return B_full(p); }, o);
      else if (candidate == "one")
        rep = supersolution_verify([](Point3<double> const&) { return 1.0; }, o);
      else
        rep = supersolution_verify([](Point3<double> const&) { return 0.0; }, o);
      Json violations = Json::array();
      for (auto const& v : rep.violations)
        violations.push_back({{"kind", v.kind == SupersolutionViolation::Kind::Obstacle ? "obstacle" : "main_inequality"},
                              {"point", {v.point.x1, v.point.x2, v.point.x3}},
                              {"residual", number(v.residual)}});
      Json results = {{"passed", rep.passed},
                      {"checks", {"obstacle", "main_inequality"}},
                      {"samples", rep.pair_samples + rep.boundary_samples},
                      {"pair_samples", rep.pair_samples},
                      {"boundary_samples", rep.boundary_samples},
                      {"min_residual", number(rep.min_residual)},
                      {"min_obstacle_margin", number(rep.min_obstacle_margin)},
                      {"violation_count", rep.violation_count}};
      maybe_write(verify_report, make_report("exact verify", resolved, results, violations).dump(2) + "\n");
      out << "supersolution " << candidate << ": " << (rep.passed ? "passed" : "failed") << ", " << rep.violation_count
          << " violations, min residual " << to_string(rep.min_residual) << "\n";
      return rep.passed ? kOk : kViolations;
    }

    if (dpu->parsed()) {
      auto resolved = dpu_b.resolve(section("dp-unweighted"));
      dpu_opt.init = dpu_init == "obstacle" ? BoundaryInit::Obstacle : BoundaryInit::ExactBoundary;
      dpu_opt.threads = threads;
      if (dpu_opt.grid < 2) throw UsageError("grid needs at least two nodes");
      auto res = dp_sub(dpu_opt);
      auto const& V = res.value;
      auto const& ax = V.axis(0);
      std::ostringstream csv;
      csv << "x1,x3,value,closed_form,gap\n";
      Json violations = Json::array();
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < ax.size(); ++j)
        for (std::size_t i = 0; i <= j; ++i) {
          double v = V.at({i, j}), b = B_full(ax[i], -1.0, ax[j]);
          worst = std::max(worst, v - b);
          csv << to_string(ax[i]) << "," << to_string(ax[j]) << "," << to_string(v) << "," << to_string(b) << ","
              << to_string(b - v) << "\n";
          if (v > b + 1e-9) violations.push_back({{"x1", ax[i]}, {"x3", ax[j]}, {"value", v}, {"closed_form", b}});
        }
      maybe_write(dpu_out, csv.str());
      double probe = slice_lookup(V, 0.0, 0.5);
      Json results = {{"value_at_0_half", probe},
                      {"closed_form_at_0_half", B_full(0.0, -1.0, 0.5)},
                      {"max_excess_over_closed_form", worst},
                      {"nodes", ax.size() * (ax.size() + 1) / 2},
                      {"splits_per_iteration", res.evaluated_splits}};
      maybe_write(dpu_report, make_report("dp-unweighted", resolved, results, violations).dump(2) + "\n");
      out << "dp-unweighted: V(0,1/2) = " << to_string(probe) << " (closed form 0.75), max excess "
          << to_string(worst) << ", " << violations.size() << " violations\n";
      return violations.empty() ? kOk : kViolations;
    }

    if (pms->parsed()) {
      auto resolved = pms_b.resolve(section("pm-search"));
      PmSearchOptions o;
      o.quant.clear();
      for (auto const& s : split_list(quant)) o.quant.push_back(parse_rational_arg(s, "--quant"));
      if (o.quant.empty()) throw UsageError("--quant is empty");
      o.box = parse_rational_arg(box, "--box");
      o.x3_refinement = refine;
      o.state_budget = budget;
      Rational x1 = parse_rational_arg(px1, "--x1"), x3 = parse_rational_arg(px3, "--x3");
      PmSearchResult res;
      try {
        res = tree_search_pm(x1, x3, depth, o);
      } catch (BudgetExceededError const& e) {
        out << "pm-search: budget exceeded (" << e.what() << "), best bound so far " << to_string(e.best_so_far) << "\n";
        return kViolations;
      } catch (DomainError const& e) {
        throw UsageError(e.what());
      }
      auto rep = replay_witness(res.witness, false);
      Json violations = Json::array();
      for (auto const& m : rep.mismatches) violations.push_back(m);
      maybe_write(witness_path, witness_to_json(res.witness).dump(2) + "\n");
      Json results = {{"bound", to_string(res.bound)},
                      {"bound_decimal", to_double(res.bound)},
                      {"height", res.witness.height()},
                      {"nodes", res.witness.nodes.size()},
                      {"states_expanded", res.states_expanded},
                      {"replay_ok", rep.ok}};
      maybe_write(pms_report, make_report("pm-search", resolved, results, violations).dump(2) + "\n");
      out << "pm-search: bound " << to_string(res.bound) << " = " << to_string(to_double(res.bound)) << ", height "
          << res.witness.height() << ", replay " << (rep.ok ? "ok" : "MISMATCH") << "\n";
      return rep.ok ? kOk : kViolations;
    }

    if (dpw->parsed()) {
      auto resolved = dpw_b.resolve(section("dp-weighted"));
      auto g = parse_weighted_grid(wgrid);
      if (!(Q >= 1)) throw UsageError("Q must be >= 1");
      dpw_opt.Q = Q;
      dpw_opt.n13 = g[0];
      dpw_opt.n4 = g[2];
      dpw_opt.threads = threads;
      auto res = dp_weighted(dpw_opt);
      auto const& V = res.value;
      std::ostringstream csv;
      csv << "x1,x3,x4,value,ratio\n";
      Json violations = Json::array();
      for (std::size_t f = 0; f < V.size(); ++f) {
        auto idx = V.unflat(f);
        if (!V.in_domain(idx)) continue;
        auto p = V.node(idx);
        csv << to_string(p[0]) << "," << to_string(p[1]) << "," << to_string(p[2]) << "," << to_string(V[f]) << ","
            << (p[1] > 0 ? to_string(V[f] / p[1]) : std::string()) << "\n";
        if (idx[2] == 0 && V[f] > B_full(p[0], -1.0, p[1]) + 1e-9)
          violations.push_back({{"x1", p[0]}, {"x3", p[1]}, {"value", V[f]}});
      }
      maybe_write(dpw_out, csv.str());
      auto R = R_statistic(V);
      Json results = {{"R", R.value},
                      {"argmax", {R.argmax.x1, R.argmax.x3, R.argmax.x4}},
                      {"floor", (2 * Q - 1) / 2},
                      {"value_at_0_half_Q", weighted_lookup(V, 0.0, 0.5, Q)},
                      {"note", kFloorNote}};
      // Finite-depth midpoint concavity defects are expected; reported, never counted as violations.
      auto cc = concavity_spot_check(V, 2000, 1e-9);
      results["concavity"] = {{"segments", cc.segments}, {"defects", cc.violations}, {"min_residual", number(cc.min_residual)}};
      maybe_write(dpw_report, make_report("dp-weighted", resolved, results, violations).dump(2) + "\n");
      out << "dp-weighted: Q = " << to_string(Q) << ", R = " << to_string(R.value) << " (floor "
          << to_string((2 * Q - 1) / 2) << "), " << violations.size() << " face violations\n";
      return violations.empty() ? kOk : kViolations;
    }

    if (lb->parsed()) {
      auto resolved = lb_b.resolve(section("lower-bound"));
      auto g = parse_weighted_grid(lb_grid);
      auto qs = parse_double_list(qlist, "--Q");
      std::ostringstream table;
      table << "Q,R,floor,x3_argmax,R_times_x3\n";
      Json rows = Json::array(), violations = Json::array();
      for (double q : qs) {
        if (!(q >= 1)) throw UsageError("Q must be >= 1");
        DpWeightedOptions o;
        o.Q = q;
        o.n13 = g[0];
        o.n4 = g[2];
        o.iterations = lb_iters;
        o.seeded = lb_seeded;
        o.threads = threads;
        auto R = R_statistic(dp_weighted(o).value);
        double floor = (2 * q - 1) / 2;
        table << to_string(q) << "," << to_string(R.value) << "," << to_string(floor) << "," << to_string(R.argmax.x3)
              << "," << to_string(R.value * R.argmax.x3) << "\n";
        rows.push_back({{"Q", q}, {"R", R.value}, {"floor", floor}, {"argmax", {R.argmax.x1, R.argmax.x3, R.argmax.x4}}});
        if (lb_seeded && lb_iters >= 2 && R.value < floor - 1e-9)
          violations.push_back({{"Q", q}, {"R", R.value}, {"floor", floor}});
      }
      maybe_write(lb_out, table.str());
      maybe_write(lb_report,
                  make_report("lower-bound", resolved, {{"table", rows}, {"note", kFloorNote}}, violations).dump(2) + "\n");
      out << table.str() << "note: " << kFloorNote << "\n";
      return violations.empty() ? kOk : kViolations;
    }

    if (dbeta->parsed()) {
      auto resolved = db_b.resolve(section("diagnostics beta"));
      auto g = parse_weighted_grid(dgrid);
      auto qs = parse_double_list(dq, "--Q");
      Json per_q = Json::array();
      for (double q : qs) {
        if (!(q >= 2)) throw UsageError("diagnostics need Q >= 2");
        DpWeightedOptions o;
        o.Q = q;
        o.n13 = g[0];
        o.n4 = g[2];
        o.iterations = d_iters;
        o.threads = threads;
        auto res = dp_weighted(o);
        auto F = as_slice_function(res.value);
        double R = R_statistic(res.value).value;
        auto a = find_a(F, q, d_steps);
        Json betas = Json::array();
        for (double x4 : {2.0, q}) {
          double b = beta(F, {0.0, 1.0, x4}, d_steps);
          betas.push_back({{"x", {0.0, 1.0, x4}}, {"beta", b}, {"target", x4 / 4}, {"meets_target", b >= x4 / 4 - 1e-9}});
        }
        Json gammas = Json::array();
        auto bf = beta_function(F, d_steps);
        double h = 1e-2;
        for (double x3 : {0.5, 1.0})
          if (q - h >= 2 + h) {
            SlicePoint x{0.0, x3, 0.5 * (2.0 + q)};
            gammas.push_back({{"x", {x.x1, x.x3, x.x4}}, {"gamma_beta", gamma_op(bf, x, h)}});
          }
        std::vector<SlicePoint> samples;
        for (double x4 : {4.0, q - 1.0})
          if (x4 >= 4 && x4 + h <= q)
            for (double x3 : {0.25, 0.5, 1.0})
              for (double fr : {0.0, 0.125}) samples.push_back({fr * x3, x3, x4});
        auto m1 = diagnostics_main1(F, samples, R, h, d_steps);
        Json m1s = Json::array();
        for (auto const& s : m1.samples)
          m1s.push_back({{"x", {s.x.x1, s.x.x3, s.x.x4}}, {"lhs", s.lhs}, {"rhs", s.rhs}, {"pass", s.pass}});
        auto hx = diagnostics_hx3(F, q, R, {0.25, 0.5, 0.75}, 1e-3, d_steps);
        Json hxs = Json::array();
        for (auto const& s : hx.samples)
          hxs.push_back({{"x", {s.x.x1, s.x.x3, s.x.x4}}, {"beta_x3", s.beta_x3}, {"m", s.m}, {"pass", s.pass}});
        per_q.push_back({{"Q", q},
                         {"R", R},
                         {"a_root", a.found ? Json(a.root) : Json(nullptr)},
                         {"a_found", a.found},
                         {"beta_at_1", a.beta_at_hi},
                         {"beta", betas},
                         {"gamma", gammas},
                         {"main1", {{"samples", m1s}, {"pass_fraction", m1.pass_fraction}}},
                         {"hx3", {{"samples", hxs}, {"passed", hx.passed}}}});
      }
      auto el = elementary_inequality_check(4.0, 1e6, 10000);
      Json elementary = {{"passed", el.passed},   {"f_at_4", el.f_at_4},   {"f_at_4_closed", el.f_at_4_closed},
                         {"f2_at_4", el.f2_at_4}, {"min_f", el.min_f},     {"min_f_at", el.min_f_at},
                         {"samples", el.samples}, {"max_f2_error", el.max_f2_error}};
      Json violations = Json::array();
      if (!el.passed) violations.push_back("elementary inequality");
      Json results = {{"per_Q", per_q}, {"elementary", elementary}};
      auto report = make_report("diagnostics beta", resolved, results, violations).dump(2) + "\n";
      maybe_write(d_report, report);
      out << "diagnostics beta: " << qs.size() << " Q values, elementary inequality "
          << (el.passed ? "passed" : "FAILED") << "\n";
      return violations.empty() ? kOk : kViolations;
    }

    if (rp->parsed()) {
      rp_b.resolve(section("replay"));
      Json j;
      try {
        j = read_json_file(rp_path);
      } catch (std::exception const& e) {
        throw UsageError(e.what());
      }
      try {
        if (j.is_object() && j.contains("phi")) {
          auto r = replay_transform_witness(transform_witness_from_json(j));
          out << "replay: point (" << to_string(r.point.x1) << ", " << to_string(r.point.x2) << ", "
              << to_string(r.point.x3) << ", " << to_string(r.point.x4) << ", " << to_string(r.point.x5)
              << "), characteristic " << to_string(r.characteristic) << ", measure " << to_string(r.measure)
              << ", ratio " << to_string(r.ratio) << ", " << (r.ok ? "ok" : "MISMATCH") << "\n";
          for (auto const& m : r.mismatches) out << "  " << m << "\n";
          return r.ok ? kOk : kViolations;
        }
        auto w = witness_from_json(j);
        auto rep = replay_witness(w, false);
        out << "replay: point (" << to_string(rep.x1) << ", " << to_string(rep.x2) << ", " << to_string(rep.x3)
            << "), measure " << to_string(rep.measure) << ", " << (rep.ok ? "ok" : "MISMATCH") << "\n";
        for (auto const& m : rep.mismatches) out << "  " << m << "\n";
        return rep.ok ? kOk : kViolations;
      } catch (MismatchError const& e) {
        out << "replay: MISMATCH " << e.what() << "\n";
        return kViolations;
      } catch (std::logic_error const& e) {
        // Domain, epsilon and zero-denominator problems inside a witness.
        out << "replay: MISMATCH " << e.what() << "\n";
        return kViolations;
      }
    }
  } catch (UsageError const& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (std::exception const& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace bellman::cli
