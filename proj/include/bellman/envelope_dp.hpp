#pragma once

#include "bellman/closed_form.hpp"
#include "bellman/dyadic.hpp"
#include "bellman/errors.hpp"
#include "bellman/grid.hpp"
#include "bellman/parallel.hpp"
#include "bellman/rational.hpp"
#include "bellman/splits.hpp"
#include "bellman/transform.hpp"
#include "bellman/weak_type_search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace bellman {

// ---------------------------------------------------------------------------
// Grid value iteration on the slice x2 = -1 (SUB class).
// ---------------------------------------------------------------------------

/// How V_0 is initialised on the boundary nodes x3 = x1.
enum class BoundaryInit {
  Obstacle,       ///< 0 everywhere: the bare obstacle at x2 = -1
  ExactBoundary,  ///< the known boundary values B(x1, -1, |x1|)
};

struct DpSubOptions {
  std::size_t grid = 129;  ///< nodes per axis on [0, x3max]
  int iterations = 12;
  double x3max = 2.0;
  SplitSetSpec splits{};
  bool seeded = true;  ///< add the node-dependent splits landing both children on the boundary
  BoundaryInit init = BoundaryInit::ExactBoundary;
  unsigned threads = 1;
  bool keep_history = false;
};

struct DpSubResult {
  GridFunction<2> value;                 ///< V_N on axes (x1, x3), wedge x1 <= x3
  std::vector<GridFunction<2>> history;  ///< V_0 .. V_N when requested
  std::size_t evaluated_splits = 0;      ///< per iteration
};

/// Lower-bound lookup of the slice value at an arbitrary (x1, x3) with x1 allowed negative.
///
/// Uses evenness in x1. Beyond the grid in x3 the value at x3max is used,
/// which is sound because the Bellman function is nondecreasing in x3;
/// points with |x1| > x3max get the trivial lower bound 0.
inline double slice_lookup(GridFunction<2> const& V, double x1, double x3) {
  double top = V.axis(1).back();
  x1 = std::abs(x1);
  if (x1 > top) return 0.0;
  x3 = std::min(x3, top);
  x1 = std::min(x1, x3);
  return V.interpolate({x1, x3});
}

/// Value of a child (c1, c2, c3) of a split whose parent sits on the slice.
inline double unweighted_child_value(GridFunction<2> const& V, double c1, double c2, double c3) {
  if (c2 >= 0) return 1.0;  // eps = 0 freezes psi at c2 >= 0
  double tau = -1.0 / c2;
  return slice_lookup(V, c1 * tau, c3 * tau);
}

inline DpSubResult dp_sub(DpSubOptions const& opt) {
  if (opt.iterations < 0) throw DomainError("iteration count must be nonnegative");
  auto axis = uniform_axis(0.0, opt.x3max, opt.grid);
  GridFunction<2> V({axis, axis}, /*wedge=*/true, 0.0);
  std::size_t n = opt.grid;
  if (opt.init == BoundaryInit::ExactBoundary)
    for (std::size_t i = 0; i < n; ++i) V.at({i, i}) = B_boundary(axis[i], -1.0);

  auto moves = make_split_set(opt.splits);
  for (auto const& m : moves)
    if (!m.sub_admissible()) throw ConstraintError("split set contains a move with |d2| > |d1|");

  DpSubResult result;
  if (opt.keep_history) result.history.push_back(V);

  for (int it = 0; it < opt.iterations; ++it) {
    GridFunction<2> next = V;
    std::vector<std::size_t> counts(n, 0);
    parallel_for(0, n, opt.threads, [&](std::size_t j) {
      double x3 = axis[j];
      for (std::size_t i = 0; i <= j; ++i) {
        double x1 = axis[i];
        double best = V.at({i, j});
        auto consider = [&](double d1, double d2, double d3) {
          double p1 = x1 + d1, p3 = x3 + d3, m1 = x1 - d1, m3 = x3 - d3;
          if (p3 < std::abs(p1) || m3 < std::abs(m1)) return;
          ++counts[j];
          double v = 0.5 * (unweighted_child_value(V, p1, -1.0 + d2, p3) + unweighted_child_value(V, m1, -1.0 - d2, m3));
          if (std::isnan(v)) throw std::runtime_error("NaN in dp_sub");
          if (v > best) best = v;
        };
        for (auto const& m : moves) consider(m.d1, m.d2, m.d3);
        if (opt.seeded && x3 > 0) {
          // Both children on the boundary: phi = x1 + x3 H, psi = -1 +- x3 H.
          consider(x3, x3, x1);
          consider(x3, -x3, x1);
        }
        next.at({i, j}) = best;
      }
    });
    result.evaluated_splits = 0;
    for (auto c : counts) result.evaluated_splits += c;
    V = std::move(next);
    if (opt.keep_history) result.history.push_back(V);
  }
  result.value = std::move(V);
  return result;
}

// ---------------------------------------------------------------------------
// Exhaustive tree search in the PM class on a quantized lattice.
// ---------------------------------------------------------------------------

/// One node of a finite dyadic tree. Internal nodes carry the Haar increment
/// a (children means x1 +- a, right child +) and eps in {-1, +1}; leaves carry
/// the constant pair (phi, psi) on their interval.
struct WitnessNode {
  bool leaf = true;
  Rational a{0};
  int eps = 1;
  int left = -1, right = -1;
  Rational phi{0}, psi{0};
};

struct TreeWitness {
  Rational x1{0}, x2{0}, x3{0};  ///< claimed Bellman point
  Rational measure{0};           ///< claimed |{psi >= 0}|
  std::vector<WitnessNode> nodes;  ///< nodes[0] is the root

  int height() const {
    auto rec = [&](auto&& self, int idx) -> int {
      auto const& n = nodes.at(static_cast<std::size_t>(idx));
      if (n.leaf) return 0;
      return 1 + std::max(self(self, n.left), self(self, n.right));
    };
    return nodes.empty() ? 0 : rec(rec, 0);
  }
};

struct ReplayReport {
  bool ok = true;
  Rational x1{0}, x2{0}, x3{0};
  Rational measure{0};
  int depth = 0;
  std::vector<std::string> mismatches;
};

/// Rebuilds phi and psi from the tree, re-derives the Haar coefficients and
/// the transform through the dyadic-core routines, and compares everything
/// the witness claims in exact arithmetic.
inline ReplayReport replay_witness(TreeWitness const& w, bool throw_on_mismatch = true) {
  ReplayReport rep;
  if (w.nodes.empty()) throw MismatchError("witness has no nodes");
  int depth = w.height();
  if (depth > 24) throw DomainError("witness too deep to replay");
  rep.depth = depth;
  std::size_t cells = std::size_t{1} << depth;
  std::vector<Rational> phi(cells), psi(cells);
  EpsilonAssignment<Rational> eps;
  eps.mode = EpsilonMode::PM;
  std::vector<std::pair<DyadicInterval, Rational>> increments;

  auto fill = [&](auto&& self, int idx, DyadicInterval J, Rational const& pm, Rational const& sm) -> void {
    auto const& n = w.nodes.at(static_cast<std::size_t>(idx));
    if (n.leaf) {
      if (n.phi != pm || n.psi != sm)
        rep.mismatches.push_back("leaf constants at (" + std::to_string(J.level) + "," + std::to_string(J.position) +
                                 ") disagree with the increments above it");
      auto [lo, hi] = J.cells(depth);
      for (auto i = lo; i < hi; ++i) {
        phi[static_cast<std::size_t>(i)] = pm;
        psi[static_cast<std::size_t>(i)] = sm;
      }
      return;
    }
    if (n.eps != 1 && n.eps != -1) rep.mismatches.push_back("eps outside {-1,+1}");
    eps.entries[J] = Rational(n.eps);
    increments.emplace_back(J, n.a);
    self(self, n.right, J.right(), pm + n.a, sm + Rational(n.eps) * n.a);
    self(self, n.left, J.left(), pm - n.a, sm - Rational(n.eps) * n.a);
  };
  fill(fill, 0, DyadicInterval::unit(), w.x1, w.x2);

  StepFunction<Rational> f(depth, phi);
  StepFunction<Rational> g(depth, psi);
  auto expansion = haar_decompose(f);
  for (auto const& [J, a] : increments)
    if (expansion.coefficient(J) != a) rep.mismatches.push_back("Haar coefficient differs from the stored increment");
  auto transformed = apply_transform(expansion, eps, w.x2);
  if (!(transformed == g)) rep.mismatches.push_back("psi is not the +-1 transform of phi");

  auto point = bellman_point(f, g, A1Weight<Rational>::unit(depth));
  rep.x1 = point.x1;
  rep.x2 = point.x2;
  rep.x3 = point.x3;
  rep.measure = level_set_measure(g, Rational(0), A1Weight<Rational>::unit(depth));
  if (rep.x1 != w.x1 || rep.x2 != w.x2 || rep.x3 != w.x3)
    rep.mismatches.push_back("Bellman point (" + to_string(rep.x1) + ", " + to_string(rep.x2) + ", " + to_string(rep.x3) +
                             ") differs from the claim (" + to_string(w.x1) + ", " + to_string(w.x2) + ", " +
                             to_string(w.x3) + ")");
  if (rep.measure != w.measure)
    rep.mismatches.push_back("measure " + to_string(rep.measure) + " differs from the claim " + to_string(w.measure));
  rep.ok = rep.mismatches.empty();
  if (!rep.ok && throw_on_mismatch) {
    std::string msg = "witness replay mismatch:";
    for (auto const& m : rep.mismatches) msg += " " + m + ";";
    throw MismatchError(msg);
  }
  return rep;
}

/// The depth-2 extremal triple as a tree witness with unit weight.
inline TreeWitness extremal_witness(Rational const& x1, Rational const& x3) {
  auto triple = podpir_triple(x1, x3, Rational(1));
  TreeWitness w;
  w.x1 = x1;
  w.x2 = Rational(-1);
  w.x3 = x3;
  w.measure = level_set_measure(triple.psi, Rational(0), A1Weight<Rational>::unit(2));
  auto const& v = triple.phi.values();
  auto const& s = triple.psi.values();
  w.nodes.resize(7);
  w.nodes[0] = {false, x3, 1, 1, 2, 0, 0};
  w.nodes[1] = {false, x3 - x1, 1, 3, 4, 0, 0};   // left half
  w.nodes[2] = {false, x3 + x1, -1, 5, 6, 0, 0};  // right half
  w.nodes[3] = {true, 0, 1, -1, -1, v[0], s[0]};
  w.nodes[4] = {true, 0, 1, -1, -1, v[1], s[1]};
  w.nodes[5] = {true, 0, 1, -1, -1, v[2], s[2]};
  w.nodes[6] = {true, 0, 1, -1, -1, v[3], s[3]};
  return w;
}

struct PmSearchOptions {
  std::vector<Rational> quant = {Rational(0), rational(1, 2), rational(-1, 2), Rational(1), Rational(-1), Rational(2),
                                 Rational(-2)};
  int x3_refinement = 2;          ///< x3 lattice = (x1 lattice unit) / refinement
  Rational box{8};                ///< |x1|, |x2|, x3 stay within this bound
  std::size_t state_budget = 20'000'000;
};

struct PmSearchResult {
  Rational bound{0};
  TreeWitness witness;
  std::size_t states_expanded = 0;
};

struct BudgetExceededError : std::runtime_error {
  Rational best_so_far;
  BudgetExceededError(std::string const& msg, Rational best) : std::runtime_error(msg), best_so_far(std::move(best)) {}
};

/// Best |{psi >= 0}| over finite PM trees of height <= depth with Bellman
/// point (x1, -1, x3), Haar increments from `quant`, and |phi|-mass split on a
/// fixed x3 lattice. Exhaustive over that lattice (memoized by node state), so
/// the bound is attained by the returned witness and hence is a certified
/// lower bound for the PM Bellman function.
inline PmSearchResult tree_search_pm(Rational const& x1, Rational const& x3, int depth, PmSearchOptions const& opt = {}) {
  using boost::multiprecision::cpp_int;
  if (depth < 0 || depth > 12) throw DomainError("search depth must be in 0..12");
  if (x3 < abs_value(x1)) throw DomainError("search point outside |x1| <= x3");
  if (opt.x3_refinement < 1) throw DomainError("x3 refinement must be positive");

  // Integer lattice: x1, x2 in units u, x3 in units u / r.
  std::vector<Rational> gens = opt.quant;
  gens.push_back(x1);
  gens.push_back(Rational(1));
  gens.push_back(x3 * Rational(opt.x3_refinement));
  gens.push_back(opt.box);
  cpp_int L = detail::lcm_of_denominators(gens);
  // Unit u = gcd of the generators: find the integer gcd of scaled numerators.
  cpp_int g = 0;
  for (auto const& v : gens) {
    Rational s = v * Rational(L);
    g = gcd(g, abs(boost::multiprecision::numerator(s)));
  }
  if (g == 0) g = 1;
  Rational unit = Rational(g) / Rational(L);
  long long r = opt.x3_refinement;
  auto to_units = [&](Rational const& v, Rational const& u) {
    Rational q = v / u;
    if (boost::multiprecision::denominator(q) != 1) throw DomainError("value not on the search lattice");
    return static_cast<long long>(boost::multiprecision::numerator(q));
  };
  long long B1 = to_units(opt.box, unit);
  long long B3 = B1 * r;
  long long X1 = to_units(x1, unit), X2 = to_units(Rational(-1), unit), X3 = to_units(x3, unit / Rational(r));
  if (std::abs(X1) > B1 || std::abs(X2) > B1 || X3 > B3) throw DomainError("search point outside the search box");

  std::vector<long long> steps;  // nonnegative increments; a and -a are the same split up to orientation
  for (auto const& q : opt.quant) {
    long long a = std::abs(to_units(q, unit));
    if (std::find(steps.begin(), steps.end(), a) == steps.end()) steps.push_back(a);
  }
  std::sort(steps.begin(), steps.end());

  long long n1 = 2 * B1 + 1, n3 = B3 + 1;
  std::size_t table = static_cast<std::size_t>(n1 * n1 * n3 * (depth + 1));
  if (table > opt.state_budget)
    throw BudgetExceededError("search lattice of " + std::to_string(table) + " states exceeds the budget", Rational(0));

  struct Entry {
    double value = -1;  // -1: infeasible
    std::int8_t height = 0;
    std::int8_t done = 0;
    std::int16_t step = -1;  // index into steps; -1: leaf
    std::int8_t eps = 1;
    long long d3 = 0;
  };
  std::vector<Entry> memo(table);
  auto key = [&](long long a, long long b, long long c, int h) {
    return static_cast<std::size_t>((((a + B1) * n1 + (b + B1)) * n3 + c) * (depth + 1) + h);
  };
  std::size_t expanded = 0;

  auto solve = [&](auto&& self, long long a1, long long a2, long long a3, int h) -> Entry const& {
    Entry& e = memo[key(a1, a2, a3, h)];
    if (e.done) return e;
    ++expanded;
    bool leaf_ok = a3 == r * std::abs(a1);
    if (leaf_ok) {
      e.value = a2 >= 0 ? 1.0 : 0.0;
      e.height = 0;
      e.step = -1;
    }
    if (h > 0) {
      for (std::size_t si = 0; si < steps.size(); ++si) {
        long long a = steps[si];
        for (int sgn : {1, -1}) {
          if (a == 0 && sgn == -1) continue;
          long long p1 = a1 + a, m1 = a1 - a, p2 = a2 + sgn * a, m2 = a2 - sgn * a;
          if (std::abs(p1) > B1 || std::abs(m1) > B1 || std::abs(p2) > B1 || std::abs(m2) > B1) continue;
          // children x3 = a3 +- d3 with a3 +- d3 >= r |x1 +- a| and <= B3.
          long long lo = std::max(r * std::abs(p1) - a3, a3 - B3);
          long long hi = std::min(a3 - r * std::abs(m1), B3 - a3);
          for (long long d3 = lo; d3 <= hi; ++d3) {
            Entry const& cp = self(self, p1, p2, a3 + d3, h - 1);
            if (cp.value < 0) continue;
            Entry const& cm = self(self, m1, m2, a3 - d3, h - 1);
            if (cm.value < 0) continue;
            double v = 0.5 * (cp.value + cm.value);
            int ht = 1 + std::max(cp.height, cm.height);
            bool better = v > e.value || (v == e.value && e.value >= 0 && ht < e.height);
            if (better) {
              e.value = v;
              e.height = static_cast<std::int8_t>(ht);
              e.step = static_cast<std::int16_t>(si);
              e.eps = static_cast<std::int8_t>(sgn);
              e.d3 = d3;
            }
          }
        }
      }
    }
    e.done = 1;
    return e;
  };

  Entry const& root = solve(solve, X1, X2, X3, depth);
  PmSearchResult res;
  res.states_expanded = expanded;
  if (root.value < 0) {
    res.bound = Rational(0);
    res.witness.x1 = x1;
    res.witness.x2 = Rational(-1);
    res.witness.x3 = x3;
    return res;  // no finite tree on this lattice reaches the point
  }

  // Rebuild the witness from the recorded argmax moves.
  TreeWitness w;
  w.x1 = x1;
  w.x2 = Rational(-1);
  w.x3 = x3;
  auto build = [&](auto&& self, long long a1, long long a2, long long a3, int h) -> int {
    Entry const& e = memo[key(a1, a2, a3, h)];
    int idx = static_cast<int>(w.nodes.size());
    w.nodes.emplace_back();
    if (e.step < 0) {
      w.nodes[static_cast<std::size_t>(idx)].leaf = true;
      w.nodes[static_cast<std::size_t>(idx)].phi = Rational(a1) * unit;
      w.nodes[static_cast<std::size_t>(idx)].psi = Rational(a2) * unit;
      return idx;
    }
    long long a = steps[static_cast<std::size_t>(e.step)];
    int sgn = e.eps;
    int right = self(self, a1 + a, a2 + sgn * a, a3 + e.d3, h - 1);
    int left = self(self, a1 - a, a2 - sgn * a, a3 - e.d3, h - 1);
    auto& n = w.nodes[static_cast<std::size_t>(idx)];
    n.leaf = false;
    n.a = Rational(a) * unit;
    n.eps = sgn;
    n.left = left;
    n.right = right;
    return idx;
  };
  build(build, X1, X2, X3, depth);
  // Values are dyadic with denominator <= 2^depth, hence exact in double.
  long long scale = 1LL << depth;
  w.measure = Rational(static_cast<long long>(std::llround(root.value * static_cast<double>(scale)))) / Rational(scale);
  res.bound = w.measure;
  res.witness = std::move(w);
  return res;
}

}  // namespace bellman
