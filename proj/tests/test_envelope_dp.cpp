#include "bellman/envelope_dp.hpp"
#include "bellman/json_io.hpp"

#include <catch_amalgamated.hpp>

using namespace bellman;
using R = Rational;

namespace {

DpSubOptions small(int iters) {
  DpSubOptions o;
  o.grid = 33;
  o.iterations = iters;
  o.keep_history = true;
  return o;
}

TreeWitness depth_one() {
  // phi = H, psi = -1 + H
  TreeWitness w;
  w.x1 = R(0);
  w.x2 = R(-1);
  w.x3 = R(1);
  w.measure = rational(1, 2);
  w.nodes = {{false, R(1), 1, 1, 2, R(0), R(0)}, {true, R(0), 1, -1, -1, R(-1), R(-2)}, {true, R(0), 1, -1, -1, R(1), R(0)}};
  return w;
}

}  // namespace

TEST_CASE("grid functions: node exactness and wedge interpolation") {
  auto ax = uniform_axis(0, 2, 5);
  GridFunction<2> g({ax, ax}, true);
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t i = 0; i <= j; ++i) g.at({i, j}) = 0.1 * static_cast<double>(i) + static_cast<double>(j) / 3.0;
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t i = 0; i <= j; ++i) CHECK(g.interpolate(g.node({i, j})) == g.at({i, j}));
  // affine data is reproduced exactly inside diagonal cells
  CHECK(g.interpolate({0.6, 0.7}) == Catch::Approx(0.1 * 1.2 + 1.4 / 3.0).margin(1e-14));
  CHECK_THROWS_AS(g.interpolate({1.0, 0.5}), DomainError);
  CHECK_THROWS_AS(g.interpolate({0.0, 2.5}), DomainError);
  CHECK_THROWS_AS(uniform_axis(0, 1, 1), DomainError);
}

TEST_CASE("dp_sub: boundary values, monotone iterations, dominated by the closed form") {
  auto res = dp_sub(small(4));
  auto const& ax = res.value.axis(0);
  // (1,1) is a boundary node: B(1,-1,1) = 1 at every iteration.
  std::size_t one = 16;
  REQUIRE(ax[one] == 1.0);
  for (auto const& V : res.history) CHECK(V.at({one, one}) == 1.0);
  for (std::size_t n = 1; n < res.history.size(); ++n)
    for (std::size_t f = 0; f < res.value.size(); ++f) REQUIRE(res.history[n][f] >= res.history[n - 1][f]);
  for (auto const& V : res.history)
    for (std::size_t j = 0; j < ax.size(); ++j)
      for (std::size_t i = 0; i <= j; ++i) REQUIRE(V.at({i, j}) <= B_full(ax[i], -1.0, ax[j]) + 1e-9);
}

TEST_CASE("dp_sub: depth-one split reaches 1/2 at (0,1)") {
  DpSubOptions o = small(1);
  o.seeded = false;
  o.init = BoundaryInit::Obstacle;
  o.splits.d1 = {1.0};
  o.splits.d2_fractions = {1.0};
  o.splits.d3 = {0.0};
  auto V = dp_sub(o).value;
  CHECK(slice_lookup(V, 0, 1) == 0.5);
  // the two children of that split
  CHECK(unweighted_child_value(V, 1, 0, 1) == 1.0);
  CHECK(unweighted_child_value(dp_sub(small(0)).value, -1, -2, 1) == Catch::Approx(B_boundary(0.5, -1.0)));
}

TEST_CASE("dp_sub: obstacle start converges upward as well") {
  DpSubOptions o = small(6);
  o.init = BoundaryInit::Obstacle;
  auto res = dp_sub(o);
  CHECK(res.history.front().at({0, 8}) == 0.0);
  CHECK(slice_lookup(res.value, 0, 0.5) > 0.5);
  CHECK(slice_lookup(res.value, 0, 0.5) <= 0.75 + 1e-9);
}

TEST_CASE("dp_sub: evenness and thread independence") {
  auto a = dp_sub(small(2)).value;
  DpSubOptions o = small(2);
  o.threads = 3;
  auto b = dp_sub(o).value;
  CHECK(a.values() == b.values());
  CHECK(slice_lookup(a, -0.3, 0.9) == slice_lookup(a, 0.3, 0.9));
}

TEST_CASE("dp_sub rejects PM-only data it cannot use") {
  DpSubOptions o = small(1);
  o.splits.d2_fractions = {2.0};
  CHECK_THROWS_AS(dp_sub(o), ConstraintError);
}

TEST_CASE("tree_search_pm examples") {
  PmSearchOptions q;
  q.quant = {R(1), R(-1)};
  auto r = tree_search_pm(R(0), R(1), 1, q);
  CHECK(r.bound == rational(1, 2));
  REQUIRE(r.witness.nodes.size() == 3);
  CHECK(r.witness.nodes[0].a == 1);
  auto rep = replay_witness(r.witness);
  CHECK(rep.x1 == 0);
  CHECK(rep.x2 == -1);
  CHECK(rep.x3 == 1);
  CHECK(rep.measure == rational(1, 2));

  CHECK(tree_search_pm(R(1), R(1), 0).bound == 0);
  CHECK_THROWS_AS(tree_search_pm(R(1), rational(1, 2), 2), DomainError);
}

TEST_CASE("tree_search_pm: monotone in depth and below the closed form") {
  R prev(0);
  for (int d = 0; d <= 6; ++d) {
    auto r = tree_search_pm(R(0), rational(1, 2), d);
    CHECK(r.bound >= prev);
    CHECK(to_double(r.bound) <= 0.75 + 1e-12);
    // no finite tree reaches an interior point at depth 0
    if (d == 0) CHECK(r.witness.nodes.empty());
    else CHECK(replay_witness(r.witness).ok);
    prev = r.bound;
  }
}

TEST_CASE("tree_search_pm budget") {
  PmSearchOptions q;
  q.state_budget = 100;
  CHECK_THROWS_AS(tree_search_pm(R(0), rational(1, 2), 4, q), BudgetExceededError);
}

TEST_CASE("replay_witness") {
  auto rep = replay_witness(depth_one());
  CHECK(rep.ok);
  CHECK(rep.measure == rational(1, 2));

  TreeWitness leaf;
  leaf.x1 = rational(-3, 2);
  leaf.x2 = R(2);
  leaf.x3 = rational(3, 2);
  leaf.measure = R(1);
  leaf.nodes = {{true, R(0), 1, -1, -1, rational(-3, 2), R(2)}};
  CHECK(replay_witness(leaf).measure == 1);

  for (auto [x1, x3] : {std::pair{R(0), rational(1, 2)}, std::pair{rational(1, 3), R(2)}}) {
    auto w = extremal_witness(x1, x3);
    auto r = replay_witness(w);
    CHECK(r.x1 == x1);
    CHECK(r.x2 == -1);
    CHECK(r.x3 == x3);
    auto t = podpir_triple(x1, x3, R(1));
    CHECK(bellman_point(t.phi, t.psi, t.weight) == BellmanPoint5<R>{x1, R(-1), x3, R(1), R(1)});
  }

  auto bad = depth_one();
  bad.measure = R(1);
  CHECK_THROWS_AS(replay_witness(bad), MismatchError);
  bad = depth_one();
  bad.nodes[2].psi = R(1);
  CHECK_FALSE(replay_witness(bad, false).ok);
}

TEST_CASE("witness json round trip and structural checks") {
  auto r = tree_search_pm(R(0), rational(1, 2), 4);
  auto j = witness_to_json(r.witness);
  auto back = witness_from_json(j);
  CHECK(replay_witness(back).measure == r.bound);
  CHECK(witness_to_json(back) == j);

  auto broken = j;
  broken["nodes"][0]["left"] = 0;
  CHECK_THROWS_AS(witness_from_json(broken), MismatchError);
  CHECK_THROWS_AS(witness_from_json(Json{{"point", {"0"}}}), MismatchError);
}
