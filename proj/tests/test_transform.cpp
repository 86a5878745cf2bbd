#include "bellman/json_io.hpp"
#include "bellman/transform.hpp"
#include "bellman/weak_type_search.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace bellman;
using R = Rational;

namespace {

StepFunction<R> steps(int depth, std::vector<R> v) { return StepFunction<R>(depth, std::move(v)); }

EpsilonAssignment<R> pm(std::map<DyadicInterval, R> entries) {
  EpsilonAssignment<R> e;
  e.entries = std::move(entries);
  return e;
}

std::vector<R> quant() { return {R(0), rational(1, 2), rational(-1, 2), R(1), R(-1), R(2), R(-2)}; }

}  // namespace

TEST_CASE("epsilon assignments enforce their class") {
  auto bad = pm({{DyadicInterval::unit(), rational(1, 2)}});
  CHECK_THROWS_AS(bad.validate(), ConstraintError);
  EpsilonAssignment<R> sub;
  sub.mode = EpsilonMode::SUB;
  sub.entries[DyadicInterval::unit()] = rational(1, 2);
  CHECK_NOTHROW(sub.validate());
  sub.entries[DyadicInterval::unit()] = R(2);
  CHECK_THROWS_AS(sub.validate(), ConstraintError);

  auto e = haar_decompose(steps(1, {R(0), R(2)}));
  CHECK_THROWS_AS(apply_transform(e, pm({}), R(0)), MissingEpsilonError);
  EpsilonAssignment<R> empty_sub;
  empty_sub.mode = EpsilonMode::SUB;
  CHECK(apply_transform(e, empty_sub, R(3)) == StepFunction<R>::constant(R(3), 1));
}

TEST_CASE("apply_transform examples") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(-9, 9);
  std::vector<R> v(8);
  for (auto& x : v) x = rational(d(rng), 4);
  auto f = steps(3, v);
  auto e = haar_decompose(f);
  CHECK(apply_transform(e, EpsilonAssignment<R>::constant(R(1), 3), e.mean) == f);

  auto ind = haar_decompose(StepFunction<R>::indicator({1, 1}, 1));
  CHECK(apply_transform(ind, EpsilonAssignment<R>::constant(R(-1), 1), rational(1, 2)) ==
        StepFunction<R>::indicator({1, 0}, 1));

  auto t = podpir_triple(R(0), rational(1, 2), R(2));
  auto psi = apply_transform(t.phi_expansion, pm({{{0, 0}, R(1)}, {{1, 0}, R(1)}, {{1, 1}, R(-1)}}), R(-1));
  CHECK(psi == steps(2, {R(-2), R(-1), R(0), R(-1)}));
  // the third cell carries 2 x3 + x1 - 1
  CHECK(psi[2] == R(2) * rational(1, 2) + R(0) - R(1));
}

TEST_CASE("characteristic") {
  CHECK(characteristic(A1Weight<R>(StepFunction<R>::constant(rational(5, 7), 3))) == 1);
  CHECK(characteristic(A1Weight<R>(steps(2, {R(1), R(3), R(3), R(1)}))) == 2);
  for (int q : {1, 2, 4, 8, 13}) CHECK(characteristic(podpir_triple(R(0), rational(1, 2), R(q)).weight) == q);
  CHECK(characteristic(podpir_triple(R(0), rational(1, 2), rational(7, 3)).weight) == rational(7, 3));
  CHECK_THROWS_AS(A1Weight<R>(steps(1, {R(1), R(0)})), DomainError);
  // a non-constant weight has characteristic > 1
  CHECK(characteristic(A1Weight<R>(steps(1, {R(1), R(2)}))) == rational(3, 2));
}

TEST_CASE("level_set_measure") {
  auto one = A1Weight<R>::unit();
  CHECK(level_set_measure(StepFunction<R>::constant(R(0)), R(0), one) == 1);
  auto t = podpir_triple(R(0), rational(1, 2), R(2));
  CHECK(level_set_measure(t.psi, R(0), t.weight) == rational(3, 4));
  CHECK(level_set_measure(haar_function<R>(DyadicInterval::unit()), R(2), one) == 0);

  // monotone in lambda, additive in w
  auto w1 = steps(2, {R(1), R(2), R(3), R(4)});
  auto w2 = steps(1, {rational(1, 2), R(5)});
  auto psi = steps(2, {R(-1), R(3), R(0), rational(1, 2)});
  R prev(100);
  for (int l = -2; l <= 4; ++l) {
    R m = level_set_measure(psi, R(l), A1Weight<R>(w1));
    CHECK(m <= prev);
    prev = m;
    CHECK(level_set_measure(psi, R(l), A1Weight<R>(w1 + w2)) ==
          m + level_set_measure(psi, R(l), A1Weight<R>(w2)));
  }
}

TEST_CASE("bellman_point") {
  for (auto [x1, x3, x4] : {std::tuple{R(0), rational(1, 2), R(2)}, std::tuple{rational(-1, 3), R(1), R(5)},
                            std::tuple{R(2), R(3), rational(9, 4)}}) {
    auto t = podpir_triple(x1, x3, x4);
    CHECK(bellman_point(t.phi, t.psi, t.weight) == BellmanPoint5<R>{x1, R(-1), x3, x4, R(1)});
    CHECK(bellman_point(t.phi, t.psi, t.weight).in_domain(x4));
  }
  auto c = StepFunction<R>::constant(rational(-3, 2));
  CHECK(bellman_point(c, c, A1Weight<R>::unit()) == BellmanPoint5<R>{rational(-3, 2), rational(-3, 2), rational(3, 2), R(1), R(1)});
  auto h = haar_function<R>(DyadicInterval::unit());
  auto psi = h + StepFunction<R>::constant(R(-1));
  CHECK(bellman_point(h, psi, A1Weight<R>::unit()) == BellmanPoint5<R>{R(0), R(-1), R(1), R(1), R(1)});
}

TEST_CASE("weak_type_ratio") {
  auto t = podpir_triple(R(0), rational(1, 2), R(2));
  CHECK(weak_type_ratio(t.phi_expansion, t.eps, R(-1), t.weight, R(1)) == rational(3, 2));
  for (int q : {3, 4, 16, 64}) {
    auto tq = podpir_triple(R(0), rational(1, 2), R(q));
    CHECK(weak_type_ratio(tq.phi_expansion, tq.eps, R(-1), tq.weight, R(1)) == rational(2 * q - 1, 2));
  }
  auto h = haar_decompose(haar_function<R>(DyadicInterval::unit()));
  CHECK(weak_type_ratio(h, EpsilonAssignment<R>::constant(R(1), 1), R(0), A1Weight<R>::unit(), R(1)) == rational(1, 2));
  auto zero = haar_decompose(StepFunction<R>::constant(R(0), 1));
  CHECK_THROWS_AS(weak_type_ratio(zero, EpsilonAssignment<R>::constant(R(1), 1), R(0), A1Weight<R>::unit(), R(1)),
                  ZeroDenominatorError);
  CHECK_THROWS_AS(weak_type_ratio(h, EpsilonAssignment<R>::constant(R(1), 1), R(0), A1Weight<R>::unit(), R(0)),
                  DomainError);
}

TEST_CASE("explicit extremal triple") {
  auto t = podpir_triple(R(0), rational(1, 2), R(2));
  CHECK(level_set_measure(t.psi, R(0), t.weight) == rational(3, 4));
  CHECK(is_subordinate(t.phi, t.psi));
  CHECK(subordination_audit(t.phi_expansion, t.eps));
  CHECK(t.phi == steps(2, {R(-1), R(0), R(0), R(1)}));

  // symbolic in x4: (2 x4 - 1) / 4 whenever 2 x3 + x1 >= 1
  for (auto x4 : {R(1), rational(3, 2), R(7), R(100)})
    for (auto [x1, x3] : {std::pair{R(0), rational(1, 2)}, std::pair{R(1), R(1)}, std::pair{rational(-1, 2), R(1)}})
      CHECK(level_set_measure(podpir_triple(x1, x3, x4).psi, R(0), podpir_triple(x1, x3, x4).weight) ==
            (R(2) * x4 - R(1)) / R(4));

  auto d = podpir_triple(R(1), R(1), R(1));
  CHECK(d.weight.function() == StepFunction<R>::constant(R(1), 2));
  CHECK(characteristic(d.weight) == 1);
  CHECK(bellman_point(d.phi, d.psi, d.weight) == BellmanPoint5<R>{R(1), R(-1), R(1), R(1), R(1)});
  CHECK_THROWS_AS(podpir_triple(R(1), rational(1, 2), R(2)), DomainError);
}

TEST_CASE("subordination audit on random SUB assignments") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> d(-8, 8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<R> v(8);
    for (auto& x : v) x = rational(d(rng), 2);
    auto e = haar_decompose(steps(3, v));
    EpsilonAssignment<R> eps;
    eps.mode = EpsilonMode::SUB;
    for (auto const& [J, c] : e.coeffs) eps.entries[J] = rational(d(rng), 8);
    CHECK(subordination_audit(e, eps));
    CHECK(is_subordinate(haar_reconstruct(e), apply_transform(e, eps, R(d(rng)))));
  }
  auto h = haar_decompose(haar_function<R>(DyadicInterval::unit()));
  CHECK_FALSE(is_subordinate(haar_reconstruct(h), steps(1, {R(-2), R(2)})));
}

TEST_CASE("exhaustive weak-type search agrees with the rational library path") {
  auto rep = weak_type_exhaustive(2, quant(), {rational(1, 2), R(1), R(2)}, R(2));
  CHECK(rep.violations == 0);
  CHECK(rep.coefficient_vectors == 343);
  CHECK(rep.max_ratio <= 2);

  // The reported maximizer reproduces its ratio through haar_decompose / apply_transform.
  int depth = 2;
  auto f = steps(depth, rep.worst_values);
  auto e = haar_decompose(f);
  EpsilonAssignment<R> eps;
  int idx = 0;
  for (int k = 0; k < depth; ++k)
    for (std::int64_t m = 0; m < (std::int64_t{1} << k); ++m, ++idx)
      eps.entries[{k, m}] = R(rep.worst_signs[static_cast<std::size_t>(idx)] == 0 ? 1 : rep.worst_signs[static_cast<std::size_t>(idx)]);
  CHECK(weak_type_ratio(e, eps, R(0), A1Weight<R>::unit(), rep.worst_lambda) == rep.max_ratio);

  // Random subset: the library ratio never exceeds 2 and never exceeds the search maximum.
  std::mt19937_64 rng(99);
  auto q = quant();
  for (int trial = 0; trial < 300; ++trial) {
    HaarExpansion<R> ex;
    ex.depth = 2;
    ex.mean = q[rng() % q.size()];
    EpsilonAssignment<R> ee;
    for (int k = 0; k < 2; ++k)
      for (std::int64_t m = 0; m < (std::int64_t{1} << k); ++m) {
        ex.coeffs[{k, m}] = q[rng() % q.size()];
        ee.entries[{k, m}] = R(rng() % 2 ? 1 : -1);
      }
    if (haar_reconstruct(ex) == StepFunction<R>::constant(R(0), 2)) continue;
    for (auto l : {rational(1, 2), R(1), R(2)}) {
      R r = weak_type_ratio(ex, ee, R(0), A1Weight<R>::unit(), l);
      CHECK(r <= rep.max_ratio);
    }
  }
}

TEST_CASE("transform witnesses replay exactly") {
  auto t = podpir_triple(R(0), rational(1, 2), R(4));
  Json eps = Json::array();
  for (auto const& [J, v] : t.eps.entries) eps.push_back({J.level, J.position, to_string(v)});
  Json j = {{"phi", haar_to_json(t.phi_expansion)},
            {"eps", eps},
            {"start", "-1"},
            {"weight", step_to_json(t.weight.function())},
            {"lambda", "1"},
            {"claims", {{"point", {"0", "-1", "1/2", "4", "1"}}, {"characteristic", "4"}, {"measure", "7/4"}, {"ratio", "7/2"}}}};
  auto r = replay_transform_witness(transform_witness_from_json(j));
  CHECK(r.ok);
  CHECK(r.measure == rational(7, 4));

  j["claims"]["ratio"] = "4";
  auto bad = replay_transform_witness(transform_witness_from_json(j));
  CHECK_FALSE(bad.ok);
  CHECK(bad.mismatches.size() == 1);
  CHECK_THROWS_AS(transform_witness_from_json(Json{{"phi", 3}}), MismatchError);
}
