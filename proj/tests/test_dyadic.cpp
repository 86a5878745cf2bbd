#include "bellman/dyadic.hpp"
#include "bellman/json_io.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace bellman;
using R = Rational;

namespace {

StepFunction<R> steps(int depth, std::vector<R> v) { return StepFunction<R>(depth, std::move(v)); }

StepFunction<R> random_step(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> num(-40, 40), den(1, 12);
  std::vector<R> v(std::size_t{1} << depth);
  for (auto& x : v) x = rational(num(rng), den(rng));
  return steps(depth, v);
}

// Independent oracle: (f, H_J) / |J| computed cell by cell from the definition.
R coefficient_oracle(StepFunction<R> const& f, DyadicInterval J) {
  int d = f.depth();
  R integral(0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    // cell i is [i/2^d, (i+1)/2^d); it lies in J at level J.level iff i >> (d - level) == position.
    std::int64_t owner = static_cast<std::int64_t>(i) >> (d - J.level);
    if (owner != J.position) continue;
    bool right = (static_cast<std::int64_t>(i) >> (d - J.level - 1)) & 1;
    integral += (right ? f[i] : R(-f[i])) / R(std::int64_t{1} << d);
  }
  return integral * R(std::int64_t{1} << J.level);
}

}  // namespace

TEST_CASE("dyadic intervals: children, parent, bounds") {
  auto J = DyadicInterval::make(2, 3);
  CHECK(J.left() == DyadicInterval{3, 6});
  CHECK(J.right() == DyadicInterval{3, 7});
  CHECK(J.left().parent() == J);
  CHECK(J.right().parent() == J);
  CHECK_THROWS_AS(DyadicInterval::make(2, 4), DomainError);
  CHECK_THROWS_AS(DyadicInterval::make(-1, 0), DomainError);
  CHECK_THROWS_AS(DyadicInterval::unit().parent(), DomainError);
  auto [lo, hi] = J.cells(4);
  CHECK(lo == 12);
  CHECK(hi == 16);
}

TEST_CASE("step functions: length, refinement, equality across depths") {
  CHECK_THROWS_AS(steps(2, {R(1), R(2)}), std::invalid_argument);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = random_step(rng, 3);
    auto g = f.refine(5);
    CHECK(g.depth() == 5);
    CHECK(f == g);
    for (int k = 0; k <= 3; ++k)
      for (std::int64_t m = 0; m < (std::int64_t{1} << k); ++m) CHECK(average(f, {k, m}) == average(g, {k, m}));
  }
}

TEST_CASE("average") {
  auto right = StepFunction<R>::indicator({1, 1}, 1);
  CHECK(average(right, DyadicInterval::unit()) == rational(1, 2));
  auto c = StepFunction<R>::constant(rational(7, 3), 3);
  for (int k = 0; k <= 3; ++k) CHECK(average(c, {k, 0}) == rational(7, 3));
  CHECK(average(steps(2, {R(-2), R(0), R(0), R(2)}), DyadicInterval::unit()) == 0);
  CHECK_THROWS_AS(average(right, DyadicInterval{2, 0}), LevelTooDeepError);
}

TEST_CASE("martingale difference") {
  auto right = StepFunction<R>::indicator({1, 1}, 1);
  CHECK(martingale_difference(right, DyadicInterval::unit()) == steps(1, {rational(-1, 2), rational(1, 2)}));
  auto c = StepFunction<R>::constant(R(5), 2);
  CHECK(martingale_difference(c, DyadicInterval::unit()) == StepFunction<R>::constant(R(0), 2));
  auto h = haar_function<R>(DyadicInterval::unit());
  CHECK(martingale_difference(h, DyadicInterval::unit()) == h);
  CHECK_THROWS_AS(martingale_difference(right, DyadicInterval{1, 0}), LevelTooDeepError);
}

TEST_CASE("haar decomposition examples") {
  auto right = StepFunction<R>::indicator({1, 1}, 1);
  auto e = haar_decompose(right);
  CHECK(e.mean == rational(1, 2));
  CHECK(e.coefficient(DyadicInterval::unit()) == rational(1, 2));

  auto c = haar_decompose(StepFunction<R>::constant(R(3), 3));
  CHECK(c.mean == 3);
  for (auto const& [J, v] : c.coeffs) CHECK(v == 0);

  auto h = haar_decompose(haar_function<R>(DyadicInterval::unit(), 2));
  CHECK(h.mean == 0);
  CHECK(h.coefficient(DyadicInterval::unit()) == 1);
  CHECK(h.coefficient({1, 0}) == 0);
  CHECK(h.coefficient({1, 1}) == 0);
}

TEST_CASE("haar reconstruction examples") {
  HaarExpansion<R> e;
  e.coeffs[DyadicInterval::unit()] = R(1);
  CHECK(haar_reconstruct(e) == steps(1, {R(-1), R(1)}));
  e.mean = rational(1, 2);
  e.coeffs[DyadicInterval::unit()] = rational(1, 2);
  CHECK(haar_reconstruct(e) == StepFunction<R>::indicator({1, 1}, 1));
  HaarExpansion<R> c;
  c.mean = rational(-4, 5);
  CHECK(haar_reconstruct(c) == StepFunction<R>::constant(rational(-4, 5)));
}

TEST_CASE("right half is the positive half") {
  for (int k = 0; k < 4; ++k)
    for (std::int64_t m = 0; m < (std::int64_t{1} << k); ++m) {
      DyadicInterval J{k, m};
      auto e = haar_decompose(StepFunction<R>::indicator(J.right(), 5));
      CHECK(e.coefficient(J) > 0);
    }
}

TEST_CASE("round trips, oracle coefficients, Parseval, telescoping") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    int depth = static_cast<int>(rng() % 9);
    auto f = random_step(rng, depth);
    auto e = haar_decompose(f);
    CHECK(haar_reconstruct(e) == f);
    CHECK(haar_decompose(haar_reconstruct(e)) == e);
    for (auto const& [J, c] : e.coeffs) REQUIRE(c == coefficient_oracle(f, J));

    // int f^2 = mean^2 + sum (f, h_J)^2
    R lhs = pointwise(f, [](R const& x) { return R(x * x); }).integral();
    R rhs = e.mean * e.mean;
    for (auto const& [J, c] : e.coeffs) rhs += e.h_coefficient_squared(J);
    CHECK(lhs == rhs);

    if (depth <= 6) {
      auto sum = StepFunction<R>::constant(e.mean, depth);
      for (int k = 0; k + 1 <= depth; ++k)
        for (std::int64_t m = 0; m < (std::int64_t{1} << k); ++m) sum = sum + martingale_difference(f, {k, m});
      CHECK(sum == f);
    }
  }
}

TEST_CASE("floating mode agrees with exact mode") {
  std::mt19937_64 rng(5);
  auto f = random_step(rng, 4);
  std::vector<double> v;
  for (auto const& x : f.values()) v.push_back(to_double(x));
  auto ed = haar_decompose(StepFunction<double>(4, v));
  auto er = haar_decompose(f);
  for (auto const& [J, c] : er.coeffs) CHECK(ed.coefficient(J) == Catch::Approx(to_double(c)).margin(1e-12));
  CHECK(er.h_coefficient({3, 1}) == Catch::Approx(to_double(er.coefficient({3, 1})) / std::sqrt(8.0)));
}

TEST_CASE("json forms of step functions and expansions") {
  auto f = steps(2, {rational(-1, 3), R(0), rational(5, 2), R(7)});
  CHECK(step_to_json(f).dump() == R"({"depth":2,"values":["-1/3","0","5/2","7"]})");
  CHECK(step_from_json(step_to_json(f)) == f);
  auto e = haar_decompose(f);
  CHECK(haar_from_json(haar_to_json(e)) == e);
}
