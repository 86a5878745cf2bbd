#pragma once

#include "bellman/closed_form.hpp"
#include "bellman/errors.hpp"
#include "bellman/finite_diff.hpp"
#include "bellman/grid.hpp"
#include "bellman/parallel.hpp"
#include "bellman/rational.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace bellman {

/// Slice coordinates (x1, x3, x4) of the plane x2 = -1, x5 = 1.
struct SlicePoint {
  double x1 = 0, x3 = 0, x4 = 1;
  bool operator==(SlicePoint const&) const = default;
};

template <Scalar T>
struct Point5 {
  T x1{0}, x2{0}, x3{0}, x4{1}, x5{1};
};

template <Scalar T>
struct NormalizedPoint {
  T x1{0}, x3{0}, x4{1};
  T scale{1};
};

/// B(c) = scale * B(x1', -1, x3', x4', 1) with (x1', x3', x4') the returned slice point.
template <Scalar T>
NormalizedPoint<T> normalize(Point5<T> const& c) {
  if (!(c.x2 < 0)) throw DomainError("normalization needs x2 < 0; use the exact value x4 instead");
  if (!(c.x5 > 0)) throw DomainError("normalization needs x5 > 0");
  if (c.x3 < abs_value(c.x1) * c.x5 || c.x4 < c.x5) throw DomainError("point outside the weighted domain");
  return {T(-c.x1 / c.x2), T(-c.x3 / (c.x2 * c.x5)), T(c.x4 / c.x5), c.x5};
}

/// Children (x1 +- d1, -1 +- d2, x3 +- d3, x4 +- d4, s+/s-) of a slice point; min(s+, s-) must be 1.
struct WeightedSplit {
  double d1 = 0, d2 = 0, d3 = 0, d4 = 0;
  double s_plus = 1, s_minus = 1;
};

struct WeightedSplitSpec {
  std::vector<double> d1 = {0.5, 1.0};
  std::vector<double> d2_fractions = {0.0, 1.0, -1.0};
  std::vector<double> d3 = {0.0, 0.5, -0.5};
  std::vector<double> d4_fractions = {0.0, 0.25, -0.25};  ///< d4 = fraction * (Q - 1)
  std::vector<double> s_ratios = {1.0, 2.0};              ///< s+ = 1, s- = r and the mirrored pair
};

inline std::vector<WeightedSplit> make_weighted_split_set(WeightedSplitSpec const& spec, double Q) {
  std::vector<WeightedSplit> moves;
  std::vector<std::pair<double, double>> scales;
  for (double r : spec.s_ratios) {
    if (!(r >= 1)) throw ConstraintError("x5 ratios must be >= 1");
    scales.emplace_back(1.0, r);
    if (r != 1.0) scales.emplace_back(r, 1.0);
  }
  for (double d1 : spec.d1)
    for (double f : spec.d2_fractions) {
      if (std::abs(f) > 1) throw ConstraintError("weighted split with |d2| > |d1|");
      for (double d3 : spec.d3)
        for (double g : spec.d4_fractions)
          for (auto [sp, sm] : scales) moves.push_back({d1, f * d1, d3, g * (Q - 1), sp, sm});
    }
  return moves;
}

/// Lower-bound lookup of the weighted slice function; evenness in x1, clamping in x3.
inline double weighted_lookup(GridFunction<3> const& V, double x1, double x3, double x4) {
  double top = V.axis(1).back();
  auto const& a4 = V.axis(2);
  x1 = std::abs(x1);
  if (x1 > top) return 0.0;
  x3 = std::min(x3, top);
  x1 = std::min(x1, x3);
  // x4 / x5 stays in [1, Q] for domain points; absorb rounding only.
  if (x4 < a4.front() - 1e-9 || x4 > a4.back() + 1e-9) throw DomainError("weighted lookup outside 1 <= x4 <= Q");
  x4 = std::clamp(x4, a4.front(), a4.back());
  return V.interpolate({x1, x3, x4});
}

inline double weighted_child_value(GridFunction<3> const& V, double c1, double c2, double c3, double c4, double s) {
  if (c2 >= 0) return c4;  // psi frozen at c2 >= 0: the whole weighted mass counts
  double tau = -1.0 / c2;
  return s * weighted_lookup(V, c1 * tau, c3 * tau / s, c4 / s);
}

/// Midpoint value of a split at slice point x, or nullopt when a child leaves the domain.
inline std::optional<double> weighted_split_value(GridFunction<3> const& V, SlicePoint const& x, WeightedSplit const& m,
                                                  double Q) {
  if (std::min(m.s_plus, m.s_minus) != 1.0) return std::nullopt;
  if (std::abs(m.d2) > std::abs(m.d1)) return std::nullopt;
  double p1 = x.x1 + m.d1, p3 = x.x3 + m.d3, p4 = x.x4 + m.d4;
  double q1 = x.x1 - m.d1, q3 = x.x3 - m.d3, q4 = x.x4 - m.d4;
  auto inside = [Q](double c1, double c3, double c4, double s) {
    return c3 >= std::abs(c1) * s && c4 >= s && c4 <= Q * s * (1 + 1e-12);
  };
  if (!inside(p1, p3, p4, m.s_plus) || !inside(q1, q3, q4, m.s_minus)) return std::nullopt;
  return 0.5 * (weighted_child_value(V, p1, -1.0 + m.d2, p3, p4, m.s_plus) +
                weighted_child_value(V, q1, -1.0 - m.d2, q3, q4, m.s_minus));
}

struct DpWeightedOptions {
  double Q = 4;
  std::size_t n13 = 65;  ///< nodes per axis for x1 and x3 on [0, x3max]
  std::size_t n4 = 33;   ///< nodes for x4 on [1, Q]
  double x3max = 2.0;
  int iterations = 2;
  WeightedSplitSpec splits{};
  bool seeded = true;
  unsigned threads = 1;
  bool keep_history = false;
};

struct DpWeightedResult {
  GridFunction<3> value;
  std::vector<GridFunction<3>> history;
};

inline DpWeightedResult dp_weighted(DpWeightedOptions const& opt) {
  if (!(opt.Q >= 1)) throw DomainError("Q must be >= 1");
  if (opt.iterations < 0) throw DomainError("iteration count must be nonnegative");
  auto a13 = uniform_axis(0.0, opt.x3max, opt.n13);
  // Q == 1 degenerates to the constant-weight face; keep a nonzero-width axis.
  auto a4 = uniform_axis(1.0, std::max(opt.Q, 1.0 + 1e-9), opt.n4);
  GridFunction<3> V({a13, a13, a4}, /*wedge=*/true, 0.0);
  std::size_t n = opt.n13, m4 = opt.n4;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i <= j; ++i) V.at({i, j, 0}) = B_full(a13[i], -1.0, a13[j]);

  auto moves = make_weighted_split_set(opt.splits, opt.Q);
  DpWeightedResult result;
  if (opt.keep_history) result.history.push_back(V);

  for (int it = 0; it < opt.iterations; ++it) {
    GridFunction<3> next = V;
    // Planes (x3, x4) are independent; parallelize over the flattened plane index.
    parallel_for(0, n * m4, opt.threads, [&](std::size_t plane) {
      std::size_t j = plane / m4, k = plane % m4;
      for (std::size_t i = 0; i <= j; ++i) {
        SlicePoint x{a13[i], a13[j], a4[k]};
        double best = V.at({i, j, k});
        auto consider = [&](WeightedSplit const& mv) {
          auto v = weighted_split_value(V, x, mv, opt.Q);
          if (!v) return;
          if (std::isnan(*v)) throw std::runtime_error("NaN in dp_weighted");
          best = std::max(best, *v);
        };
        for (auto const& mv : moves) consider(mv);
        if (opt.seeded && x.x3 > 0) {
          // Root split of the depth-2 extremal triple: both children on the boundary.
          consider({x.x3, x.x3, x.x1, 0.0, 1.0, 1.0});
          consider({x.x3, -x.x3, x.x1, 0.0, 1.0, 1.0});
          // Boundary nodes: move all the extra weight onto a child with phi = 0.
          if (i == j && x.x4 > 1) {
            double p = x.x1;
            consider({p, -p, p, 1.0 - x.x4, 1.0, 2.0 * x.x4 - 1.0});
          }
        }
        next.at({i, j, k}) = best;
      }
    });
    V = std::move(next);
    if (opt.keep_history) result.history.push_back(V);
  }
  result.value = std::move(V);
  return result;
}

struct RStatistic {
  double value = 0;
  SlicePoint argmax{};
};

/// max over grid nodes with x3 > 0 of V / x3.
inline RStatistic R_statistic(GridFunction<3> const& V) {
  if (V.size() == 0) throw DomainError("R statistic of an empty grid");
  RStatistic r;
  bool any = false;
  for (std::size_t f = 0; f < V.size(); ++f) {
    auto idx = V.unflat(f);
    if (!V.in_domain(idx)) continue;
    auto p = V.node(idx);
    if (!(p[1] > 0)) continue;
    double ratio = V[f] / p[1];
    if (!any || ratio > r.value) {
      r.value = ratio;
      r.argmax = {p[0], p[1], p[2]};
      any = true;
    }
  }
  if (!any) throw DomainError("R statistic needs a node with x3 > 0");
  return r;
}

// ---------------------------------------------------------------------------
// Averaging diagnostics.
// ---------------------------------------------------------------------------

using SliceFunction = std::function<double(SlicePoint const&)>;

inline SliceFunction as_slice_function(GridFunction<3> const& V) {
  return [&V](SlicePoint const& p) { return weighted_lookup(V, p.x1, p.x3, p.x4); };
}

/// 2 * int_{1/2}^{1} F(x1, t x3, t x4) dt by the trapezoid rule.
inline double beta(SliceFunction const& F, SlicePoint const& x, int steps = 256) {
  if (steps < 1) throw DomainError("beta needs at least one step");
  if (x.x4 / 2 < 1 - 1e-12) throw DomainError("beta needs t x4 >= 1 on [1/2, 1]");
  double h = 0.5 / steps;
  double sum = 0.5 * (F({x.x1, 0.5 * x.x3, 0.5 * x.x4}) + F(x));
  for (int s = 1; s < steps; ++s) {
    double t = 0.5 + s * h;
    sum += F({x.x1, t * x.x3, t * x.x4});
  }
  return 2.0 * h * sum;
}

/// x3^2 F33 + 2 x3 x4 F34 + x4^2 F44 by central differences.
inline double gamma_op(SliceFunction const& F, SlicePoint const& x, double h) {
  if (!(h > 0)) throw StencilError("gamma stencil needs h > 0");
  if (x.x3 - h < std::abs(x.x1)) throw StencilError("gamma stencil leaves |x1| <= x3");
  auto f = [&F, &x](std::array<double, 2> const& q) { return F({x.x1, q[0], q[1]}); };
  std::array<double, 2> p{x.x3, x.x4};
  double f33 = fd::second_partial(f, p, 0, 0, h);
  double f34 = fd::second_partial(f, p, 0, 1, h);
  double f44 = fd::second_partial(f, p, 1, 1, h);
  return x.x3 * x.x3 * f33 + 2.0 * x.x3 * x.x4 * f34 + x.x4 * x.x4 * f44;
}

struct FindAReport {
  bool found = false;
  double root = 0;
  double beta_at_hi = 0;  ///< beta(0, hi, x4); below x4 / 8 means no crossing
  int iterations = 0;
};

/// Root of beta(0, a, x4) = x4 / 8 on (lo, hi] by bisection.
inline FindAReport find_a(SliceFunction const& F, double x4, int steps = 4096, double tol = 1e-10, double lo = 0.0,
                          double hi = 1.0) {
  FindAReport rep;
  double target = x4 / 8;
  auto g = [&](double a) { return beta(F, {0.0, a, x4}, steps) - target; };
  double glo = g(lo), ghi = g(hi);
  rep.beta_at_hi = ghi + target;
  if (ghi < 0 || glo > 0) return rep;
  while (hi - lo > tol && rep.iterations < 200) {
    double mid = 0.5 * (lo + hi);
    if (g(mid) < 0)
      lo = mid;
    else
      hi = mid;
    ++rep.iterations;
  }
  rep.found = true;
  rep.root = 0.5 * (lo + hi);
  return rep;
}

struct Main1Sample {
  SlicePoint x{};
  double lhs = 0;  ///< -gamma_beta(x)
  double rhs = 0;  ///< 8 R (|x1| + x3 / x4)
  double margin = 0;
  bool pass = false;
};

struct Main1Report {
  std::vector<Main1Sample> samples;
  std::size_t passed = 0;
  double pass_fraction = 0;
};

inline SliceFunction beta_function(SliceFunction const& F, int steps) {
  return [F, steps](SlicePoint const& p) { return beta(F, p, steps); };
}

/// -gamma_beta(x) <= 8 R (|x1| + x3/x4) at each sample; failures read as depth insufficiency.
inline Main1Report diagnostics_main1(SliceFunction const& F, std::vector<SlicePoint> const& samples, double R,
                                     double h = 1e-2, int steps = 128) {
  Main1Report rep;
  auto b = beta_function(F, steps);
  for (auto const& x : samples) {
    if (std::abs(x.x1) > x.x3 / 4 || x.x4 < 4) throw DomainError("main1 samples need |x1| <= x3/4 and x4 >= 4");
    Main1Sample s;
    s.x = x;
    s.lhs = -gamma_op(b, x, h);
    s.rhs = 8.0 * R * (std::abs(x.x1) + x.x3 / x.x4);
    s.margin = s.rhs - s.lhs;
    s.pass = s.margin >= 0;
    rep.passed += s.pass ? 1 : 0;
    rep.samples.push_back(s);
  }
  rep.pass_fraction = rep.samples.empty() ? 1.0 : static_cast<double>(rep.passed) / rep.samples.size();
  return rep;
}

/// Right-hand side m(x3, x4) of the derivative bound at the root a = a(x4).
inline double hx3_bound(double x3, double x4, double R, double a) {
  return std::max((x4 - 16.0 * R * x3) / (16.0 * a), x4 / 8.0);
}

/// Piecewise form of the same bound, switching at x3 = (1 - 2a) x4 / (16 R).
inline double hx3_bound_piecewise(double x3, double x4, double R, double a) {
  if (x3 <= (1.0 - 2.0 * a) * x4 / (16.0 * R)) return (x4 - 16.0 * R * x3) / (16.0 * a);
  return x4 / 8.0;
}

struct Hx3Sample {
  SlicePoint x{};
  double beta_x3 = 0;
  double m = 0;
  double margin = 0;
  bool pass = false;
};

struct Hx3Report {
  double a = 0;
  bool a_found = false;
  std::vector<Hx3Sample> samples;
  std::size_t passed = 0;
};

/// beta_x3(x) >= m(x3, x4) on samples with 4|x1| <= x3 <= a(x4), 2 <= x4 <= Q.
inline Hx3Report diagnostics_hx3(SliceFunction const& F, double x4, double R, std::vector<double> const& x3_fractions,
                                 double h = 1e-3, int steps = 128) {
  Hx3Report rep;
  auto root = find_a(F, x4, steps);
  rep.a_found = root.found;
  rep.a = root.root;
  if (!root.found || rep.a <= 0) return rep;
  auto b = beta_function(F, steps);
  for (double fr : x3_fractions) {
    double x3 = fr * rep.a;
    if (x3 - h <= 0) continue;
    Hx3Sample s;
    s.x = {0.0, x3, x4};
    s.beta_x3 = (b({0.0, x3 + h, x4}) - b({0.0, x3 - h, x4})) / (2 * h);
    s.m = hx3_bound(x3, x4, R, rep.a);
    s.margin = s.beta_x3 - s.m;
    s.pass = s.margin >= 0;
    rep.passed += s.pass ? 1 : 0;
    rep.samples.push_back(s);
  }
  return rep;
}

/// f(t) = 16 (1 + t/4) log(1 + t/4) - 4t - t log t.
inline double elementary_f(double t) { return 16.0 * (1.0 + t / 4) * std::log1p(t / 4) - 4.0 * t - t * std::log(t); }
inline double elementary_f2(double t) { return (3.0 * t - 4.0) / (t * (t + 4.0)); }

struct ElementaryReport {
  bool passed = true;
  double f_at_4 = 0;
  double f_at_4_closed = 0;  ///< 8 log(8 / e^2)
  double f2_at_4 = 0;
  double min_f = 0;
  double min_f_at = 0;
  double max_f2_error = 0;  ///< |finite-difference f'' - closed form|, relative
  int samples = 0;
};

inline ElementaryReport elementary_inequality_check(double tmin, double tmax, int samples) {
  if (tmin < 4) throw DomainError("the elementary inequality is checked on t >= 4");
  if (!(tmax >= tmin) || samples < 2) throw DomainError("need tmax >= tmin and at least two samples");
  ElementaryReport rep;
  rep.samples = samples;
  rep.f_at_4 = elementary_f(4.0);
  rep.f_at_4_closed = 8.0 * std::log(8.0 / std::exp(2.0));
  rep.f2_at_4 = elementary_f2(4.0);
  rep.passed = rep.f_at_4 > 0 && std::abs(rep.f_at_4 - rep.f_at_4_closed) < 1e-12 && rep.f2_at_4 > 0;
  double l0 = std::log(tmin), l1 = std::log(tmax);
  rep.min_f = elementary_f(tmin);
  rep.min_f_at = tmin;
  for (int s = 0; s < samples; ++s) {
    double t = std::exp(l0 + (l1 - l0) * s / (samples - 1));
    double f = elementary_f(t);
    if (f < rep.min_f) {
      rep.min_f = f;
      rep.min_f_at = t;
    }
    if (!(f > 0) || !(elementary_f2(t) > 0)) rep.passed = false;
    double h = 1e-3 * t;
    double fd2 = (elementary_f(t + h) - 2 * f + elementary_f(t - h)) / (h * h);
    double exact = elementary_f2(t);
    rep.max_f2_error = std::max(rep.max_f2_error, std::abs(fd2 - exact) / std::abs(exact));
  }
  return rep;
}

struct ConcavityReport {
  std::size_t segments = 0;
  std::size_t violations = 0;
  double min_residual = 0;
};

/// Midpoint residual V(mid) - (V(a) + V(b)) / 2 over random segments inside the grid domain.
inline ConcavityReport concavity_spot_check(GridFunction<3> const& V, std::size_t segments, double tol,
                                            std::uint64_t seed = 1) {
  ConcavityReport rep;
  std::mt19937_64 rng(seed);
  double top = V.axis(1).back();
  auto const& a4 = V.axis(2);
  std::uniform_real_distribution<double> u3(0.0, top), u4(a4.front(), a4.back()), u(0.0, 1.0);
  auto sample = [&] {
    double x3 = u3(rng);
    return SlicePoint{(2 * u(rng) - 1) * x3, x3, u4(rng)};
  };
  bool first = true;
  while (rep.segments < segments) {
    auto a = sample(), b = sample();
    SlicePoint mid{(a.x1 + b.x1) / 2, (a.x3 + b.x3) / 2, (a.x4 + b.x4) / 2};
    double r = weighted_lookup(V, mid.x1, mid.x3, mid.x4) -
               0.5 * (weighted_lookup(V, a.x1, a.x3, a.x4) + weighted_lookup(V, b.x1, b.x3, b.x4));
    if (first || r < rep.min_residual) rep.min_residual = r;
    first = false;
    if (r < -tol) ++rep.violations;
    ++rep.segments;
  }
  return rep;
}

}  // namespace bellman
