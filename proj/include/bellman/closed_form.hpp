#pragma once

#include "bellman/errors.hpp"
#include "bellman/finite_diff.hpp"
#include "bellman/rational.hpp"
#include "bellman/splits.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace bellman {

/// (x1, x2, x3) = (<phi>, <psi>, <|phi|>); the domain is |x1| <= x3.
template <Scalar T = double>
struct Point3 {
  T x1{0}, x2{0}, x3{0};
  bool operator==(Point3 const&) const = default;
};

/// y1 = (x1 + x2)/2, y2 = (x2 - x1)/2, y3 = x3.
template <Scalar T = double>
struct YPoint {
  T y1{0}, y2{0}, y3{0};

  static YPoint from_x(Point3<T> const& p) { return {(p.x1 + p.x2) / T(2), (p.x2 - p.x1) / T(2), p.x3}; }
  Point3<T> to_x() const { return {y1 - y2, y1 + y2, y3}; }
};

namespace detail {

template <Scalar T>
T domain_slack(T const& scale) {
  if constexpr (std::same_as<T, Rational>)
    return T(0);
  else
    return T(64) * std::numeric_limits<T>::epsilon() * std::max(T(1), scale);
}

template <Scalar T>
bool in_omega(Point3<T> const& p) {
  T a = abs_value(p.x1);
  return p.x3 >= a - domain_slack<T>(a);
}

}  // namespace detail

template <Scalar T>
bool in_omega(Point3<T> const& p) {
  return detail::in_omega(p);
}

/// The unweighted Bellman function:
///   1                                  if x3 + x2 >= 0
///   1 - (x3 + x2)^2 / (x2^2 - x1^2)    otherwise.
template <Scalar T>
T B_full(Point3<T> const& p) {
  if (!detail::in_omega(p)) throw DomainError("B_full: point outside |x1| <= x3");
  T s = p.x3 + p.x2;
  if (s >= 0) return T(1);
  T denom = p.x2 * p.x2 - p.x1 * p.x1;
  // x2 < -x3 <= -|x1| makes the denominator positive.
  if (!(denom > 0)) throw DomainError("B_full: nonpositive denominator x2^2 - x1^2");
  return T(1) - s * s / denom;
}

inline double B_full(double x1, double x2, double x3) { return B_full(Point3<double>{x1, x2, x3}); }

/// Restriction to the boundary x3 = |x1|.
template <Scalar T>
T B_boundary(T const& x1, T const& x2) {
  T a = abs_value(x1);
  if (x2 >= -a) return T(1);
  return T(2) * a / (a - x2);
}

/// The same function in y-coordinates: 1 - (y1 + y2 + y3)^2 / (4 y1 y2) when y1 + y2 + y3 < 0.
template <Scalar T>
T M_y(YPoint<T> const& y) {
  T gap = abs_value(T(y.y1 - y.y2));
  if (y.y3 < gap - detail::domain_slack<T>(gap)) throw DomainError("M_y: point outside y3 >= |y1 - y2|");
  T s = y.y1 + y.y2 + y.y3;
  if (s >= 0) return T(1);
  T prod = T(4) * y.y1 * y.y2;
  if (!(prod > 0)) throw DomainError("M_y: y1 y2 must be positive in the fan region");
  return T(1) - s * s / prod;
}

namespace detail {

inline void require_fan_interior(YPoint<double> const& y) {
  if (y.y1 * y.y2 == 0) throw DomainError("Hessian undefined at y1 y2 = 0");
  if (!(y.y1 < 0 && y.y2 < 0 && y.y1 + y.y2 + y.y3 < 0))
    throw DomainError("Hessian formula needs y1 < 0, y2 < 0, y1 + y2 + y3 < 0");
}

}  // namespace detail

/// (d^2 M / dy^2 xi, xi) in the fan region; nonpositive whenever xi1 xi2 <= 0.
inline double hessian_form(YPoint<double> const& y, std::array<double, 3> const& xi) {
  detail::require_fan_interior(y);
  double const y1 = y.y1, y2 = y.y2, y3 = y.y3;
  double lin = xi[2] - (y1 + y3) / y2 * xi[1] - (y2 + y3) / y1 * xi[0];
  double s = y1 + y2 + y3;
  return -lin * lin / (2 * y1 * y2) + s * s / (2 * y1 * y1 * y2 * y2) * xi[0] * xi[1];
}

/// Hessian matrix of M_y in the fan region.
///
/// The mixed entry M_{y1 y2} is (y1^2 + y2^2 - y3^2) / (4 y1^2 y2^2); this is the
/// value consistent with hessian_form and with direct differentiation.
inline std::array<std::array<double, 3>, 3> hessian_matrix(YPoint<double> const& y) {
  detail::require_fan_interior(y);
  double const y1 = y.y1, y2 = y.y2, y3 = y.y3;
  double m11 = -(y2 + y3) * (y2 + y3) / (2 * y1 * y1 * y1 * y2);
  double m22 = -(y1 + y3) * (y1 + y3) / (2 * y1 * y2 * y2 * y2);
  double m33 = -1.0 / (2 * y1 * y2);
  double m12 = (y1 * y1 + y2 * y2 - y3 * y3) / (4 * y1 * y1 * y2 * y2);
  double m13 = (y2 + y3) / (2 * y1 * y1 * y2);
  double m23 = (y1 + y3) / (2 * y1 * y2 * y2);
  return {{{m11, m12, m13}, {m12, m22, m23}, {m13, m23, m33}}};
}

namespace detail {

/// Stencil points must lie in the domain and on one side of the kink y1 + y2 + y3 = 0.
inline void require_smooth_stencil_y(std::vector<YPoint<double>> const& pts) {
  int below = 0;
  for (auto const& q : pts) {
    if (q.y3 < std::abs(q.y1 - q.y2)) throw StencilError("stencil leaves the domain y3 >= |y1 - y2|");
    if (q.y1 + q.y2 + q.y3 < 0) ++below;
  }
  if (below != 0 && below != static_cast<int>(pts.size()))
    throw StencilError("stencil straddles the surface y1 + y2 + y3 = 0");
}

}  // namespace detail

/// Finite-difference M_{11} M_{33} - M_{13}^2 at fixed y2 (indices are y1, y3).
inline double monge_ampere_residual(YPoint<double> const& y, double h) {
  if (!(h > 0)) throw DomainError("step must be positive");
  std::vector<YPoint<double>> pts;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b) pts.push_back({y.y1 + a * h, y.y2, y.y3 + b * h});
  detail::require_smooth_stencil_y(pts);
  auto f = [&](std::array<double, 2> const& q) { return M_y(YPoint<double>{q[0], y.y2, q[1]}); };
  std::array<double, 2> p{y.y1, y.y3};
  double m11 = fd::second_partial(f, p, 0, 0, h);
  double m33 = fd::second_partial(f, p, 1, 1, h);
  double m13 = fd::second_partial(f, p, 0, 1, h);
  return m11 * m33 - m13 * m13;
}

struct ExtremalLineReport {
  double k = 0, y2 = 0;
  double y1_min = 0, y1_max = 0;  ///< extent of the line inside the domain
  double slope = 0, intercept = 0;
  double expected_slope = 0;      ///< -(k + 1)^2 / (4 y2)
  double max_deviation = 0;       ///< from the least-squares line
};

/// Samples M_y along y3 = k y1 - y2 over its whole extent inside the domain
/// (from the apex y1 = 0 to the second boundary hit y1 = 2 y2 / (k + 1)) and
/// fits a line in y1.
inline ExtremalLineReport extremal_line_check(double k, double y2, int samples) {
  if (!(y2 < 0)) throw DomainError("extremal lines need y2 < 0");
  if (k < -1 || k > 1) throw DomainError("slope k must lie in [-1, 1]");
  if (samples < 2) throw DomainError("need at least two samples");
  ExtremalLineReport r;
  r.k = k;
  r.y2 = y2;
  r.expected_slope = -(k + 1) * (k + 1) / (4 * y2);
  r.y1_max = 0;
  // k = -1 is the upper edge y1 + y2 + y3 = 0, an infinite ray; sample a finite piece.
  r.y1_min = k > -1 ? 2 * y2 / (k + 1) : 4 * y2;
  std::vector<double> xs, vs;
  for (int i = 0; i < samples; ++i) {
    double t = static_cast<double>(i) / (samples - 1);
    double y1 = r.y1_min + t * (r.y1_max - r.y1_min);
    double y3 = k * y1 - y2;
    // The far endpoint lies on the boundary; snap rounding back onto it.
    y3 = std::max(y3, std::abs(y1 - y2));
    xs.push_back(y1);
    vs.push_back(M_y(YPoint<double>{y1, y2, y3}));
  }
  double n = samples, sx = 0, sv = 0;
  for (int i = 0; i < samples; ++i) sx += xs[i], sv += vs[i];
  double mx = sx / n, mv = sv / n, sxx = 0, sxv = 0;
  for (int i = 0; i < samples; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxv += (xs[i] - mx) * (vs[i] - mv);
  }
  r.slope = sxv / sxx;
  r.intercept = mv - r.slope * mx;
  for (int i = 0; i < samples; ++i)
    r.max_deviation = std::max(r.max_deviation, std::abs(vs[i] - (r.intercept + r.slope * xs[i])));
  return r;
}

enum class TransformClass { PM, SUB };

/// B(midpoint) - (B(x+) + B(x-)) / 2 for an admissible pair.
inline double main_inequality_check(Point3<double> const& xplus, Point3<double> const& xminus, TransformClass mode) {
  if (!in_omega(xplus) || !in_omega(xminus)) throw ConstraintError("split endpoints must lie in the domain");
  double d1 = std::abs(xplus.x1 - xminus.x1);
  double d2 = std::abs(xplus.x2 - xminus.x2);
  double slack = 1e-12 * std::max(1.0, std::max(d1, d2));
  if (mode == TransformClass::PM && std::abs(d1 - d2) > slack)
    throw ConstraintError("PM split needs |x2+ - x2-| = |x1+ - x1-|");
  if (mode == TransformClass::SUB && d2 > d1 + slack) throw ConstraintError("SUB split needs |x2+ - x2-| <= |x1+ - x1-|");
  Point3<double> mid{(xplus.x1 + xminus.x1) / 2, (xplus.x2 + xminus.x2) / 2, (xplus.x3 + xminus.x3) / 2};
  return B_full(mid) - 0.5 * (B_full(xplus) + B_full(xminus));
}

/// Lower bound forced on any Bellman candidate at (x1, x2, |x1|) by constant pairs.
inline double unweighted_obstacle(Point3<double> const& p) { return p.x2 >= 0 ? 1.0 : 0.0; }

struct SupersolutionOptions {
  std::size_t pair_samples = 20000;
  std::size_t boundary_samples = 2000;
  std::uint64_t seed = 1;
  double tolerance = 1e-9;
  double extent = 4.0;  ///< sampling box: |x2| <= extent, x3 <= extent
  SplitSetSpec splits{};
  std::size_t max_recorded = 20;
};

struct SupersolutionViolation {
  enum class Kind { Obstacle, MainInequality } kind{};
  Point3<double> point{};   ///< boundary point or midpoint
  Point3<double> xplus{}, xminus{};
  double residual = 0;
};

struct SupersolutionReport {
  bool passed = true;
  std::size_t pair_samples = 0;
  std::size_t boundary_samples = 0;
  double min_residual = std::numeric_limits<double>::infinity();
  double min_obstacle_margin = std::numeric_limits<double>::infinity();
  std::size_t violation_count = 0;
  std::vector<SupersolutionViolation> violations;
};

/// Checks the obstacle condition on boundary samples and the midpoint
/// inequality on sampled SUB-admissible splits whose directions come from the
/// same quantized split set the grid dynamic programme uses.
template <typename Candidate, typename Obstacle = double (*)(Point3<double> const&)>
SupersolutionReport supersolution_verify(Candidate const& candidate, SupersolutionOptions const& opt = {},
                                         Obstacle const& obstacle = &unweighted_obstacle) {
  SupersolutionReport rep;
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto record = [&](SupersolutionViolation v) {
    rep.passed = false;
    ++rep.violation_count;
    if (rep.violations.size() < opt.max_recorded) rep.violations.push_back(v);
  };

  // Obstacle: fixed anchors first so failures are reproducible, then random boundary points.
  std::vector<Point3<double>> boundary = {{1, 0, 1}, {0, 0, 0}, {-1, 2, 1}, {2, -1, 2}, {0, -1, 0}};
  for (std::size_t i = 0; i < opt.boundary_samples; ++i) {
    double x1 = (2 * unit(rng) - 1) * opt.extent;
    double x2 = (2 * unit(rng) - 1) * opt.extent;
    boundary.push_back({x1, x2, std::abs(x1)});
  }
  for (auto const& b : boundary) {
    double margin = static_cast<double>(candidate(b)) - obstacle(b);
    if (!std::isfinite(margin)) margin = -std::numeric_limits<double>::infinity();
    rep.min_obstacle_margin = std::min(rep.min_obstacle_margin, margin);
    if (margin < -opt.tolerance) record({SupersolutionViolation::Kind::Obstacle, b, b, b, margin});
  }
  rep.boundary_samples = boundary.size();

  auto moves = make_split_set(opt.splits);
  std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
  std::size_t accepted = 0;
  std::size_t attempts = 0;
  while (accepted < opt.pair_samples && attempts < 50 * opt.pair_samples + 1000) {
    ++attempts;
    double x3 = unit(rng) * opt.extent;
    Point3<double> x{(2 * unit(rng) - 1) * x3, (2 * unit(rng) - 1) * opt.extent, x3};
    SplitMove m = moves[pick(rng)];
    if (!m.sub_admissible() || (m.d1 == 0 && m.d3 == 0)) continue;
    double r = unit(rng);
    Point3<double> xp{x.x1 + r * m.d1, x.x2 + r * m.d2, x.x3 + r * m.d3};
    Point3<double> xm{x.x1 - r * m.d1, x.x2 - r * m.d2, x.x3 - r * m.d3};
    if (xp.x3 < std::abs(xp.x1) || xm.x3 < std::abs(xm.x1)) continue;
    ++accepted;
    double res = static_cast<double>(candidate(x)) -
                 0.5 * (static_cast<double>(candidate(xp)) + static_cast<double>(candidate(xm)));
    if (!std::isfinite(res)) res = -std::numeric_limits<double>::infinity();
    rep.min_residual = std::min(rep.min_residual, res);
    if (res < -opt.tolerance) record({SupersolutionViolation::Kind::MainInequality, x, xp, xm, res});
  }
  rep.pair_samples = accepted;
  return rep;
}

/// Finite-difference x1 B_1 + x2 B_2 + x3 B_3, which vanishes by 0-homogeneity.
inline double euler_identity_residual(Point3<double> const& p, double h, double singular_margin = 1e-3) {
  if (!(h > 0)) throw DomainError("step must be positive");
  if (std::abs(p.x1) < singular_margin && p.x3 < singular_margin)
    throw StencilError("too close to the singular line x1 = x3 = 0");
  std::array<double, 3> c{p.x1, p.x2, p.x3};
  int below = 0, total = 0;
  for (std::size_t i = 0; i < 3; ++i)
    for (double s : {-h, h}) {
      auto q = c;
      q[i] += s;
      if (q[2] < std::abs(q[0])) throw StencilError("stencil leaves the domain |x1| <= x3");
      if (q[2] + q[1] < 0) ++below;
      ++total;
    }
  if (p.x3 + p.x2 < 0) ++below;
  ++total;
  if (below != 0 && below != total) throw StencilError("stencil straddles the surface x3 + x2 = 0");
  auto f = [](std::array<double, 3> const& q) { return B_full(q[0], q[1], q[2]); };
  double r = 0;
  for (std::size_t i = 0; i < 3; ++i) r += c[i] * fd::first_partial(f, c, i, h);
  return r;
}

}  // namespace bellman
