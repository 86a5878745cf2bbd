#pragma once

#include "bellman/errors.hpp"
#include "bellman/rational.hpp"

#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bellman {

/// [position / 2^level, (position + 1) / 2^level). The right half is J+.
struct DyadicInterval {
  int level = 0;
  std::int64_t position = 0;

  static DyadicInterval make(int level, std::int64_t position) {
    if (level < 0 || level > 62) throw DomainError("dyadic level out of range: " + std::to_string(level));
    if (position < 0 || position >= (std::int64_t{1} << level))
      throw DomainError("dyadic position " + std::to_string(position) + " out of range at level " + std::to_string(level));
    return {level, position};
  }

  static DyadicInterval unit() { return {0, 0}; }

  DyadicInterval left() const { return {level + 1, 2 * position}; }
  DyadicInterval right() const { return {level + 1, 2 * position + 1}; }
  DyadicInterval parent() const {
    if (level == 0) throw DomainError("the unit interval has no parent");
    return {level - 1, position / 2};
  }

  /// Cells of a depth-n partition covered by this interval, as [first, last).
  std::pair<std::int64_t, std::int64_t> cells(int depth) const {
    std::int64_t span = std::int64_t{1} << (depth - level);
    return {position * span, (position + 1) * span};
  }

  auto operator<=>(DyadicInterval const&) const = default;
};

/// A function on [0,1) constant on the 2^depth dyadic cells of one level.
template <Scalar T>
class StepFunction {
 public:
  StepFunction() : values_(1, T(0)) {}

  StepFunction(int depth, std::vector<T> values) : depth_(depth), values_(std::move(values)) {
    if (depth < 0 || depth > 30) throw DomainError("step function depth out of range");
    if (values_.size() != (std::size_t{1} << depth))
      throw std::invalid_argument("step function of depth " + std::to_string(depth) + " needs " +
                                  std::to_string(std::size_t{1} << depth) + " values, got " + std::to_string(values_.size()));
  }

  static StepFunction constant(T c, int depth = 0) { return StepFunction(depth, std::vector<T>(std::size_t{1} << depth, c)); }

  /// Indicator of a dyadic interval, represented at depth max(J.level, depth).
  static StepFunction indicator(DyadicInterval J, int depth = 0) {
    int d = std::max(J.level, depth);
    std::vector<T> v(std::size_t{1} << d, T(0));
    auto [lo, hi] = J.cells(d);
    for (auto i = lo; i < hi; ++i) v[static_cast<std::size_t>(i)] = T(1);
    return StepFunction(d, std::move(v));
  }

  int depth() const { return depth_; }
  std::size_t size() const { return values_.size(); }
  std::vector<T> const& values() const { return values_; }
  T const& operator[](std::size_t i) const { return values_[i]; }

  /// Same function on a finer partition; every dyadic average is unchanged.
  StepFunction refine(int depth) const {
    if (depth < depth_) throw DomainError("cannot refine to a coarser depth");
    if (depth == depth_) return *this;
    std::size_t rep = std::size_t{1} << (depth - depth_);
    std::vector<T> v;
    v.reserve(values_.size() * rep);
    for (auto const& x : values_)
      for (std::size_t k = 0; k < rep; ++k) v.push_back(x);
    return StepFunction(depth, std::move(v));
  }

  T integral() const {
    T s(0);
    for (auto const& x : values_) s += x;
    return s / T(static_cast<long long>(values_.size()));
  }

  bool operator==(StepFunction const& o) const {
    int d = std::max(depth_, o.depth_);
    return refine(d).values_ == o.refine(d).values_;
  }

 private:
  int depth_ = 0;
  std::vector<T> values_;
};

template <Scalar T>
StepFunction<T> operator+(StepFunction<T> const& a, StepFunction<T> const& b) {
  int d = std::max(a.depth(), b.depth());
  auto ra = a.refine(d);
  auto rb = b.refine(d);
  std::vector<T> v(ra.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = ra[i] + rb[i];
  return StepFunction<T>(d, std::move(v));
}

/// Pointwise map, e.g. |f| or f*w.
template <Scalar T, typename F>
StepFunction<T> pointwise(StepFunction<T> const& f, F&& op) {
  std::vector<T> v;
  v.reserve(f.size());
  for (auto const& x : f.values()) v.push_back(op(x));
  return StepFunction<T>(f.depth(), std::move(v));
}

template <Scalar T, typename F>
StepFunction<T> pointwise(StepFunction<T> const& f, StepFunction<T> const& g, F&& op) {
  int d = std::max(f.depth(), g.depth());
  auto rf = f.refine(d);
  auto rg = g.refine(d);
  std::vector<T> v(rf.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = op(rf[i], rg[i]);
  return StepFunction<T>(d, std::move(v));
}

template <Scalar T>
T average(StepFunction<T> const& f, DyadicInterval J) {
  if (J.level > f.depth())
    throw LevelTooDeepError("interval level " + std::to_string(J.level) + " exceeds function depth " + std::to_string(f.depth()));
  auto [lo, hi] = J.cells(f.depth());
  T s(0);
  for (auto i = lo; i < hi; ++i) s += f[static_cast<std::size_t>(i)];
  return s / T(static_cast<long long>(hi - lo));
}

template <Scalar T>
T minimum(StepFunction<T> const& f, DyadicInterval J) {
  if (J.level > f.depth()) throw LevelTooDeepError("interval level exceeds function depth");
  auto [lo, hi] = J.cells(f.depth());
  T m = f[static_cast<std::size_t>(lo)];
  for (auto i = lo + 1; i < hi; ++i) m = std::min(m, f[static_cast<std::size_t>(i)]);
  return m;
}

/// Delta_J f = 1/2 (<f>_{J+} - <f>_{J-}) (chi_{J+} - chi_{J-}).
template <Scalar T>
StepFunction<T> martingale_difference(StepFunction<T> const& f, DyadicInterval J) {
  if (J.level + 1 > f.depth())
    throw LevelTooDeepError("martingale difference needs depth > " + std::to_string(J.level) + ", function has " +
                            std::to_string(f.depth()));
  T half = (average(f, J.right()) - average(f, J.left())) / T(2);
  std::vector<T> v(f.size(), T(0));
  auto [llo, lhi] = J.left().cells(f.depth());
  auto [rlo, rhi] = J.right().cells(f.depth());
  for (auto i = llo; i < lhi; ++i) v[static_cast<std::size_t>(i)] = -half;
  for (auto i = rlo; i < rhi; ++i) v[static_cast<std::size_t>(i)] = half;
  return StepFunction<T>(f.depth(), std::move(v));
}

/// Mean plus Haar coefficients.
///
/// Coefficients are stored against the L-infinity normalized Haar functions
/// H_J (+1 on the right half of J, -1 on the left), so that
/// f = mean + sum_J coeff_J H_J and every coefficient of a rational step
/// function is rational. The L2-normalized coefficient is (f, h_J) = coeff_J |J|^{1/2};
/// use h_coefficient_squared() for exact Parseval-type identities.
template <Scalar T>
struct HaarExpansion {
  T mean{0};
  std::map<DyadicInterval, T> coeffs;
  int depth = 0;

  T coefficient(DyadicInterval J) const {
    auto it = coeffs.find(J);
    return it == coeffs.end() ? T(0) : it->second;
  }

  /// (f, h_J)^2 = coeff_J^2 |J|.
  T h_coefficient_squared(DyadicInterval J) const {
    T c = coefficient(J);
    return c * c / T(static_cast<long long>(std::int64_t{1} << J.level));
  }

  /// (f, h_J) in floating point.
  double h_coefficient(DyadicInterval J) const {
    return to_double(coefficient(J)) * std::pow(2.0, -0.5 * J.level);
  }

  bool operator==(HaarExpansion const& o) const {
    if (mean != o.mean) return false;
    int d = std::max(depth, o.depth);
    for (int k = 0; k < d; ++k)
      for (std::int64_t m = 0; m < (std::int64_t{1} << k); ++m)
        if (coefficient({k, m}) != o.coefficient({k, m})) return false;
    return true;
  }
};

template <Scalar T>
HaarExpansion<T> haar_decompose(StepFunction<T> const& f) {
  HaarExpansion<T> e;
  e.depth = f.depth();
  // Averages over the cells of each level, built bottom-up.
  std::vector<T> level_avg = f.values();
  for (int k = f.depth() - 1; k >= 0; --k) {
    std::vector<T> coarser(level_avg.size() / 2);
    for (std::size_t m = 0; m < coarser.size(); ++m) {
      T const& lo = level_avg[2 * m];
      T const& hi = level_avg[2 * m + 1];
      coarser[m] = (lo + hi) / T(2);
      e.coeffs[{k, static_cast<std::int64_t>(m)}] = (hi - lo) / T(2);
    }
    level_avg = std::move(coarser);
  }
  e.mean = level_avg.front();
  return e;
}

template <Scalar T>
StepFunction<T> haar_reconstruct(HaarExpansion<T> const& e) {
  int depth = e.depth;
  for (auto const& [J, c] : e.coeffs) depth = std::max(depth, J.level + 1);
  std::vector<T> v(std::size_t{1} << depth, e.mean);
  for (auto const& [J, c] : e.coeffs) {
    if (c == 0) continue;
    auto [llo, lhi] = J.left().cells(depth);
    auto [rlo, rhi] = J.right().cells(depth);
    for (auto i = llo; i < lhi; ++i) v[static_cast<std::size_t>(i)] -= c;
    for (auto i = rlo; i < rhi; ++i) v[static_cast<std::size_t>(i)] += c;
  }
  return StepFunction<T>(depth, std::move(v));
}

/// L-infinity normalized Haar function H_J at depth J.level + 1 (or deeper).
template <Scalar T>
StepFunction<T> haar_function(DyadicInterval J, int depth = 0) {
  int d = std::max(depth, J.level + 1);
  std::vector<T> v(std::size_t{1} << d, T(0));
  auto [llo, lhi] = J.left().cells(d);
  auto [rlo, rhi] = J.right().cells(d);
  for (auto i = llo; i < lhi; ++i) v[static_cast<std::size_t>(i)] = T(-1);
  for (auto i = rlo; i < rhi; ++i) v[static_cast<std::size_t>(i)] = T(1);
  return StepFunction<T>(d, std::move(v));
}

}  // namespace bellman
