#pragma once

#include "bellman/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bellman {

/// Uniform axis of n >= 2 points on [lo, hi].
inline std::vector<double> uniform_axis(double lo, double hi, std::size_t n) {
  if (n < 2) throw DomainError("an axis needs at least two points");
  if (!(hi > lo)) throw DomainError("axis bounds must be increasing");
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  a.back() = hi;
  return a;
}

/// A real function sampled on a rectangular grid, interpolated linearly per axis.
///
/// In wedge mode axes 0 and 1 must coincide and only nodes with
/// coordinate 0 <= coordinate 1 belong to the domain. Cells cut by the
/// diagonal are interpolated on their upper triangle (barycentric weights),
/// so off-domain nodes never contribute. Every weight set is a convex
/// combination with the query point as barycentre, so interpolating a concave
/// function from below never overestimates it.
template <std::size_t Dim>
class GridFunction {
  static_assert(Dim >= 1);

 public:
  using Point = std::array<double, Dim>;
  using Index = std::array<std::size_t, Dim>;

  GridFunction() = default;

  GridFunction(std::array<std::vector<double>, Dim> axes, bool wedge = false, double fill = 0.0)
      : axes_(std::move(axes)), wedge_(wedge) {
    std::size_t total = 1;
    for (std::size_t d = 0; d < Dim; ++d) {
      auto const& a = axes_[d];
      if (a.size() < 2) throw DomainError("grid axis needs at least two points");
      for (std::size_t i = 1; i < a.size(); ++i)
        if (!(a[i] > a[i - 1])) throw DomainError("grid axis must be strictly increasing");
      total *= a.size();
    }
    if constexpr (Dim >= 2) {
      if (wedge_ && axes_[0] != axes_[1]) throw DomainError("wedge grids need identical axes 0 and 1");
    } else {
      if (wedge_) throw DomainError("wedge grids need at least two axes");
    }
    strides_[Dim - 1] = 1;
    for (std::size_t d = Dim - 1; d > 0; --d) strides_[d - 1] = strides_[d] * axes_[d].size();
    values_.assign(total, fill);
  }

  std::array<std::vector<double>, Dim> const& axes() const { return axes_; }
  std::vector<double> const& axis(std::size_t d) const { return axes_[d]; }
  bool wedge() const { return wedge_; }
  std::size_t size() const { return values_.size(); }
  std::vector<double> const& values() const { return values_; }

  std::size_t flat(Index const& idx) const {
    std::size_t f = 0;
    for (std::size_t d = 0; d < Dim; ++d) f += idx[d] * strides_[d];
    return f;
  }

  Index unflat(std::size_t f) const {
    Index idx{};
    for (std::size_t d = 0; d < Dim; ++d) {
      idx[d] = f / strides_[d];
      f %= strides_[d];
    }
    return idx;
  }

  Point node(Index const& idx) const {
    Point p{};
    for (std::size_t d = 0; d < Dim; ++d) p[d] = axes_[d][idx[d]];
    return p;
  }

  bool in_domain(Index const& idx) const {
    if constexpr (Dim >= 2)
      return !wedge_ || idx[0] <= idx[1];
    else
      return true;
  }

  double& at(Index const& idx) { return values_[flat(idx)]; }
  double at(Index const& idx) const { return values_[flat(idx)]; }
  double& operator[](std::size_t f) { return values_[f]; }
  double operator[](std::size_t f) const { return values_[f]; }

  /// Interpolated value; p must lie inside the grid box (and the wedge).
  double interpolate(Point const& p) const {
    std::array<std::size_t, Dim> cell{};
    std::array<double, Dim> t{};
    for (std::size_t d = 0; d < Dim; ++d) {
      auto const& a = axes_[d];
      double x = p[d];
      if (!(x >= a.front() && x <= a.back()))
        throw DomainError("grid interpolation outside the axis range on axis " + std::to_string(d));
      std::size_t i = static_cast<std::size_t>(std::upper_bound(a.begin(), a.end(), x) - a.begin());
      i = i == 0 ? 0 : i - 1;
      if (i >= a.size() - 1) {
        cell[d] = a.size() - 1;
        t[d] = 0.0;
      } else {
        cell[d] = i;
        t[d] = (x - a[i]) / (a[i + 1] - a[i]);
      }
    }
    if constexpr (Dim >= 2) {
      if (wedge_ && cell[0] >= cell[1]) {
        if (cell[0] > cell[1] || t[0] > t[1]) {
          // Rounding can push a boundary point a hair across the diagonal.
          if (cell[0] == cell[1] && t[0] - t[1] < 1e-9)
            t[0] = t[1];
          else
            throw DomainError("grid interpolation outside the wedge");
        }
        return interpolate_diagonal(cell, t);
      }
    }
    return interpolate_box(cell, t);
  }

  double operator()(Point const& p) const { return interpolate(p); }

 private:
  double interpolate_box(std::array<std::size_t, Dim> const& cell, std::array<double, Dim> const& t) const {
    double sum = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << Dim); ++corner) {
      double w = 1.0;
      Index idx{};
      for (std::size_t d = 0; d < Dim; ++d) {
        bool up = (corner >> d) & 1U;
        double wd = up ? t[d] : 1.0 - t[d];
        if (wd == 0.0) {
          w = 0.0;
          break;
        }
        w *= wd;
        idx[d] = cell[d] + (up ? 1 : 0);
      }
      if (w == 0.0) continue;
      sum += w * values_[flat(idx)];
    }
    return sum;
  }

  /// Upper triangle of a diagonal cell in axes (0,1), tensor-linear in the rest.
  double interpolate_diagonal(std::array<std::size_t, Dim> const& cell, std::array<double, Dim> const& t) const {
    // (i,i): 1 - t1, (i,i+1): t1 - t0, (i+1,i+1): t0.
    std::array<std::pair<std::array<std::size_t, 2>, double>, 3> tri = {{
        {{cell[0], cell[1]}, 1.0 - t[1]},
        {{cell[0], cell[1] + 1}, t[1] - t[0]},
        {{cell[0] + 1, cell[1] + 1}, t[0]},
    }};
    double sum = 0.0;
    constexpr std::size_t rest = Dim - 2;
    for (auto const& [ij, wt] : tri) {
      if (wt == 0.0) continue;
      for (std::size_t corner = 0; corner < (std::size_t{1} << rest); ++corner) {
        double w = wt;
        Index idx{};
        idx[0] = ij[0];
        idx[1] = ij[1];
        for (std::size_t d = 2; d < Dim; ++d) {
          bool up = (corner >> (d - 2)) & 1U;
          double wd = up ? t[d] : 1.0 - t[d];
          if (wd == 0.0) {
            w = 0.0;
            break;
          }
          w *= wd;
          idx[d] = cell[d] + (up ? 1 : 0);
        }
        if (w == 0.0) continue;
        sum += w * values_[flat(idx)];
      }
    }
    return sum;
  }

  std::array<std::vector<double>, Dim> axes_{};
  std::array<std::size_t, Dim> strides_{};
  std::vector<double> values_;
  bool wedge_ = false;
};

}  // namespace bellman
