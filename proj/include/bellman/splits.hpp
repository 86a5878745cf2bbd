#pragma once

#include <cmath>
#include <vector>

namespace bellman {

/// Midpoint split x -> x +- (d1, d2, d3) on the unweighted domain.
/// SUB-admissible when |d2| <= |d1|; PM-admissible when |d2| == |d1|.
struct SplitMove {
  double d1 = 0, d2 = 0, d3 = 0;

  bool sub_admissible() const { return std::abs(d2) <= std::abs(d1); }
  bool pm_admissible() const { return std::abs(d2) == std::abs(d1); }
  bool operator==(SplitMove const&) const = default;
};

struct SplitSetSpec {
  std::vector<double> d1 = {0.25, 0.5, 1.0, 2.0};
  std::vector<double> d2_fractions = {0.0, 0.5, -0.5, 1.0, -1.0};  ///< d2 = fraction * d1
  std::vector<double> d3 = {0.0, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0};
};

/// {d1} x {d2 = f d1} x {d3}; contains (1, 1, 0), the split of phi = H, psi = -1 + H.
inline std::vector<SplitMove> make_split_set(SplitSetSpec const& spec = {}) {
  std::vector<SplitMove> moves;
  for (double d1 : spec.d1)
    for (double f : spec.d2_fractions)
      for (double d3 : spec.d3) moves.push_back({d1, f * d1, d3});
  return moves;
}

}  // namespace bellman
