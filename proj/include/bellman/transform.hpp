#pragma once

#include "bellman/dyadic.hpp"
#include "bellman/errors.hpp"
#include "bellman/rational.hpp"

#include <map>
#include <string>

namespace bellman {

enum class EpsilonMode { PM, SUB };

/// Multipliers eps_J of a martingale transform.
///
/// PM: every entry is -1 or +1 and every interval with a nonzero coefficient
/// must be covered. SUB: entries in [-1, 1], missing entries read as 0.
template <Scalar T>
struct EpsilonAssignment {
  std::map<DyadicInterval, T> entries;
  EpsilonMode mode = EpsilonMode::PM;

  static EpsilonAssignment constant(T value, int depth, EpsilonMode mode = EpsilonMode::PM) {
    EpsilonAssignment e;
    e.mode = mode;
    for (int k = 0; k < depth; ++k)
      for (std::int64_t m = 0; m < (std::int64_t{1} << k); ++m) e.entries[{k, m}] = value;
    e.validate();
    return e;
  }

  void validate() const {
    for (auto const& [J, v] : entries) {
      if (mode == EpsilonMode::PM && v != T(1) && v != T(-1))
        throw ConstraintError("PM assignment has entry outside {-1,+1} at level " + std::to_string(J.level));
      if (mode == EpsilonMode::SUB && (v > T(1) || v < T(-1)))
        throw ConstraintError("SUB assignment has entry outside [-1,1] at level " + std::to_string(J.level));
    }
  }

  /// Multiplier for J; throws in PM mode if J carries a nonzero coefficient and is uncovered.
  T at(DyadicInterval J, bool coefficient_nonzero) const {
    auto it = entries.find(J);
    if (it != entries.end()) return it->second;
    if (mode == EpsilonMode::PM && coefficient_nonzero)
      throw MissingEpsilonError("no +-1 multiplier for interval (" + std::to_string(J.level) + ", " +
                                std::to_string(J.position) + ")");
    return T(0);
  }
};

/// A strictly positive step function, i.e. a dyadic A1 weight.
template <Scalar T>
class A1Weight {
 public:
  explicit A1Weight(StepFunction<T> w) : w_(std::move(w)) {
    for (auto const& v : w_.values())
      if (!(v > 0)) throw DomainError("weight values must be strictly positive");
  }
  static A1Weight unit(int depth = 0) { return A1Weight(StepFunction<T>::constant(T(1), depth)); }

  StepFunction<T> const& function() const { return w_; }
  int depth() const { return w_.depth(); }

 private:
  StepFunction<T> w_;
};

/// (<phi>, <psi>, <|phi| w>, <w>, inf w).
template <Scalar T>
struct BellmanPoint5 {
  T x1{0}, x2{0}, x3{0}, x4{1}, x5{1};

  bool in_domain(T const& Q) const {
    return x3 >= abs_value(x1) * x5 && x5 > 0 && x5 <= x4 && x4 <= Q * x5;
  }
  bool operator==(BellmanPoint5 const&) const = default;
};

/// psi = start + sum_J eps_J coeff_J H_J at phi's depth.
template <Scalar T>
StepFunction<T> apply_transform(HaarExpansion<T> const& phi, EpsilonAssignment<T> const& eps, T const& start) {
  eps.validate();
  HaarExpansion<T> psi;
  psi.mean = start;
  psi.depth = phi.depth;
  for (auto const& [J, c] : phi.coeffs) {
    T e = eps.at(J, c != 0);
    if (c != 0 && e != 0) psi.coeffs[J] = e * c;
  }
  return haar_reconstruct(psi);
}

/// sup_J <w>_J / inf_J w over all dyadic J down to the weight's depth.
template <Scalar T>
T characteristic(A1Weight<T> const& weight) {
  auto const& w = weight.function();
  int d = w.depth();
  // Level-by-level sums and minima, bottom-up.
  std::vector<T> sums = w.values();
  std::vector<T> mins = w.values();
  T best(1);
  for (int level = d; level >= 0; --level) {
    std::size_t count = std::size_t{1} << (d - level);
    for (std::size_t m = 0; m < sums.size(); ++m) {
      T ratio = sums[m] / (T(static_cast<long long>(count)) * mins[m]);
      if (ratio > best) best = ratio;
    }
    if (level == 0) break;
    std::vector<T> s2(sums.size() / 2), m2(sums.size() / 2);
    for (std::size_t m = 0; m < s2.size(); ++m) {
      s2[m] = sums[2 * m] + sums[2 * m + 1];
      m2[m] = std::min(mins[2 * m], mins[2 * m + 1]);
    }
    sums = std::move(s2);
    mins = std::move(m2);
  }
  return best;
}

/// w({psi >= lambda}) over [0,1); the level set is closed.
template <Scalar T>
T level_set_measure(StepFunction<T> const& psi, T const& lambda, A1Weight<T> const& weight) {
  int d = std::max(psi.depth(), weight.depth());
  auto p = psi.refine(d);
  auto w = weight.function().refine(d);
  T s(0);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] >= lambda) s += w[i];
  return s / T(static_cast<long long>(p.size()));
}

template <Scalar T>
BellmanPoint5<T> bellman_point(StepFunction<T> const& phi, StepFunction<T> const& psi, A1Weight<T> const& weight) {
  auto const& w = weight.function();
  auto unit = DyadicInterval::unit();
  auto phi_w = pointwise(phi, w, [](T const& f, T const& v) { return T(abs_value(f) * v); });
  return {phi.integral(), psi.integral(), phi_w.integral(), average(w, unit), minimum(w, unit)};
}

/// lambda * w({T_eps phi >= lambda}) / <|phi| w>.
template <Scalar T>
T weak_type_ratio(HaarExpansion<T> const& phi, EpsilonAssignment<T> const& eps, T const& start, A1Weight<T> const& weight,
                  T const& lambda) {
  if (!(lambda > 0)) throw DomainError("lambda must be positive");
  auto psi = apply_transform(phi, eps, start);
  auto f = haar_reconstruct(phi);
  auto phi_w = pointwise(f, weight.function(), [](T const& a, T const& v) { return T(abs_value(a) * v); });
  T denom = phi_w.integral();
  if (denom == 0) throw ZeroDenominatorError("<|phi| w> vanishes");
  return lambda * level_set_measure(psi, T(start + lambda), weight) / denom;
}

/// True iff every Haar coefficient of psi is dominated by phi's at the same interval.
template <Scalar T>
bool is_subordinate(StepFunction<T> const& phi, StepFunction<T> const& psi) {
  auto a = haar_decompose(phi);
  auto b = haar_decompose(psi);
  int d = std::max(a.depth, b.depth);
  for (int k = 0; k < d; ++k)
    for (std::int64_t m = 0; m < (std::int64_t{1} << k); ++m)
      if (abs_value(b.coefficient({k, m})) > abs_value(a.coefficient({k, m}))) return false;
  return true;
}

/// |eps_J a_J| <= |a_J| for every coefficient of phi.
template <Scalar T>
bool subordination_audit(HaarExpansion<T> const& phi, EpsilonAssignment<T> const& eps) {
  for (auto const& [J, c] : phi.coeffs) {
    T e = eps.at(J, c != 0);
    if (abs_value(T(e * c)) > abs_value(c)) return false;
  }
  return true;
}

template <Scalar T>
struct ExtremalTriple {
  HaarExpansion<T> phi_expansion;
  EpsilonAssignment<T> eps;
  StepFunction<T> phi;
  StepFunction<T> psi;
  A1Weight<T> weight;
};

/// Depth-2 triple with Bellman point (x1, -1, x3, x4, 1) whose weighted level
/// set {psi >= 0} has measure (2 x4 - 1) / 4 once 2 x3 + x1 >= 1:
///   phi = x1 + x3 H_[0,1) + (x3 - x1) H_[0,1/2) + (x3 + x1) H_[1/2,1)
///   psi = -1 + x3 H_[0,1) + (x3 - x1) H_[0,1/2) - (x3 + x1) H_[1/2,1)
///   w   = 1 + 2 (x4 - 1) chi_[1/4,3/4)
template <Scalar T>
ExtremalTriple<T> podpir_triple(T const& x1, T const& x3, T const& x4) {
  if (x3 < abs_value(x1)) throw DomainError("extremal triple needs x3 >= |x1|");
  if (x4 < T(1)) throw DomainError("extremal triple needs x4 >= 1");
  HaarExpansion<T> e;
  e.mean = x1;
  e.depth = 2;
  e.coeffs[{0, 0}] = x3;
  e.coeffs[{1, 0}] = x3 - x1;
  e.coeffs[{1, 1}] = x3 + x1;

  EpsilonAssignment<T> eps;
  eps.mode = EpsilonMode::PM;
  eps.entries[{0, 0}] = T(1);
  eps.entries[{1, 0}] = T(1);
  eps.entries[{1, 1}] = T(-1);

  auto phi = haar_reconstruct(e);
  auto psi = apply_transform(e, eps, T(-1));
  T heavy = T(2) * x4 - T(1);
  A1Weight<T> w(StepFunction<T>(2, {T(1), heavy, heavy, T(1)}));
  return {std::move(e), std::move(eps), std::move(phi), std::move(psi), std::move(w)};
}

}  // namespace bellman
