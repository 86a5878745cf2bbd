#pragma once

#include "bellman/errors.hpp"
#include "bellman/rational.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <limits>
#include <vector>

namespace bellman {

/// Result of an exhaustive check of lambda |{T_eps phi >= lambda}| <= C <|phi|>.
struct WeakTypeSearchReport {
  std::uint64_t coefficient_vectors = 0;
  std::uint64_t transforms = 0;      ///< (coefficient vector, +-1 pattern on its support) pairs
  std::uint64_t checks = 0;          ///< transforms x means x lambdas
  std::uint64_t violations = 0;
  Rational max_ratio{0};             ///< sup of lambda |{T phi >= lambda}| / <|phi|> seen
  std::vector<Rational> worst_values;  ///< cell values of phi at the maximizer (mean included)
  std::vector<int> worst_signs;        ///< eps over the Haar intervals, breadth-first order
  Rational worst_lambda{0};
};

namespace detail {

inline boost::multiprecision::cpp_int lcm_of_denominators(std::vector<Rational> const& values) {
  using boost::multiprecision::cpp_int;
  cpp_int l = 1;
  for (auto const& v : values) {
    cpp_int d = boost::multiprecision::denominator(v);
    l = l / gcd(l, d) * d;
  }
  return l;
}

}  // namespace detail

/// Exhaustive +-1 martingale transforms of depth-`depth` step functions (w = 1).
///
/// phi = c + sum_J a_J H_J with the mean c and every a_J drawn from
/// `coefficients`; eps_J = +-1 on every interval with a_J != 0. For each
/// (phi, eps, lambda) checks lambda |{T_eps phi >= lambda}| <= constant <|phi|>.
/// All arithmetic is exact: values are scaled to a common integer lattice.
inline WeakTypeSearchReport weak_type_exhaustive(int depth, std::vector<Rational> const& coefficients,
                                                 std::vector<Rational> const& lambdas, Rational const& constant) {
  using boost::multiprecision::cpp_int;
  if (depth < 0 || depth > 4) throw DomainError("exhaustive weak-type search supports depth 0..4");
  for (auto const& l : lambdas)
    if (!(l > 0)) throw DomainError("lambda must be positive");

  std::vector<Rational> all = coefficients;
  all.insert(all.end(), lambdas.begin(), lambdas.end());
  all.push_back(constant);
  cpp_int scale = detail::lcm_of_denominators(all);

  auto to_int = [&](Rational const& r) {
    Rational s = r * Rational(scale);
    cpp_int n = boost::multiprecision::numerator(s);
    if (n > cpp_int(std::numeric_limits<std::int32_t>::max()) || n < cpp_int(std::numeric_limits<std::int32_t>::min()))
      throw DomainError("coefficient lattice too large for exact integer search");
    return static_cast<std::int64_t>(n);
  };
  std::vector<std::int64_t> coef;
  for (auto const& c : coefficients) coef.push_back(to_int(c));
  std::vector<std::int64_t> lam;
  for (auto const& l : lambdas) lam.push_back(to_int(l));
  // constant = p / q in lattice units: lambda n <= (p/q) sum|phi| <=> q lambda n <= p sum|phi|.
  Rational cs = constant;
  std::int64_t cp = static_cast<std::int64_t>(boost::multiprecision::numerator(cs));
  std::int64_t cq = static_cast<std::int64_t>(boost::multiprecision::denominator(cs));

  int const cells = 1 << depth;
  int const intervals = cells - 1;  // breadth-first: index i covers level floor(log2(i+1))
  struct Span {
    int lo, mid, hi;
  };
  std::vector<Span> spans;
  for (int level = 0; level < depth; ++level) {
    int width = cells >> level;
    for (int m = 0; m < (1 << level); ++m) spans.push_back({m * width, m * width + width / 2, (m + 1) * width});
  }

  WeakTypeSearchReport report;
  std::int64_t best_num = 0, best_den = 1;
  std::vector<std::int64_t> phi(cells, 0);
  std::vector<std::int64_t> tphi(cells, 0);
  std::vector<int> chosen(intervals, 0);
  std::vector<int> signs(intervals, 1);
  std::vector<int> support;

  auto add_haar = [&](std::vector<std::int64_t>& v, int idx, std::int64_t amount) {
    auto const& s = spans[idx];
    for (int i = s.lo; i < s.mid; ++i) v[i] -= amount;
    for (int i = s.mid; i < s.hi; ++i) v[i] += amount;
  };

  std::int64_t min_abs_sum = 0;
  std::int64_t best_mean = 0;

  // Recurse over eps on the support once phi's coefficients are fixed.
  auto visit_signs = [&](auto&& self, std::size_t k) -> void {
    if (k == support.size()) {
      ++report.transforms;
      for (std::size_t li = 0; li < lam.size(); ++li) {
        std::int64_t hits = 0;
        for (int i = 0; i < cells; ++i)
          if (tphi[i] >= lam[li]) ++hits;
        report.checks += coef.size();
        // lambda * hits / cells <= constant * sum|phi| / cells, minimized over means.
        std::int64_t lhs = cq * lam[li] * hits;
        std::int64_t rhs = cp * min_abs_sum;
        if (lhs > rhs) ++report.violations;
        // compare lam * hits / min_abs_sum with best_num / best_den by cross-multiplication
        if (min_abs_sum > 0 && hits > 0) {
          if (lam[li] * hits * best_den > best_num * min_abs_sum) {
            best_num = lam[li] * hits;
            best_den = min_abs_sum;
            report.worst_values.clear();
            for (int i = 0; i < cells; ++i) report.worst_values.push_back(Rational(phi[i] + best_mean) / Rational(scale));
            report.worst_signs = signs;
            for (int i = 0; i < intervals; ++i)
              if (coef[chosen[i]] == 0) report.worst_signs[i] = 0;
            report.worst_lambda = Rational(lam[li]) / Rational(scale);
          }
        }
      }
      return;
    }
    int idx = support[k];
    std::int64_t a = coef[chosen[idx]];
    signs[idx] = 1;
    add_haar(tphi, idx, a);
    self(self, k + 1);
    add_haar(tphi, idx, -2 * a);
    signs[idx] = -1;
    self(self, k + 1);
    add_haar(tphi, idx, a);
    signs[idx] = 1;
  };

  auto visit_coefficients = [&](auto&& self, int idx) -> void {
    if (idx == intervals) {
      ++report.coefficient_vectors;
      min_abs_sum = std::numeric_limits<std::int64_t>::max();
      for (auto c : coef) {
        std::int64_t s = 0;
        for (int i = 0; i < cells; ++i) s += (phi[i] + c) < 0 ? -(phi[i] + c) : (phi[i] + c);
        if (s < min_abs_sum) {
          min_abs_sum = s;
          best_mean = c;
        }
      }
      support.clear();
      for (int i = 0; i < intervals; ++i)
        if (coef[chosen[i]] != 0) support.push_back(i);
      std::fill(tphi.begin(), tphi.end(), 0);
      visit_signs(visit_signs, 0);
      return;
    }
    for (std::size_t c = 0; c < coef.size(); ++c) {
      chosen[idx] = static_cast<int>(c);
      add_haar(phi, idx, coef[c]);
      self(self, idx + 1);
      add_haar(phi, idx, -coef[c]);
    }
  };

  visit_coefficients(visit_coefficients, 0);
  report.max_ratio = Rational(best_num) / Rational(best_den);
  return report;
}

}  // namespace bellman
