#pragma once

#include <array>
#include <cstddef>

namespace bellman::fd {

/// Central second difference d^2 f / dx_i dx_j at p with step h.
template <std::size_t N, typename F>
double second_partial(F const& f, std::array<double, N> p, std::size_t i, std::size_t j, double h) {
  auto at = [&](double si, double sj) {
    auto q = p;
    q[i] += si;
    q[j] += sj;
    return f(q);
  };
  if (i == j) return (at(h, 0) - 2.0 * f(p) + at(-h, 0)) / (h * h);
  return (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
}

template <std::size_t N, typename F>
double first_partial(F const& f, std::array<double, N> p, std::size_t i, double h) {
  auto q = p;
  q[i] += h;
  double up = f(q);
  q[i] = p[i] - h;
  return (up - f(q)) / (2.0 * h);
}

template <std::size_t N, typename F>
std::array<std::array<double, N>, N> hessian(F const& f, std::array<double, N> const& p, double h) {
  std::array<std::array<double, N>, N> H{};
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i; j < N; ++j) H[i][j] = H[j][i] = second_partial(f, p, i, j, h);
  return H;
}

}  // namespace bellman::fd
