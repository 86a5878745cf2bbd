#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace bellman {

/// Exact rational arithmetic used for every construction that the library
/// claims to reproduce bit-exactly.
using Rational = boost::multiprecision::cpp_rational;

/// Scalar types accepted by the dyadic containers.
template <typename T>
concept Scalar = std::same_as<T, Rational> || std::floating_point<T>;

inline Rational rational(long long num, long long den = 1) { return Rational(num) / Rational(den); }

/// "p/q" (or "p" when q == 1).
inline std::string to_string(Rational const& r) {
  auto num = boost::multiprecision::numerator(r);
  auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

/// Shortest representation that round-trips through strtod.
inline std::string to_string(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("to_chars failed");
  return std::string(buf, end);
}

/// Accepts "p/q", "p", and finite decimals such as "-0.25" (converted exactly).
inline Rational parse_rational(std::string_view text) {
  using boost::multiprecision::cpp_int;
  auto trim = [](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  if (text.empty()) throw std::invalid_argument("empty rational literal");

  auto parse_int = [](std::string_view s) {
    if (s.empty()) throw std::invalid_argument("malformed rational literal");
    std::size_t i = (s.front() == '-' || s.front() == '+') ? 1 : 0;
    if (i == s.size()) throw std::invalid_argument("malformed rational literal");
    for (std::size_t k = i; k < s.size(); ++k)
      if (s[k] < '0' || s[k] > '9') throw std::invalid_argument("malformed rational literal: " + std::string(s));
    std::string digits(s.front() == '+' ? s.substr(1) : s);
    return cpp_int(digits);
  };

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    cpp_int num = parse_int(trim(text.substr(0, slash)));
    cpp_int den = parse_int(trim(text.substr(slash + 1)));
    if (den == 0) throw std::invalid_argument("zero denominator in rational literal");
    return Rational(num, den);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    bool negative = !whole.empty() && whole.front() == '-';
    std::string digits = std::string(whole.empty() || whole == "-" || whole == "+" ? std::string(whole) + "0" : std::string(whole));
    for (char c : frac)
      if (c < '0' || c > '9') throw std::invalid_argument("malformed rational literal: " + std::string(text));
    cpp_int int_part = parse_int(digits);
    cpp_int scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    cpp_int frac_part = frac.empty() ? cpp_int(0) : cpp_int(std::string(frac));
    cpp_int num = (negative ? -1 : 1) * (abs(int_part) * scale + frac_part);
    return Rational(num, scale);
  }
  return Rational(parse_int(text));
}

template <Scalar T>
T from_rational(Rational const& r) {
  if constexpr (std::same_as<T, Rational>)
    return r;
  else
    return static_cast<T>(r);
}

template <Scalar T>
double to_double(T const& v) {
  return static_cast<double>(v);
}

template <Scalar T>
T abs_value(T const& v) {
  return v < 0 ? T(-v) : v;
}

}  // namespace bellman
