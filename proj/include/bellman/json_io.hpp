#pragma once

#include "bellman/envelope_dp.hpp"
#include "bellman/errors.hpp"
#include "bellman/rational.hpp"
#include "bellman/transform.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace bellman {

using Json = nlohmann::json;

inline Json witness_to_json(TreeWitness const& w) {
  Json nodes = Json::array();
  for (auto const& n : w.nodes) {
    if (n.leaf)
      nodes.push_back({{"phi", to_string(n.phi)}, {"psi", to_string(n.psi)}});
    else
      nodes.push_back({{"a", to_string(n.a)}, {"eps", n.eps}, {"left", n.left}, {"right", n.right}});
  }
  return {{"point", {to_string(w.x1), to_string(w.x2), to_string(w.x3)}},
          {"measure", to_string(w.measure)},
          {"nodes", nodes}};
}

/// Structural problems (missing fields, dangling indices, cycles) are mismatch errors:
/// the file does not describe a tree at all.
inline TreeWitness witness_from_json(Json const& j) {
  auto rat = [](Json const& v, char const* what) {
    if (!v.is_string() && !v.is_number_integer()) throw MismatchError(std::string("witness field ") + what + " is not a rational");
    return v.is_string() ? parse_rational(v.get<std::string>()) : Rational(v.get<long long>());
  };
  try {
    TreeWitness w;
    auto const& p = j.at("point");
    if (!p.is_array() || p.size() != 3) throw MismatchError("witness point must have three entries");
    w.x1 = rat(p[0], "point");
    w.x2 = rat(p[1], "point");
    w.x3 = rat(p[2], "point");
    w.measure = rat(j.at("measure"), "measure");
    for (auto const& n : j.at("nodes")) {
      WitnessNode node;
      if (n.contains("a")) {
        node.leaf = false;
        node.a = rat(n.at("a"), "a");
        node.eps = n.at("eps").get<int>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
      } else {
        node.phi = rat(n.at("phi"), "phi");
        node.psi = rat(n.at("psi"), "psi");
      }
      w.nodes.push_back(node);
    }
    if (w.nodes.empty()) throw MismatchError("witness has no nodes");
    // Every non-root node must be referenced exactly once, and only by an earlier node.
    std::vector<int> refs(w.nodes.size(), 0);
    for (std::size_t i = 0; i < w.nodes.size(); ++i) {
      auto const& n = w.nodes[i];
      if (n.leaf) continue;
      for (int c : {n.left, n.right}) {
        if (c <= static_cast<int>(i) || c >= static_cast<int>(w.nodes.size()))
          throw MismatchError("witness child index " + std::to_string(c) + " is not a later node");
        ++refs[static_cast<std::size_t>(c)];
      }
    }
    for (std::size_t i = 1; i < refs.size(); ++i)
      if (refs[i] != 1) throw MismatchError("witness node " + std::to_string(i) + " is not referenced exactly once");
    return w;
  } catch (nlohmann::json::exception const& e) {
    throw MismatchError(std::string("malformed witness: ") + e.what());
  } catch (std::invalid_argument const& e) {
    throw MismatchError(std::string("malformed witness: ") + e.what());
  }
}

inline Json step_to_json(StepFunction<Rational> const& f) {
  Json values = Json::array();
  for (auto const& v : f.values()) values.push_back(to_string(v));
  return {{"depth", f.depth()}, {"values", values}};
}

inline Rational rational_from_json(Json const& v) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<long long>());
  throw std::invalid_argument("expected a rational string or an integer");
}

inline StepFunction<Rational> step_from_json(Json const& j) {
  std::vector<Rational> values;
  for (auto const& v : j.at("values")) values.push_back(rational_from_json(v));
  return StepFunction<Rational>(j.at("depth").get<int>(), std::move(values));
}

/// Coefficients are against H_J (+-1 on the halves of J).
inline Json haar_to_json(HaarExpansion<Rational> const& e) {
  Json coeffs = Json::array();
  for (auto const& [J, c] : e.coeffs)
    if (c != 0) coeffs.push_back({J.level, J.position, to_string(c)});
  return {{"mean", to_string(e.mean)}, {"depth", e.depth}, {"coeffs", coeffs}};
}

inline HaarExpansion<Rational> haar_from_json(Json const& j) {
  HaarExpansion<Rational> e;
  e.mean = rational_from_json(j.at("mean"));
  e.depth = j.value("depth", 0);
  for (auto const& c : j.at("coeffs")) {
    auto J = DyadicInterval::make(c.at(0).get<int>(), c.at(1).get<std::int64_t>());
    e.coeffs[J] = rational_from_json(c.at(2));
    e.depth = std::max(e.depth, J.level + 1);
  }
  return e;
}

/// A weighted transform configuration with the quantities it claims.
struct TransformWitness {
  HaarExpansion<Rational> phi;
  EpsilonAssignment<Rational> eps;
  Rational start{0};
  StepFunction<Rational> weight = StepFunction<Rational>::constant(Rational(1));
  Rational lambda{1};
  Json claims = Json::object();  ///< optional: point, characteristic, measure, ratio
};

inline TransformWitness transform_witness_from_json(Json const& j) {
  try {
    TransformWitness w;
    w.phi = haar_from_json(j.at("phi"));
    w.eps.mode = j.value("mode", std::string("PM")) == "SUB" ? EpsilonMode::SUB : EpsilonMode::PM;
    for (auto const& e : j.at("eps"))
      w.eps.entries[DyadicInterval::make(e.at(0).get<int>(), e.at(1).get<std::int64_t>())] = rational_from_json(e.at(2));
    w.start = rational_from_json(j.at("start"));
    if (j.contains("weight")) w.weight = step_from_json(j.at("weight"));
    w.lambda = rational_from_json(j.at("lambda"));
    if (j.contains("claims")) w.claims = j.at("claims");
    return w;
  } catch (nlohmann::json::exception const& e) {
    throw MismatchError(std::string("malformed transform witness: ") + e.what());
  } catch (std::invalid_argument const& e) {
    throw MismatchError(std::string("malformed transform witness: ") + e.what());
  }
}

struct TransformReplay {
  bool ok = true;
  BellmanPoint5<Rational> point;
  Rational characteristic{1};
  Rational measure{0};  ///< w({psi >= start + lambda})
  Rational ratio{0};
  bool subordinate = true;
  std::vector<std::string> mismatches;
};

/// Recomputes every quantity exactly and compares it with the claims present.
inline TransformReplay replay_transform_witness(TransformWitness const& w) {
  TransformReplay r;
  A1Weight<Rational> weight(w.weight);
  auto psi = apply_transform(w.phi, w.eps, w.start);
  auto phi = haar_reconstruct(w.phi);
  r.point = bellman_point(phi, psi, weight);
  r.characteristic = characteristic(weight);
  r.measure = level_set_measure(psi, Rational(w.start + w.lambda), weight);
  r.ratio = weak_type_ratio(w.phi, w.eps, w.start, weight, w.lambda);
  r.subordinate = subordination_audit(w.phi, w.eps);
  auto check = [&](char const* key, Rational const& actual) {
    if (!w.claims.contains(key)) return;
    Rational claimed = rational_from_json(w.claims.at(key));
    if (claimed != actual)
      r.mismatches.push_back(std::string(key) + " " + to_string(actual) + " differs from the claim " + to_string(claimed));
  };
  check("characteristic", r.characteristic);
  check("measure", r.measure);
  check("ratio", r.ratio);
  if (w.claims.contains("point")) {
    auto const& p = w.claims.at("point");
    std::array<Rational const*, 5> actual{&r.point.x1, &r.point.x2, &r.point.x3, &r.point.x4, &r.point.x5};
    if (!p.is_array() || p.size() != 5)
      r.mismatches.push_back("claimed point must have five entries");
    else
      for (std::size_t i = 0; i < 5; ++i)
        if (rational_from_json(p[i]) != *actual[i])
          r.mismatches.push_back("point coordinate " + std::to_string(i + 1) + " " + to_string(*actual[i]) +
                                 " differs from the claim " + p[i].dump());
  }
  if (!r.subordinate) r.mismatches.push_back("transform is not subordinate");
  r.ok = r.mismatches.empty();
  return r;
}

inline Json read_json_file(std::string const& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (nlohmann::json::exception const& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void write_text_file(std::string const& path, std::string const& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(std::string const& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// JSON number for finite doubles, null otherwise; keeps dumps valid.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace bellman
