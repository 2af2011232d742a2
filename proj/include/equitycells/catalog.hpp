#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "equitycells/approximator.hpp"
#include "equitycells/error.hpp"
#include "equitycells/instance.hpp"
#include "equitycells/rational.hpp"

namespace equitycells {

/// Parameters of the two-variable example family. Defaults satisfy every constraint, including
/// the extra one needed by the non-discrete construction.
struct CatalogParams {
  Rational p1{9, 10};
  Rational p2{4, 5};
  Rational p2prime{81, 100};
  Rational y10{1, 100};
  Rational y01{1, 200};
};

inline void validate_params(const CatalogParams& p) {
  auto open_unit = [](const Rational& x) { return sgn(x) > 0 && x < 1; };
  if (!open_unit(p.p1) || !open_unit(p.p2) || !open_unit(p.p2prime))
    throw DomainError("p1, p2, p2' must lie in (0,1)");
  if (!(p.p2 < p.p2prime && p.p2prime < p.p1))
    throw DomainError("parameters must satisfy p2 < p2' < p1");
  if (!(p.p1 * p.p2 > Rational(1, 2))) throw DomainError("parameters must satisfy p1*p2 > 1/2");
  if (!(sgn(p.y01) > 0 && p.y01 < p.y10 && p.y10 < 1)) throw DomainError("parameters must satisfy 0 < y01 < y10 < 1");
}

namespace detail {

inline InstanceRow boolean_row(std::vector<int> coords, Group g, Rational f, Rational mu) {
  return InstanceRow{FeatureVector{std::move(coords), 0}, g, std::move(f), std::move(mu)};
}

}  // namespace detail

/// Two Boolean variables; f is 1, y10, y01, 0 on (1,1), (1,0), (0,1), (0,0).
inline Instance fig_example_instance(const CatalogParams& p = {}) {
  validate_params(p);
  const Rational q1 = 1 - p.p1, q2 = 1 - p.p2, q2p = 1 - p.p2prime;
  const Rational one = 1, zero = 0, half(1, 2);
  using detail::boolean_row;
  return Instance::from_rows(2, {
      boolean_row({1, 1}, Group::D, one, q1 * q2p * half),
      boolean_row({1, 1}, Group::A, one, p.p1 * p.p2 * half),
      boolean_row({1, 0}, Group::D, p.y10, q1 * p.p2prime * half),
      boolean_row({1, 0}, Group::A, p.y10, p.p1 * q2 * half),
      boolean_row({0, 1}, Group::D, p.y01, p.p1 * q2p * half),
      boolean_row({0, 1}, Group::A, p.y01, q1 * p.p2 * half),
      boolean_row({0, 0}, Group::D, zero, p.p1 * p.p2prime * half),
      boolean_row({0, 0}, Group::A, zero, q1 * q2 * half),
  });
}

/// Higher mean f in group A, yet the A-to-D ratio is not monotone in f.
inline Instance simpson_instance() {
  using detail::boolean_row;
  auto r = [](const char* s) { return parse_rational(s); };
  return Instance::from_rows(2, {
      boolean_row({1, 1}, Group::D, r(".9"), r(".06")),
      boolean_row({1, 1}, Group::A, r(".9"), r(".04")),
      boolean_row({1, 0}, Group::D, r(".6"), r(".02")),
      boolean_row({1, 0}, Group::A, r(".6"), r(".06")),
      boolean_row({0, 1}, Group::D, r(".2"), r(".07")),
      boolean_row({0, 1}, Group::A, r(".2"), r(".06")),
      boolean_row({0, 0}, Group::D, r(".02"), r(".35")),
      boolean_row({0, 0}, Group::A, r(".02"), r(".34")),
  });
}

inline const Rational kSimpsonPerturbEps{1, 1000000};
inline constexpr std::uint64_t kSimpsonPerturbSeed = 1;

/// The Simpson table with f nudged until generic.
inline Instance simpson_generic_instance(const Rational& eps = kSimpsonPerturbEps,
                                         std::uint64_t seed = kSimpsonPerturbSeed) {
  return perturb_generic(simpson_instance(), eps, seed).instance;
}

/// Majority of three independent bits; each bit is 1 with probability 1−ε in group A and ε in
/// group D. Each group carries measure 1/2. Rows run D then A from (1,1,1) down to (0,0,0).
inline Instance majority_instance(const Rational& eps) {
  if (!(sgn(eps) > 0 && eps < Rational(1, 2))) throw DomainError("majority epsilon must lie in (0,1/2)");
  std::vector<InstanceRow> rows;
  for (int x = 7; x >= 0; --x) {
    std::vector<int> coords = {(x >> 2) & 1, (x >> 1) & 1, x & 1};
    const int ones = coords[0] + coords[1] + coords[2];
    const Rational f = ones >= 2 ? 1 : 0;
    Rational muA(1, 2), muD(1, 2);
    for (int b : coords) {
      muA *= b ? Rational(1 - eps) : eps;
      muD *= b ? eps : Rational(1 - eps);
    }
    rows.push_back(detail::boolean_row(coords, Group::D, f, muD));
    rows.push_back(detail::boolean_row(coords, Group::A, f, muA));
  }
  return Instance::from_rows(3, rows);
}

inline const Rational kMajorityPerturbEps{1, 1000};
inline constexpr std::uint64_t kMajorityPerturbSeed = 1;

/// Generic variant of the majority instance. Feature vectors with the same number of ones carry
/// identical measures, so both f and μ are jittered. The disadvantage condition does not survive.
inline Instance majority_generic_instance(const Rational& eps, const Rational& jitter = kMajorityPerturbEps,
                                          std::uint64_t seed = kMajorityPerturbSeed) {
  PerturbOptions options;
  options.jitter_measures = true;
  return perturb_generic(majority_instance(eps), jitter, seed, options).instance;
}

/// Resolves "fig1", "simpson", "simpson-generic", "majority:EPS" or "majority-generic:EPS".
inline Instance example_instance(const std::string& name) {
  if (name == "fig1") return fig_example_instance();
  if (name == "simpson") return simpson_instance();
  if (name == "simpson-generic") return simpson_generic_instance();
  if (name.rfind("majority:", 0) == 0) return majority_instance(parse_rational(name.substr(9)));
  if (name.rfind("majority-generic:", 0) == 0) return majority_generic_instance(parse_rational(name.substr(17)));
  throw DomainError("unknown example '" + name +
                    "' (expected fig1, simpson, simpson-generic, majority:EPS or majority-generic:EPS)");
}

inline const std::vector<std::string>& canonical_names() {
  static const std::vector<std::string> names = {"g_star", "g_circ", "g1", "h_improver", "nondiscrete_g"};
  return names;
}

namespace detail {

inline std::size_t row_at(const Instance& inst, std::vector<int> coords, Group g) {
  for (std::size_t j = 0; j < inst.num_features(); ++j)
    if (inst.feature(j).coords == coords) {
      if (auto r = inst.row_index(j, g)) return *r;
    }
  throw DomainError("instance has no row for the requested feature vector");
}

inline void require_two_variables(const Instance& inst, const std::string& name) {
  if (!inst.boolean_form() || *inst.k() != 2)
    throw DomainError("approximator '" + name + "' needs a two-variable Boolean instance");
  require_valid(inst);
}

}  // namespace detail

/// Named approximators: g_star (one cell per row), g_circ (one cell per feature vector),
/// g1 (split on x1), h_improver (g1 with (1,1,D) and the x1=0 half separated) and
/// nondiscrete_g (the six-cell approximator whose improvers are all non-discrete).
inline Approximator canonical_approximator(const InstancePtr& inst, const std::string& name) {
  if (name == "g_star") {
    std::vector<std::vector<std::size_t>> blocks;
    for (std::size_t r = 0; r < inst->num_rows(); ++r) blocks.push_back({r});
    return from_partition(inst, blocks);
  }
  if (name == "g_circ") {
    std::vector<std::vector<std::size_t>> blocks(inst->num_features());
    for (std::size_t r = 0; r < inst->num_rows(); ++r) blocks[inst->row(r).feature].push_back(r);
    return from_partition(inst, blocks);
  }
  if (name == "g1") return from_variable_selection(inst, {1});
  using detail::row_at;
  const Instance& in = *inst;
  if (name == "h_improver") {
    detail::require_two_variables(in, name);
    return from_partition(inst, {{row_at(in, {1, 1}, Group::D)},
                                 {row_at(in, {1, 1}, Group::A), row_at(in, {1, 0}, Group::A), row_at(in, {1, 0}, Group::D)},
                                 {row_at(in, {0, 1}, Group::A), row_at(in, {0, 1}, Group::D), row_at(in, {0, 0}, Group::A),
                                  row_at(in, {0, 0}, Group::D)}});
  }
  if (name == "nondiscrete_g") {
    detail::require_two_variables(in, name);
    std::vector<std::size_t> s = {row_at(in, {1, 1}, Group::D), row_at(in, {0, 1}, Group::D), row_at(in, {0, 0}, Group::D)};
    const std::size_t r10d = row_at(in, {1, 0}, Group::D);
    if (!(group_average(in, s) > in.f(r10d)))
      throw DomainError("nondiscrete_g needs the average f of {(1,1,D),(0,1,D),(0,0,D)} to exceed f(1,0,D)");
    return from_partition(inst, {{row_at(in, {1, 1}, Group::A)}, s, {r10d}, {row_at(in, {1, 0}, Group::A)},
                                 {row_at(in, {0, 1}, Group::A)}, {row_at(in, {0, 0}, Group::A)}});
  }
  throw DomainError("unknown approximator name '" + name + "'");
}

}  // namespace equitycells
