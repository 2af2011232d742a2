#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <memory>
#include <random>
#include <vector>

#include "equitycells/equitycells.hpp"

namespace ectest {

using namespace equitycells;

inline InstancePtr share(Instance inst) { return std::make_shared<const Instance>(std::move(inst)); }
inline InstancePtr fig1() { return share(fig_example_instance()); }
inline InstancePtr simpson() { return share(simpson_instance()); }
inline InstancePtr simpson_generic() { return share(simpson_generic_instance()); }
inline InstancePtr majority(const Rational& eps) { return share(majority_instance(eps)); }

inline Rational q(long n, long d = 1) { return make_rational(n, d); }

/// Number of set partitions of m elements into at most k blocks, from the Stirling recurrence.
inline std::size_t bell_restricted(std::size_t m, std::size_t k) {
  std::vector<std::vector<std::size_t>> s(m + 1, std::vector<std::size_t>(m + 1, 0));
  s[0][0] = 1;
  for (std::size_t i = 1; i <= m; ++i)
    for (std::size_t j = 1; j <= i; ++j) s[i][j] = j * s[i - 1][j] + s[i - 1][j - 1];
  std::size_t total = 0;
  for (std::size_t j = 1; j <= std::min(m, k); ++j) total += s[m][j];
  return total;
}

/// V*(r) and W*(r) summed cell by cell, independent of the curves module.
inline std::pair<Rational, Rational> prefix_integrals(const Approximator& g, const Rational& r) {
  Rational left = 0, vs = 0, ws = 0;
  for (const Cell& c : g.cells()) {
    if (left >= r) break;
    Rational take = c.measure();
    if (left + take > r) take = r - left;
    Rational num = 0, dmass = 0;
    for (std::size_t row : c.support()) {
      num += c.allocation(row) * g.instance().f(row);
      if (g.instance().group(row) == Group::D) dmass += c.allocation(row);
    }
    vs += take * num / c.measure();
    ws += take * dmass / c.measure();
    left += c.measure();
  }
  return {vs, ws};
}

struct SampledVerdict {
  bool weak = true, strict = false, strictEfficiency = false, strictEquity = false;
};

/// Dominance decided by sampling r = a/denom for a = 1..denom.
inline SampledVerdict sampled_compare(const Approximator& h, const Approximator& g, long denom) {
  SampledVerdict out;
  bool vpos = false, wpos = false, vneg = false, wneg = false;
  for (long a = 1; a <= denom; ++a) {
    Rational r = make_rational(a, denom);
    auto [vh, wh] = prefix_integrals(h, r);
    auto [vg, wg] = prefix_integrals(g, r);
    vneg |= vh < vg;
    wneg |= wh < wg;
    vpos |= vh > vg;
    wpos |= wh > wg;
    if (a < denom && vh > vg && wh > wg) out.strict = true;
  }
  out.weak = !vneg && !wneg;
  out.strict = out.strict && out.weak;
  out.strictEfficiency = !vneg && vpos;
  out.strictEquity = !wneg && wpos;
  return out;
}

/// Random pair with Q likelihood-ratio dominating P over values 1..n.
inline std::pair<Distribution, Distribution> random_lr_pair(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<long> mass(1, 50), step(1, 9);
  Distribution p, qd;
  long ratio_num = 1;
  for (std::size_t i = 0; i < n; ++i) {
    p.values.push_back(Rational(static_cast<long>(i) + 1));
    qd.values.push_back(Rational(static_cast<long>(i) + 1));
    Rational pm(mass(rng));
    ratio_num += step(rng);
    p.masses.push_back(pm);
    qd.masses.push_back(pm * make_rational(ratio_num, 10));
  }
  return {p, qd};
}

/// Random pair with arbitrary positive masses.
inline std::pair<Distribution, Distribution> random_pair(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<long> mass(1, 50);
  Distribution p, qd;
  for (std::size_t i = 0; i < n; ++i) {
    p.values.push_back(Rational(static_cast<long>(i) + 1));
    qd.values.push_back(Rational(static_cast<long>(i) + 1));
    p.masses.push_back(Rational(mass(rng)));
    qd.masses.push_back(Rational(mass(rng)));
  }
  return {p, qd};
}

}  // namespace ectest

namespace ectest {

/// Random instance satisfying disadvantage: distinct f = a/denom, D-masses random, A-masses equal
/// to D-masses times a ratio strictly increasing in f. Boolean with k coordinates when k > 0,
/// otherwise ordinal with n feature vectors.
inline Instance random_disadvantaged(std::mt19937_64& rng, int k, std::size_t n = 0, long denom = 997) {
  if (k > 0) n = std::size_t{1} << k;
  std::vector<long> fs;
  std::uniform_int_distribution<long> fdraw(1, denom - 1), mass(1, 40), step(1, 12);
  while (fs.size() < n) {
    long v = fdraw(rng);
    if (std::find(fs.begin(), fs.end(), v) == fs.end()) fs.push_back(v);
  }
  std::vector<long> sorted = fs;
  std::sort(sorted.begin(), sorted.end());
  std::vector<Rational> ratio(n);
  long acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += step(rng);
    ratio[i] = make_rational(acc, 10);
  }
  std::vector<InstanceRow> rows;
  Rational total = 0;
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t rank = static_cast<std::size_t>(std::find(sorted.begin(), sorted.end(), fs[j]) - sorted.begin());
    FeatureVector x;
    if (k > 0) {
      for (int b = k - 1; b >= 0; --b) x.coords.push_back(static_cast<int>((j >> b) & 1));
    } else {
      x.id = static_cast<int>(rank) + 1;
    }
    Rational md(mass(rng));
    Rational ma = md * ratio[rank];
    rows.push_back({x, Group::D, make_rational(fs[j], denom), md});
    rows.push_back({x, Group::A, make_rational(fs[j], denom), ma});
    total += md + ma;
  }
  for (auto& r : rows) r.mu /= total;
  return Instance::from_rows(k > 0 ? std::optional<int>(k) : std::nullopt, rows);
}

/// Random generic disadvantaged Boolean instance (redraws until generic). The large prime
/// denominator keeps coincidental subset averages rare.
inline Instance random_generic_boolean(std::mt19937_64& rng, int k) {
  for (;;) {
    Instance inst = random_disadvantaged(rng, k, 0, 1000003);
    if (check_genericity(inst).holds) return inst;
  }
}

}  // namespace ectest
