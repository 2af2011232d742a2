#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "equitycells/approximator.hpp"
#include "equitycells/error.hpp"
#include "equitycells/rational.hpp"

namespace equitycells {

/// Piecewise-constant curve: values[j] holds on (breakpoints[j], breakpoints[j+1]).
struct StepCurve {
  std::vector<Rational> breakpoints;
  std::vector<Rational> values;

  /// Right-continuous evaluation; r = 1 takes the last interval's value.
  const Rational& at(const Rational& r) const {
    std::size_t j = std::upper_bound(breakpoints.begin(), breakpoints.end(), r,
                                     [](const Rational& a, const Rational& b) { return cmp(a, b) < 0; }) -
                    breakpoints.begin();
    if (j == 0) j = 1;
    return values[std::min(j, values.size()) - 1];
  }
};

struct CurvePoint {
  Rational V;
  Rational W;
};

/// Exact prefix integrals V*(r) = ∫₀ʳ v and W*(r) = ∫₀ʳ w, tabulated at the cell boundaries.
/// Between boundaries both are linear with slopes θ and σ of the cell being admitted.
struct CumulativeCurve {
  std::vector<Rational> breakpoints;  // r_0 = 0 < r_1 < ... < r_d = 1
  std::vector<Rational> vstar;        // V*(r_j)
  std::vector<Rational> wstar;        // W*(r_j)
  std::vector<Rational> theta;        // slope of V* on interval j
  std::vector<Rational> sigma;        // slope of W* on interval j

  std::size_t interval_of(const Rational& r) const {
    std::size_t j = std::upper_bound(breakpoints.begin(), breakpoints.end(), r,
                                     [](const Rational& a, const Rational& b) { return cmp(a, b) < 0; }) -
                    breakpoints.begin();
    if (j == 0) return 0;
    return std::min(j - 1, theta.size() - 1);
  }

  /// (V*(r), W*(r)) for r in [0, 1].
  CurvePoint star_at(const Rational& r) const {
    std::size_t j = interval_of(r);
    Rational dr = r - breakpoints[j];
    return {vstar[j] + dr * theta[j], wstar[j] + dr * sigma[j]};
  }
};

inline std::pair<StepCurve, StepCurve> marginal_curves(const Approximator& g) {
  StepCurve v, w;
  Rational r = 0;
  v.breakpoints.push_back(r);
  for (const Cell& c : g.cells()) {
    r += c.measure();
    v.breakpoints.push_back(r);
    v.values.push_back(c.theta());
    w.values.push_back(c.sigma());
  }
  w.breakpoints = v.breakpoints;
  return {std::move(v), std::move(w)};
}

inline CumulativeCurve cumulative_curves(const Approximator& g) {
  CumulativeCurve cc;
  Rational r = 0, vs = 0, ws = 0;
  cc.breakpoints.push_back(r);
  cc.vstar.push_back(vs);
  cc.wstar.push_back(ws);
  for (const Cell& c : g.cells()) {
    r += c.measure();
    vs += c.value_sum();
    ws += c.d_measure();
    cc.breakpoints.push_back(r);
    cc.vstar.push_back(vs);
    cc.wstar.push_back(ws);
    cc.theta.push_back(c.theta());
    cc.sigma.push_back(c.sigma());
  }
  return cc;
}

/// Efficiency V(r) = V*(r)/r and equity W(r) = W*(r)/r for r in (0, 1].
inline CurvePoint evaluate(const CumulativeCurve& curve, const Rational& r) {
  if (sgn(r) <= 0 || r > 1) throw DomainError("admission rate " + to_string(r) + " outside (0,1]");
  CurvePoint p = curve.star_at(r);
  p.V /= r;
  p.W /= r;
  return p;
}

/// Values of both approximators at one admission rate (normalized).
struct PointComparison {
  Rational r;
  Rational Vh, Vg, Wh, Wg;
};

/// Outcome of comparing h against g.
struct DominanceVerdict {
  bool weak = false;              // h ⪰ g
  bool strict = false;            // h ≻ g
  bool strictEfficiency = false;  // h ≻_v g
  bool strictEquity = false;      // h ≻_w g
  bool weakEfficiency = false;    // V_h ≥ V_g on (0,1]
  bool weakEquity = false;        // W_h ≥ W_g on (0,1]
  std::optional<PointComparison> witness;         // smallest grid r in (0,1) with both strict
  std::optional<PointComparison> counterWitness;  // grid r with the largest shortfall of h
};

/// Grid on which piecewise-linear differences of two curves are decided exactly: every merged
/// breakpoint in (0,1] and the midpoint of every merged interval, ascending.
inline std::vector<Rational> decision_grid(const CumulativeCurve& a, const CumulativeCurve& b) {
  std::vector<Rational> merged;
  merged.reserve(a.breakpoints.size() + b.breakpoints.size());
  std::merge(a.breakpoints.begin(), a.breakpoints.end(), b.breakpoints.begin(), b.breakpoints.end(),
             std::back_inserter(merged), [](const Rational& x, const Rational& y) { return cmp(x, y) < 0; });
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  std::vector<Rational> grid;
  grid.reserve(2 * merged.size());
  for (std::size_t i = 1; i < merged.size(); ++i) {
    grid.push_back((merged[i - 1] + merged[i]) / 2);
    grid.push_back(merged[i]);
  }
  return grid;
}

/// Decides h ⪰ g, h ≻ g, h ≻_v g and h ≻_w g exactly. The differences V*_h − V*_g and
/// W*_h − W*_g are linear between merged breakpoints and vanish at 0, so their sign pattern
/// on the decision grid is their sign pattern on (0,1].
inline DominanceVerdict compare(const CumulativeCurve& h, const CumulativeCurve& g) {
  DominanceVerdict verdict;
  bool v_nonneg = true, w_nonneg = true, v_pos = false, w_pos = false;
  Rational worst = 0;
  for (const Rational& r : decision_grid(h, g)) {
    CurvePoint ph = h.star_at(r), pg = g.star_at(r);
    const int sv = cmp(ph.V, pg.V), sw = cmp(ph.W, pg.W);
    v_nonneg &= sv >= 0;
    w_nonneg &= sw >= 0;
    v_pos |= sv > 0;
    w_pos |= sw > 0;
    auto point = [&] { return PointComparison{r, ph.V / r, pg.V / r, ph.W / r, pg.W / r}; };
    if (sv > 0 && sw > 0 && r < 1 && !verdict.witness) verdict.witness = point();
    if (sv < 0 || sw < 0) {
      Rational shortfall = std::max(Rational(pg.V - ph.V), Rational(pg.W - ph.W)) / r;
      if (!verdict.counterWitness || shortfall > worst) {
        worst = shortfall;
        verdict.counterWitness = point();
      }
    }
  }
  verdict.weak = v_nonneg && w_nonneg;
  verdict.weakEfficiency = v_nonneg;
  verdict.weakEquity = w_nonneg;
  verdict.strictEfficiency = v_nonneg && v_pos;
  verdict.strictEquity = w_nonneg && w_pos;
  verdict.strict = verdict.weak && verdict.witness.has_value();
  if (!verdict.strict) verdict.witness.reset();
  return verdict;
}

inline DominanceVerdict compare(const Approximator& h, const Approximator& g) {
  if (!h.same_instance(g)) throw DomainError("compared approximators partition different instances");
  return compare(cumulative_curves(h), cumulative_curves(g));
}

/// CSV of both marginal and cumulative curves at every breakpoint and interval midpoint.
/// Columns r,v,w,Vstar,Wstar,V,W hold exact rationals; the *_dec columns repeat them as decimals.
/// At r = 0, V and W are their right limits; at a breakpoint, v and w belong to the next interval.
inline void write_curves_csv(std::ostream& out, const Approximator& g, int places = 12) {
  const CumulativeCurve cc = cumulative_curves(g);
  out << "r,v,w,Vstar,Wstar,V,W,r_dec,v_dec,w_dec,Vstar_dec,Wstar_dec,V_dec,W_dec\n";
  auto line = [&](const Rational& r, std::size_t interval) {
    CurvePoint star = cc.star_at(r);
    Rational V = sgn(r) == 0 ? cc.theta[interval] : Rational(star.V / r);
    Rational W = sgn(r) == 0 ? cc.sigma[interval] : Rational(star.W / r);
    const Rational* cols[] = {&r, &cc.theta[interval], &cc.sigma[interval], &star.V, &star.W, &V, &W};
    for (std::size_t i = 0; i < 7; ++i) out << (i ? "," : "") << to_string(*cols[i]);
    for (std::size_t i = 0; i < 7; ++i) out << "," << to_decimal(*cols[i], places);
    out << "\n";
  };
  const std::size_t d = cc.theta.size();
  for (std::size_t j = 0; j < d; ++j) {
    line(cc.breakpoints[j], j);
    line((cc.breakpoints[j] + cc.breakpoints[j + 1]) / 2, j);
  }
  line(cc.breakpoints[d], d - 1);
}

}  // namespace equitycells
