#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "equitycells/approximator.hpp"
#include "equitycells/curves.hpp"
#include "equitycells/error.hpp"
#include "equitycells/improve.hpp"
#include "equitycells/instance.hpp"
#include "equitycells/rational.hpp"

namespace equitycells {

inline constexpr std::size_t kDefaultMaxRows = 10;

/// Enumeration cap: EQUITYCELLS_MAX_ROWS when set to a positive integer, otherwise 10.
inline std::size_t default_max_rows() {
  if (const char* env = std::getenv("EQUITYCELLS_MAX_ROWS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultMaxRows;
}

struct EnumerationOptions {
  std::optional<std::size_t> maxCells;  // defaults to min(B, rows)
  std::size_t maxRows = default_max_rows();
};

/// Calls fn(rgs, blocks) for every restricted growth string of length m using at most
/// max_blocks distinct values, in lexicographic order.
template <class Fn>
std::size_t for_each_rgs(std::size_t m, std::size_t max_blocks, Fn&& fn) {
  if (m == 0 || max_blocks == 0) return 0;
  std::vector<std::size_t> a(m, 0), prefix_max(m, 0);  // prefix_max[i] = max(a[0..i])
  std::size_t count = 0;
  for (;;) {
    ++count;
    fn(static_cast<const std::vector<std::size_t>&>(a), prefix_max[m - 1] + 1);
    std::size_t i = m - 1;
    for (; i >= 1; --i)
      if (a[i] <= prefix_max[i - 1] && a[i] + 1 < max_blocks) break;
    if (i == 0) return count;
    ++a[i];
    prefix_max[i] = std::max(prefix_max[i - 1], a[i]);
    for (std::size_t t = i + 1; t < m; ++t) {
      a[t] = 0;
      prefix_max[t] = prefix_max[i];
    }
  }
}

inline std::vector<std::vector<std::size_t>> rgs_blocks(const std::vector<std::size_t>& a, std::size_t blocks) {
  std::vector<std::vector<std::size_t>> out(blocks);
  for (std::size_t i = 0; i < a.size(); ++i) out[a[i]].push_back(i);
  return out;
}

namespace detail {

inline std::size_t checked_max_cells(const Instance& inst, const EnumerationOptions& options) {
  const std::size_t m = inst.num_rows();
  if (m > options.maxRows)
    throw ScaleError("enumeration is capped at " + std::to_string(options.maxRows) + " rows; instance has " +
                     std::to_string(m) + " (raise with --max-rows or EQUITYCELLS_MAX_ROWS)");
  const std::size_t bound = static_cast<std::size_t>(inst.cell_bound());
  std::size_t cells = options.maxCells.value_or(std::min(bound, m));
  if (cells == 0) throw DomainError("maxCells must be positive");
  if (cells > bound) throw DomainError("maxCells " + std::to_string(cells) + " exceeds the cell bound B=" + std::to_string(bound));
  return cells;
}

}  // namespace detail

/// Every discrete approximator with at most maxCells cells, each exactly once, in
/// restricted-growth-string order. Returns the number emitted.
template <class Fn>
std::size_t enumerate_discrete(const InstancePtr& inst, const EnumerationOptions& options, Fn&& fn) {
  const std::size_t cells = detail::checked_max_cells(*inst, options);
  return for_each_rgs(inst->num_rows(), cells, [&](const std::vector<std::size_t>& a, std::size_t blocks) {
    fn(from_partition(inst, rgs_blocks(a, blocks)));
  });
}

inline std::vector<Approximator> enumerate_discrete(const InstancePtr& inst, const EnumerationOptions& options = {}) {
  std::vector<Approximator> out;
  enumerate_discrete(inst, options, [&](Approximator g) { out.push_back(std::move(g)); });
  return out;
}

namespace detail {

/// Double-precision copy of a cumulative curve, used only to reject pairs quickly.
struct FastCurve {
  std::vector<double> r, vs, ws;

  explicit FastCurve(const CumulativeCurve& c) {
    for (std::size_t j = 0; j < c.breakpoints.size(); ++j) {
      r.push_back(c.breakpoints[j].get_d());
      vs.push_back(c.vstar[j].get_d());
      ws.push_back(c.wstar[j].get_d());
    }
  }

  std::pair<double, double> at(double x) const {
    std::size_t j = static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), x) - r.begin());
    if (j == 0) j = 1;
    if (j >= r.size()) return {vs.back(), ws.back()};
    double t = (x - r[j - 1]) / (r[j] - r[j - 1]);
    return {vs[j - 1] + t * (vs[j] - vs[j - 1]), ws[j - 1] + t * (ws[j] - ws[j - 1])};
  }
};

inline constexpr double kPrefilterSlack = 1e-9;

/// False only when h clearly fails to weakly dominate g somewhere; exact confirmation follows.
inline bool may_weakly_dominate(const FastCurve& h, const FastCurve& g) {
  auto probe = [&](const std::vector<double>& points) {
    for (double x : points) {
      auto [vh, wh] = h.at(x);
      auto [vg, wg] = g.at(x);
      if (vh - vg < -kPrefilterSlack || wh - wg < -kPrefilterSlack) return false;
    }
    return true;
  };
  return probe(g.r) && probe(h.r);
}

}  // namespace detail

struct NoImproverResult {
  bool holds = true;            // no enumerated discrete approximator strictly improves g
  std::size_t checked = 0;
  std::vector<Approximator> improvers;  // enumeration order
};

/// Exhaustive search for discrete strict improvers of g.
inline NoImproverResult verify_no_discrete_improver(const Approximator& g, const EnumerationOptions& options = {}) {
  const CumulativeCurve gc = cumulative_curves(g);
  const detail::FastCurve gf(gc);
  NoImproverResult result;
  result.checked = enumerate_discrete(g.instance_ptr(), options, [&](Approximator h) {
    const CumulativeCurve hc = cumulative_curves(h);
    if (!detail::may_weakly_dominate(detail::FastCurve(hc), gf)) return;
    if (compare(hc, gc).strict) result.improvers.push_back(std::move(h));
  });
  result.holds = result.improvers.empty();
  return result;
}

struct FrontierReport {
  std::size_t enumerated = 0;
  std::vector<Approximator> members;  // enumeration order
};

/// Discrete frontier: enumerated approximators that no enumerated approximator strictly improves.
/// An under-approximation of maximality, which also quantifies over non-discrete improvers.
inline FrontierReport discrete_frontier(const InstancePtr& inst, const EnumerationOptions& options = {}) {
  std::vector<Approximator> all = enumerate_discrete(inst, options);
  std::vector<CumulativeCurve> exact;
  std::vector<detail::FastCurve> fast;
  exact.reserve(all.size());
  fast.reserve(all.size());
  for (const auto& g : all) {
    exact.push_back(cumulative_curves(g));
    fast.emplace_back(exact.back());
  }
  FrontierReport report;
  report.enumerated = all.size();
  for (std::size_t i = 0; i < all.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < all.size() && !dominated; ++j) {
      if (i == j || !detail::may_weakly_dominate(fast[j], fast[i])) continue;
      dominated = compare(exact[j], exact[i]).strict;
    }
    if (!dominated) report.members.push_back(all[i]);
  }
  return report;
}

enum class GradedFilter { Graded, Simple };

struct ExhaustiveFailure {
  std::string partition;
  std::string message;
};

struct Theorem1Report {
  GradedFilter filter = GradedFilter::Graded;
  std::size_t enumerated = 0;
  std::size_t candidates = 0;  // partitions passing the filter
  std::size_t improved = 0;    // post-verified strict improvements
  std::size_t nonDiscreteImprovers = 0;
  std::map<std::string, std::size_t> caseCounts;
  std::vector<ExhaustiveFailure> failures;
};

/// Runs improve_graded on every enumerated graded (or simple) approximator.
inline Theorem1Report exhaustive_theorem1(const InstancePtr& inst, GradedFilter filter = GradedFilter::Graded,
                                          const EnumerationOptions& options = {}) {
  require_theorem_conditions(*inst);
  Theorem1Report report;
  report.filter = filter;
  report.enumerated = enumerate_discrete(inst, options, [&](const Approximator& g) {
    auto flags = classify(g);
    if ((filter == GradedFilter::Graded ? flags.graded : flags.simple) != Flag::Yes) return;
    ++report.candidates;
    try {
      auto result = improve_graded(g, CheckOptions{false, true});
      ++report.improved;
      ++report.caseCounts[case_name(result.move.caseTag)];
      if (!result.improved.is_discrete()) ++report.nonDiscreteImprovers;
    } catch (const Error& e) {
      report.failures.push_back({g.label(), e.what()});
    }
  });
  return report;
}

struct Theorem2Report {
  std::size_t featurePartitions = 0;
  std::size_t trivialSkipped = 0;
  std::size_t candidates = 0;
  std::size_t passed = 0;
  std::vector<ExhaustiveFailure> failures;
};

/// Checks χ(g) ≻_v g and g ≻_w χ(g) for every non-trivial group-agnostic approximator, built
/// from the set partitions of the feature vectors.
inline Theorem2Report exhaustive_theorem2(const InstancePtr& inst, const EnumerationOptions& options = {}) {
  require_theorem_conditions(*inst);
  detail::checked_max_cells(*inst, options);
  Theorem2Report report;
  const std::size_t n = inst->num_features();
  report.featurePartitions = for_each_rgs(n, n, [&](const std::vector<std::size_t>& a, std::size_t blocks) {
    std::vector<std::vector<std::size_t>> rows(blocks);
    for (std::size_t j = 0; j < n; ++j) {
      rows[a[j]].push_back(*inst->row_index(j, Group::A));
      rows[a[j]].push_back(*inst->row_index(j, Group::D));
    }
    Approximator g = from_partition(inst, rows);
    if (!g.nontrivial()) {
      ++report.trivialSkipped;
      return;
    }
    ++report.candidates;
    try {
      auto split = group_split(g, CheckOptions{false, false});
      if (split.efficiency.strictEfficiency && split.equity.strictEquity) {
        ++report.passed;
      } else {
        report.failures.push_back({g.label(), std::string("strictEfficiency(χ(g),g)=") +
                                                  (split.efficiency.strictEfficiency ? "true" : "false") +
                                                  ", strictEquity(g,χ(g))=" +
                                                  (split.equity.strictEquity ? "true" : "false")});
      }
    } catch (const Error& e) {
      report.failures.push_back({g.label(), e.what()});
    }
  });
  return report;
}

/// A finite distribution over strictly increasing values; masses need not be normalized.
struct Distribution {
  std::vector<Rational> values;
  std::vector<Rational> masses;
};

struct DominanceHierarchyReport {
  bool lrHolds = false;    // q_i/p_i strictly increasing
  bool fosdHolds = false;  // Prb{Q > t} > Prb{P > t} for u_1 ≤ t < u_n
  bool expHolds = false;   // E[Q] > E[P]
  std::optional<std::size_t> lrWitness;  // i with q_{i+1}/p_{i+1} ≤ q_i/p_i
  std::optional<Rational> fosdWitness;   // t where the survival inequality fails
  Rational meanP;
  Rational meanQ;
};

/// Likelihood-ratio, first-order stochastic and expectation dominance of Q over P, decided exactly.
inline DominanceHierarchyReport dominance_hierarchy(const Distribution& P, const Distribution& Q) {
  const std::size_t n = P.values.size();
  if (P.masses.size() != n || Q.values.size() != Q.masses.size()) throw DomainError("values and masses differ in length");
  if (Q.values != P.values) throw DomainError("distributions have different supports");
  if (n < 2) throw DomainError("dominance needs at least two support points");
  for (std::size_t i = 0; i < n; ++i) {
    if (sgn(P.masses[i]) <= 0 || sgn(Q.masses[i]) <= 0) throw DomainError("masses must be positive");
    if (i > 0 && !(P.values[i - 1] < P.values[i])) throw DomainError("support values must be strictly increasing");
  }
  Rational totalP = 0, totalQ = 0;
  for (std::size_t i = 0; i < n; ++i) {
    totalP += P.masses[i];
    totalQ += Q.masses[i];
  }
  std::vector<Rational> p(n), q(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = P.masses[i] / totalP;
    q[i] = Q.masses[i] / totalQ;
  }
  DominanceHierarchyReport report;
  report.lrHolds = true;
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(q[i + 1] / p[i + 1] > q[i] / p[i])) {
      report.lrHolds = false;
      report.lrWitness = i;
      break;
    }
  report.fosdHolds = true;
  Rational survP = 1, survQ = 1;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    survP -= p[i];
    survQ -= q[i];
    if (!(survQ > survP)) {
      report.fosdHolds = false;
      report.fosdWitness = P.values[i];
      break;
    }
  }
  report.meanP = 0;
  report.meanQ = 0;
  for (std::size_t i = 0; i < n; ++i) {
    report.meanP += p[i] * P.values[i];
    report.meanQ += q[i] * P.values[i];
  }
  report.expHolds = report.meanQ > report.meanP;
  return report;
}

/// The instance's group distributions over f-values: P = D-group, Q = A-group.
inline std::pair<Distribution, Distribution> group_pair(const Instance& inst) {
  auto d = group_distributions(inst);
  return {Distribution{d.values, d.probD}, Distribution{d.values, d.probA}};
}

struct BudgetEntry {
  std::vector<int> vars;
  std::string label;
  Rational vHalf;  // V(1/2)
  std::vector<std::vector<int>> efficiencyImproves;  // subsets this one strictly improves in efficiency
  bool perfect = false;                               // V equals that of the exact per-row approximator
};

struct BudgetReport {
  int c = 0;
  std::vector<BudgetEntry> entries;  // ranked
  std::optional<std::size_t> winner;  // index into entries
  std::vector<Rational> margins;      // V_winner(1/2) − V_entry(1/2), per entry
};

inline std::string variable_name(const Instance& inst, int v) {
  return v == *inst.k() + 1 ? "gamma" : "x" + std::to_string(v);
}

/// Compares every variable selection of size c by efficiency.
inline BudgetReport budget_selection(const InstancePtr& inst, int c) {
  detail::require_boolean(*inst, "budget selection");
  const int vars = *inst->k() + 1;
  if (c < 1 || c > vars) throw DomainError("budget c=" + std::to_string(c) + " outside 1.." + std::to_string(vars));

  std::vector<std::vector<std::size_t>> singletons;
  for (std::size_t r = 0; r < inst->num_rows(); ++r) singletons.push_back({r});
  const CumulativeCurve exact = cumulative_curves(from_partition(inst, singletons));
  const Rational half(1, 2);

  std::vector<BudgetEntry> entries;
  std::vector<CumulativeCurve> curves;
  std::vector<int> mask(static_cast<std::size_t>(vars), 0);
  std::fill(mask.begin(), mask.begin() + c, 1);
  do {
    BudgetEntry e;
    for (int v = 0; v < vars; ++v)
      if (mask[static_cast<std::size_t>(v)]) e.vars.push_back(v + 1);
    for (std::size_t i = 0; i < e.vars.size(); ++i) e.label += (i ? "," : "") + variable_name(*inst, e.vars[i]);
    curves.push_back(cumulative_curves(from_variable_selection(inst, e.vars)));
    e.vHalf = evaluate(curves.back(), half).V;
    e.perfect = compare(curves.back(), exact).weakEfficiency;
    entries.push_back(std::move(e));
  } while (std::prev_permutation(mask.begin(), mask.end()));

  for (std::size_t i = 0; i < entries.size(); ++i)
    for (std::size_t j = 0; j < entries.size(); ++j)
      if (i != j && compare(curves[i], curves[j]).strictEfficiency) entries[i].efficiencyImproves.push_back(entries[j].vars);

  std::stable_sort(entries.begin(), entries.end(), [](const BudgetEntry& a, const BudgetEntry& b) {
    if (a.efficiencyImproves.size() != b.efficiencyImproves.size())
      return a.efficiencyImproves.size() > b.efficiencyImproves.size();
    return a.vHalf > b.vHalf;
  });
  BudgetReport report;
  report.c = c;
  report.entries = std::move(entries);
  if (report.entries.front().efficiencyImproves.size() + 1 == report.entries.size()) report.winner = 0;
  for (const auto& e : report.entries) report.margins.push_back(report.entries.front().vHalf - e.vHalf);
  return report;
}

}  // namespace equitycells
