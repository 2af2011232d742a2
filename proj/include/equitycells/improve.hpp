#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "equitycells/approximator.hpp"
#include "equitycells/curves.hpp"
#include "equitycells/error.hpp"
#include "equitycells/instance.hpp"
#include "equitycells/rational.hpp"

namespace equitycells {

/// Which guards a constructive operation runs. Oracle sweeps check the instance once and then
/// turn `preconditions` off; forcing a construction onto an instance that violates the
/// modelling assumptions also turns `verify` off. `genericity` = false waives only the subset
/// scan, which is capped in size.
struct CheckOptions {
  bool preconditions = true;
  bool verify = true;
  bool genericity = true;
};

/// Throws PreconditionError unless the instance satisfies disadvantage and (unless waived) genericity.
inline void require_theorem_conditions(const Instance& inst, bool genericity = true) {
  auto dis = check_disadvantage(inst);
  if (!dis.holds) throw PreconditionError("disadvantage condition fails: " + dis.witnesses.front().detail);
  if (!genericity) return;
  auto gen = check_genericity(inst);
  if (!gen.holds) throw PreconditionError("genericity condition fails: " + gen.witnesses.front().detail);
}

enum class CaseTag { C1, C2, C3a, C3b, C3c };

inline const char* case_name(CaseTag t) {
  switch (t) {
    case CaseTag::C1: return "C1";
    case CaseTag::C2: return "C2";
    case CaseTag::C3a: return "C3a";
    case CaseTag::C3b: return "C3b";
    default: return "C3c";
  }
}

/// A feature x_j whose A-row sits in a strictly higher-valued cell than its D-row.
struct SeparableWitness {
  std::size_t feature = 0;
  std::size_t cellD = 0;  // S(j), index into the approximator's cells
  std::size_t cellA = 0;  // T(j)
  Rational thetaD;
  Rational thetaA;
};

/// Removal of some measure of `row` from cell `cell`.
struct Pull {
  std::size_t cell = 0;
  std::size_t row = 0;
};

struct EpsilonBound {
  Rational maxEps;
  bool orderBinds = false;  // the θ-collision bound is at most the available row measure
  std::string bindingConstraint;
  std::optional<std::size_t> neighborCell;  // cell the residual would collide with
  std::optional<std::size_t> bindingPull;   // pull whose residual collides first
  Rational chosen;                          // ε used by the constructive moves
};

struct ImprovementMove {
  CaseTag caseTag = CaseTag::C1;
  std::vector<std::size_t> sourceCells;  // indices in g
  std::vector<std::size_t> rows;
  Rational epsilon;
  std::size_t insertedPosition = 0;             // index of the new cell in g'
  std::vector<std::size_t> residualPositions;   // indices of the reduced source cells in g'
  EpsilonBound bound;
  std::optional<SeparableWitness> witness;
};

struct ImprovementResult {
  Approximator improved;
  ImprovementMove move;
  DominanceVerdict verdict;  // compare(improved, original)
};

namespace detail {

inline std::string curve_dump(const Approximator& g) {
  const auto cc = cumulative_curves(g);
  std::string s = g.label() + " | breakpoints/V*/W*:";
  for (std::size_t j = 0; j < cc.breakpoints.size(); ++j)
    s += " (" + to_string(cc.breakpoints[j]) + "," + to_string(cc.vstar[j]) + "," + to_string(cc.wstar[j]) + ")";
  return s;
}

inline std::size_t position_of(const Approximator& g, const std::vector<Rational>& allocation) {
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.cell(i).allocation() == allocation) return i;
  throw VerificationError("constructed cell not found in result");
}

}  // namespace detail

/// First feature (instance order) with θ(T(j)) > θ(S(j)), or nothing. No preconditions.
inline std::optional<SeparableWitness> scan_separable_witness(const Approximator& g) {
  const Instance& inst = g.instance();
  for (std::size_t j = 0; j < inst.num_features(); ++j) {
    auto ra = inst.row_index(j, Group::A), rd = inst.row_index(j, Group::D);
    if (!ra || !rd) continue;
    std::size_t a = g.cell_of(*ra), d = g.cell_of(*rd);
    if (g.cell(a).theta() > g.cell(d).theta()) return SeparableWitness{j, d, a, g.cell(d).theta(), g.cell(a).theta()};
  }
  return std::nullopt;
}

/// Witness guaranteed by the separable-approximator lemma. Requires disadvantage, genericity,
/// and a discrete, non-trivial, separable g.
inline SeparableWitness separable_witness(const Approximator& g, const CheckOptions& checks = {}) {
  if (checks.preconditions) {
    require_theorem_conditions(g.instance(), checks.genericity);
    auto flags = classify(g);
    if (flags.discrete != Flag::Yes) throw PreconditionError("separable witness requires a discrete approximator");
    if (flags.nonTrivial != Flag::Yes) throw PreconditionError("separable witness requires a non-trivial approximator");
    if (flags.separable != Flag::Yes) throw PreconditionError("separable witness requires a separable approximator");
  }
  if (auto w = scan_separable_witness(g)) return *w;
  auto dis = check_disadvantage(g.instance());
  throw VerificationError("no feature with θ(T(j)) > θ(S(j)) in " + g.label() +
                          "; disadvantage re-check: " + (dis.holds ? "holds" : "fails"));
}

/// The two partial sums K (singleton T'(j)) and L (|T'(j)| > 1) from the separable lemma's
/// argument, computed after splitting trivial A/D pair cells. K + L = 0 always.
struct SeparableBalanceSums {
  Rational K;
  Rational L;
};

inline SeparableBalanceSums separable_balance_sums(const Approximator& g) {
  const Instance& inst = g.instance();
  auto dist = group_distributions(inst);
  // Cell membership with mixed trivial cells split by group.
  auto block_of = [&](std::size_t row) {
    std::vector<std::size_t> rows;
    for (std::size_t r : g.cell(g.cell_of(row)).support())
      if (inst.group(r) == inst.group(row)) rows.push_back(r);
    return rows;
  };
  SeparableBalanceSums sums{0, 0};
  for (std::size_t pos = 0; pos < dist.features.size(); ++pos) {
    std::size_t j = dist.features[pos];
    std::size_t rd = *inst.row_index(j, Group::D), ra = *inst.row_index(j, Group::A);
    auto s = block_of(rd);
    auto t = block_of(ra);
    std::vector<std::size_t> t_prime;
    for (std::size_t r : t) t_prime.push_back(inst.partner(r));
    Rational term = dist.probD[pos] * (group_average(inst, s) - group_average(inst, t_prime));
    (t_prime.size() == 1 ? sums.K : sums.L) += term;
  }
  return sums;
}

/// Largest ε for which every residual source cell keeps its place in the θ order, capped by the
/// measure each pull can take. `chosen` is half the collision bound when that binds, otherwise
/// the full available measure.
inline EpsilonBound max_admissible_epsilon(const Approximator& g, const std::vector<Pull>& pulls) {
  const Instance& inst = g.instance();
  if (pulls.empty()) throw DomainError("no rows to pull");
  EpsilonBound b;
  std::optional<Rational> cap, collision;
  for (std::size_t p = 0; p < pulls.size(); ++p) {
    const Pull& pull = pulls[p];
    if (pull.cell >= g.size()) throw DomainError("cell index out of range");
    const Cell& c = g.cell(pull.cell);
    if (pull.row >= inst.num_rows() || !c.contains(pull.row))
      throw DomainError("row " + std::to_string(pull.row) + " is not carried by cell " + std::to_string(pull.cell));
    const Rational& available = c.allocation(pull.row);
    if (!cap || available < *cap) cap = available;

    const Rational& y = inst.f(pull.row);
    const Rational& th = c.theta();
    if (y == th) continue;
    const bool falling = y > th;  // removing an above-average row lowers θ
    std::optional<std::size_t> neighbor;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (i == pull.cell) continue;
      const Rational& t = g.cell(i).theta();
      if (falling ? !(t < th) : !(t > th)) continue;
      if (!neighbor || (falling ? t > g.cell(*neighbor).theta() : t < g.cell(*neighbor).theta())) neighbor = i;
    }
    if (!neighbor) continue;
    const Rational& t = g.cell(*neighbor).theta();
    Rational eps = c.measure() * (t - th) / (t - y);
    if (!collision || eps < *collision) {
      collision = eps;
      b.neighborCell = neighbor;
      b.bindingPull = p;
    }
  }
  if (collision && *collision <= *cap) {
    b.maxEps = *collision;
    b.orderBinds = true;
    b.chosen = *collision / 2;
    b.bindingConstraint = "residual of cell " + std::to_string(pulls[*b.bindingPull].cell) +
                          " reaches the value of cell " + std::to_string(*b.neighborCell);
  } else {
    b.maxEps = *cap;
    b.chosen = *cap;
    b.bindingConstraint = "available row measure";
    b.neighborCell.reset();
    b.bindingPull.reset();
  }
  return b;
}

namespace detail {

struct PlannedMove {
  CaseTag tag;
  std::vector<Pull> pulls;
  std::optional<SeparableWitness> witness;
};

/// Case analysis of the graded-improvement construction.
inline PlannedMove plan_graded_move(const Approximator& g) {
  const Instance& inst = g.instance();
  // Case 1: a non-trivial cell with ∅ ≠ C⟨A⟩ ⊆ C⟨D⟩; pull the D-row of maximum f.
  // Case 2: a non-trivial cell with ∅ ≠ C⟨D⟩ ⊆ C⟨A⟩; pull the A-row of minimum f.
  for (int pass = 0; pass < 2; ++pass) {
    const bool case1 = pass == 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Cell& c = g.cell(i);
      if (!c.nontrivial()) continue;
      auto [a, d] = group_feature_sets(inst, c);
      if (a.empty() || d.empty()) continue;
      const bool nested = case1 ? std::includes(d.begin(), d.end(), a.begin(), a.end())
                                : std::includes(a.begin(), a.end(), d.begin(), d.end());
      if (!nested) continue;
      std::optional<std::size_t> best;
      for (std::size_t r : c.support()) {
        if (inst.group(r) != (case1 ? Group::D : Group::A)) continue;
        if (!best || (case1 ? inst.f(r) > inst.f(*best) : inst.f(r) < inst.f(*best))) best = r;
      }
      return {case1 ? CaseTag::C1 : CaseTag::C2, {{i, *best}}, std::nullopt};
    }
  }
  // Case 3: g is separable.
  auto w = scan_separable_witness(g);
  if (!w) throw VerificationError("separable approximator without a witness: " + g.label());
  const Rational& fx = inst.f_of_feature(w->feature);
  const std::size_t ra = *inst.row_index(w->feature, Group::A), rd = *inst.row_index(w->feature, Group::D);
  if (fx >= w->thetaA) return {CaseTag::C3a, {{w->cellD, rd}}, w};
  if (w->thetaD >= fx) return {CaseTag::C3b, {{w->cellA, ra}}, w};
  return {CaseTag::C3c, {{w->cellA, ra}, {w->cellD, rd}}, w};
}

/// Moves ε of every pulled row into one new cell.
inline std::pair<Approximator, std::vector<Rational>> apply_pulls(const Approximator& g, const std::vector<Pull>& pulls,
                                                                  const Rational& eps) {
  const Instance& inst = g.instance();
  std::vector<std::vector<Rational>> allocs;
  for (const Cell& c : g.cells()) allocs.push_back(c.allocation());
  std::vector<Rational> fresh(inst.num_rows());
  for (const Pull& p : pulls) {
    allocs[p.cell][p.row] -= eps;
    fresh[p.row] += eps;
  }
  std::vector<Cell> cells;
  for (auto& a : allocs) cells.emplace_back(inst, a);
  cells.emplace_back(inst, fresh);
  return {Approximator::from_cells(g.instance_ptr(), std::move(cells)), fresh};
}

}  // namespace detail

/// Strict improvement of a graded approximator: carves ε of one or two rows into a new cell
/// placed at its sorted position. The result is checked with compare() before returning.
inline ImprovementResult improve_graded(const Approximator& g, const CheckOptions& checks = {}) {
  if (checks.preconditions) {
    require_theorem_conditions(g.instance(), checks.genericity);
    if (classify(g).graded != Flag::Yes) throw PreconditionError("approximator is not graded: " + g.label());
  }
  auto plan = detail::plan_graded_move(g);
  EpsilonBound bound = max_admissible_epsilon(g, plan.pulls);
  auto [improved, fresh] = detail::apply_pulls(g, plan.pulls, bound.chosen);

  ImprovementMove move;
  move.caseTag = plan.tag;
  for (const Pull& p : plan.pulls) {
    move.sourceCells.push_back(p.cell);
    move.rows.push_back(p.row);
    std::vector<Rational> residual = g.cell(p.cell).allocation();
    residual[p.row] -= bound.chosen;
    if (std::any_of(residual.begin(), residual.end(), [](const Rational& x) { return sgn(x) > 0; }))
      move.residualPositions.push_back(detail::position_of(improved, residual));
  }
  move.epsilon = bound.chosen;
  move.insertedPosition = detail::position_of(improved, fresh);
  move.bound = std::move(bound);
  move.witness = plan.witness;

  DominanceVerdict verdict = compare(improved, g);
  if (checks.verify && !verdict.strict)
    throw VerificationError(std::string("case ") + case_name(move.caseTag) +
                            " move failed to strictly improve. original: " + detail::curve_dump(g) +
                            " improved: " + detail::curve_dump(improved));
  return {std::move(improved), std::move(move), std::move(verdict)};
}

/// Variant of the graded construction that pushes ε up to the exact collision value ε* and merges
/// the residual cell with the neighbor it now ties. Requires the collision bound to bind.
inline ImprovementResult equalizing_improvement(const Approximator& g, const CheckOptions& checks = {}) {
  if (checks.preconditions) {
    require_theorem_conditions(g.instance(), checks.genericity);
    if (classify(g).graded != Flag::Yes) throw PreconditionError("approximator is not graded: " + g.label());
  }
  const Instance& inst = g.instance();
  auto plan = detail::plan_graded_move(g);
  EpsilonBound bound = max_admissible_epsilon(g, plan.pulls);
  if (!bound.orderBinds || !bound.neighborCell)
    throw PreconditionError("no residual cell reaches a neighbor before its row is exhausted");
  const Rational eps = bound.maxEps;
  const std::size_t source = plan.pulls[*bound.bindingPull].cell;

  std::vector<std::vector<Rational>> allocs;
  for (const Cell& c : g.cells()) allocs.push_back(c.allocation());
  std::vector<Rational> fresh(inst.num_rows());
  for (const Pull& p : plan.pulls) {
    allocs[p.cell][p.row] -= eps;
    fresh[p.row] += eps;
  }
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < allocs.size(); ++i) {
    if (i == *bound.neighborCell) continue;
    if (i == source)
      for (std::size_t r = 0; r < inst.num_rows(); ++r) allocs[i][r] += allocs[*bound.neighborCell][r];
    cells.emplace_back(inst, allocs[i]);
  }
  cells.emplace_back(inst, fresh);
  Approximator improved = Approximator::from_cells(g.instance_ptr(), std::move(cells));

  ImprovementMove move;
  move.caseTag = plan.tag;
  for (const Pull& p : plan.pulls) {
    move.sourceCells.push_back(p.cell);
    move.rows.push_back(p.row);
  }
  move.epsilon = eps;
  move.insertedPosition = detail::position_of(improved, fresh);
  move.residualPositions.push_back(detail::position_of(improved, allocs[source]));
  move.bound = bound;
  move.bound.chosen = eps;
  move.witness = plan.witness;

  DominanceVerdict verdict = compare(improved, g);
  if (checks.verify && !verdict.strict)
    throw VerificationError("equalizing move failed to strictly improve: " + detail::curve_dump(improved));
  return {std::move(improved), std::move(move), std::move(verdict)};
}

struct SplitResult {
  Approximator split;
  Rational thetaA;     // θ(χ_A(C))
  Rational thetaCell;  // θ(C)
  Rational thetaD;     // θ(χ_D(C))
  DominanceVerdict efficiency;  // compare(split, original)
  DominanceVerdict equity;      // compare(original, split)
};

namespace detail {

inline std::pair<std::vector<Rational>, std::vector<Rational>> split_by_group(const Instance& inst, const Cell& c) {
  std::vector<Rational> a(inst.num_rows()), d(inst.num_rows());
  for (std::size_t r : c.support()) (inst.group(r) == Group::A ? a : d)[r] = c.allocation(r);
  return {a, d};
}

inline void check_theorem2_outcome(const DominanceVerdict& eff, const DominanceVerdict& eq, const Approximator& g,
                                   const Approximator& split, const char* what) {
  if (!eff.strictEfficiency || !eq.strictEquity)
    throw VerificationError(std::string(what) + ": expected split ≻_v original and original ≻_w split. original: " +
                            curve_dump(g) + " split: " + curve_dump(split));
}

}  // namespace detail

/// Replaces one non-trivial group-agnostic cell C by χ_A(C) and χ_D(C).
inline SplitResult split_cell(const Approximator& g, std::size_t cell_index, const CheckOptions& checks = {}) {
  const Instance& inst = g.instance();
  if (cell_index >= g.size()) throw DomainError("cell index out of range");
  const Cell& c = g.cell(cell_index);
  if (checks.preconditions) {
    require_theorem_conditions(inst, checks.genericity);
    if (!g.is_discrete()) throw PreconditionError("split_cell requires a discrete approximator");
    auto [a, d] = group_feature_sets(inst, c);
    if (a != d) throw PreconditionError("cell " + std::to_string(cell_index) + " is not group-agnostic");
    if (!c.nontrivial()) throw PreconditionError("cell " + std::to_string(cell_index) + " is trivial");
  }
  auto [a_alloc, d_alloc] = detail::split_by_group(inst, c);
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (i != cell_index) cells.push_back(g.cell(i));
  Cell ca(inst, a_alloc), cd(inst, d_alloc);
  Rational thetaA = ca.theta(), thetaD = cd.theta();
  cells.push_back(std::move(ca));
  cells.push_back(std::move(cd));
  SplitResult out{Approximator::from_cells(g.instance_ptr(), std::move(cells)), thetaA, c.theta(), thetaD, {}, {}};
  out.efficiency = compare(out.split, g);
  out.equity = compare(g, out.split);
  if (checks.verify) {
    if (!(out.thetaA > out.thetaCell && out.thetaCell > out.thetaD))
      throw VerificationError("split chain θ(χ_A) > θ(C) > θ(χ_D) fails");
    detail::check_theorem2_outcome(out.efficiency, out.equity, g, out.split, "split_cell");
  }
  return out;
}

struct GroupSplitResult {
  Approximator split;           // χ(g)
  DominanceVerdict efficiency;  // compare(χ(g), g)
  DominanceVerdict equity;      // compare(g, χ(g))
};

/// χ(g): every cell divided by group, cells of exactly equal θ merged, re-sorted.
inline GroupSplitResult group_split(const Approximator& g, const CheckOptions& checks = {}) {
  const Instance& inst = g.instance();
  if (checks.preconditions) {
    require_theorem_conditions(inst, checks.genericity);
    auto flags = classify(g);
    if (flags.groupAgnostic != Flag::Yes) throw PreconditionError("approximator is not group-agnostic");
    if (flags.nonTrivial != Flag::Yes) throw PreconditionError("approximator is trivial");
  }
  std::vector<std::pair<Rational, std::vector<Rational>>> parts;  // (θ, allocation)
  for (const Cell& c : g.cells()) {
    auto [a, d] = detail::split_by_group(inst, c);
    for (auto* alloc : {&a, &d}) {
      if (std::none_of(alloc->begin(), alloc->end(), [](const Rational& x) { return sgn(x) > 0; })) continue;
      Cell part(inst, *alloc);
      auto same = std::find_if(parts.begin(), parts.end(), [&](const auto& p) { return p.first == part.theta(); });
      if (same == parts.end()) {
        parts.emplace_back(part.theta(), *alloc);
      } else {
        for (std::size_t r = 0; r < alloc->size(); ++r) same->second[r] += (*alloc)[r];
      }
    }
  }
  std::vector<Cell> cells;
  for (auto& p : parts) cells.emplace_back(inst, std::move(p.second));
  GroupSplitResult out{Approximator::from_cells(g.instance_ptr(), std::move(cells)), {}, {}};
  out.efficiency = compare(out.split, g);
  out.equity = compare(g, out.split);
  if (checks.verify) detail::check_theorem2_outcome(out.efficiency, out.equity, g, out.split, "group_split");
  return out;
}

}  // namespace equitycells
