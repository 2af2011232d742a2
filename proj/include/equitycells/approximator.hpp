#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "equitycells/error.hpp"
#include "equitycells/instance.hpp"
#include "equitycells/rational.hpp"

namespace equitycells {

using InstancePtr = std::shared_ptr<const Instance>;

/// A cell: the measure φ(row) of every row assigned to it. θ and σ are derived from φ.
class Cell {
 public:
  Cell(const Instance& inst, std::vector<Rational> allocation) : allocation_(std::move(allocation)) {
    if (allocation_.size() != inst.num_rows())
      throw DomainError("cell allocation has " + std::to_string(allocation_.size()) + " entries, instance has " +
                        std::to_string(inst.num_rows()) + " rows");
    for (std::size_t i = 0; i < allocation_.size(); ++i) {
      const Rational& phi = allocation_[i];
      if (sgn(phi) < 0) throw DomainError("negative allocation for row " + inst.row_label(i));
      if (sgn(phi) == 0) continue;
      measure_ += phi;
      value_sum_ += phi * inst.f(i);
      if (inst.group(i) == Group::D) d_measure_ += phi;
      if (!first_f_) {
        first_f_ = inst.f(i);
      } else if (*first_f_ != inst.f(i)) {
        nontrivial_ = true;
      }
    }
    if (sgn(measure_) == 0) throw DomainError("zero cell (no row carries positive measure)");
    theta_ = value_sum_ / measure_;
    sigma_ = d_measure_ / measure_;
  }

  /// Cell holding the full measure of each listed row.
  static Cell of_rows(const Instance& inst, const std::vector<std::size_t>& rows) {
    std::vector<Rational> alloc(inst.num_rows());
    for (std::size_t r : rows) {
      if (r >= inst.num_rows()) throw DomainError("row index " + std::to_string(r) + " out of range");
      alloc[r] = inst.mu(r);
    }
    return Cell(inst, std::move(alloc));
  }

  const std::vector<Rational>& allocation() const { return allocation_; }
  const Rational& allocation(std::size_t row) const { return allocation_.at(row); }
  bool contains(std::size_t row) const { return sgn(allocation_.at(row)) > 0; }
  const Rational& measure() const { return measure_; }
  const Rational& value_sum() const { return value_sum_; }
  const Rational& d_measure() const { return d_measure_; }
  const Rational& theta() const { return theta_; }
  const Rational& sigma() const { return sigma_; }
  /// Positive measure from rows with different f.
  bool nontrivial() const { return nontrivial_; }

  std::vector<std::size_t> support() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < allocation_.size(); ++i)
      if (sgn(allocation_[i]) > 0) out.push_back(i);
    return out;
  }

  bool operator==(const Cell& o) const { return allocation_ == o.allocation_; }

 private:
  std::vector<Rational> allocation_;
  Rational measure_ = 0;
  Rational value_sum_ = 0;
  Rational d_measure_ = 0;
  Rational theta_;
  Rational sigma_;
  std::optional<Rational> first_f_;
  bool nontrivial_ = false;
};

inline const Rational& theta(const Cell& c) { return c.theta(); }
inline const Rational& sigma(const Cell& c) { return c.sigma(); }

/// Descending θ; ties by descending σ; then input order.
inline std::vector<Cell> tie_sorted(std::vector<Cell> cells) {
  std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    if (int c = cmp(a.theta(), b.theta()); c != 0) return c > 0;
    return cmp(a.sigma(), b.sigma()) > 0;
  });
  return cells;
}

/// An f-approximator: cells in admission order over a shared instance.
class Approximator {
 public:
  /// Validates conservation and the cell bound, then orders the cells with tie_sorted.
  static Approximator from_cells(InstancePtr inst, std::vector<Cell> cells) {
    if (!inst) throw DomainError("approximator without instance");
    const Instance& in = *inst;
    if (cells.empty()) throw ConstraintError("approximator has no cells");
    if (static_cast<int>(cells.size()) > in.cell_bound())
      throw ConstraintError("approximator has " + std::to_string(cells.size()) + " cells, bound B=" +
                            std::to_string(in.cell_bound()));
    for (std::size_t r = 0; r < in.num_rows(); ++r) {
      Rational total = 0;
      for (const Cell& c : cells) total += c.allocation(r);
      if (total != in.mu(r))
        throw ConstraintError("row " + std::to_string(r) + " " + in.row_label(r) + " is allocated " +
                              to_string(total) + " but has measure " + to_string(in.mu(r)));
    }
    Approximator g;
    g.instance_ = std::move(inst);
    g.cells_ = tie_sorted(std::move(cells));
    return g;
  }

  const Instance& instance() const { return *instance_; }
  const InstancePtr& instance_ptr() const { return instance_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const Cell& cell(std::size_t i) const { return cells_.at(i); }
  std::size_t size() const { return cells_.size(); }

  /// Every row lies wholly inside one cell.
  bool is_discrete() const {
    for (std::size_t r = 0; r < instance_->num_rows(); ++r) {
      int holders = 0;
      for (const Cell& c : cells_) holders += c.contains(r);
      if (holders != 1) return false;
    }
    return true;
  }

  bool nontrivial() const {
    return std::any_of(cells_.begin(), cells_.end(), [](const Cell& c) { return c.nontrivial(); });
  }

  /// Index of the cell holding `row` (the first one, for fractional approximators).
  std::size_t cell_of(std::size_t row) const {
    for (std::size_t i = 0; i < cells_.size(); ++i)
      if (cells_[i].contains(row)) return i;
    throw DomainError("row " + std::to_string(row) + " is in no cell");
  }

  bool same_instance(const Approximator& o) const {
    return instance_ == o.instance_ || *instance_ == *o.instance_;
  }

  /// Cells as row lists in admission order; fractional rows carry their measure.
  std::string label() const {
    std::string s;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      if (i) s += " | ";
      s += "{";
      bool first = true;
      for (std::size_t r : cells_[i].support()) {
        if (!first) s += ",";
        first = false;
        s += instance_->row_label(r);
        if (cells_[i].allocation(r) != instance_->mu(r)) s += "*" + to_string(cells_[i].allocation(r));
      }
      s += "}";
    }
    return s;
  }

  /// Canonical partition key of a discrete approximator: sorted blocks of sorted row indices.
  std::vector<std::vector<std::size_t>> partition() const {
    std::vector<std::vector<std::size_t>> blocks;
    for (const Cell& c : cells_) blocks.push_back(c.support());
    std::sort(blocks.begin(), blocks.end());
    return blocks;
  }

  bool operator==(const Approximator& o) const { return same_instance(o) && cells_ == o.cells_; }

 private:
  InstancePtr instance_;
  std::vector<Cell> cells_;
};

/// Discrete approximator from blocks of row indices.
inline Approximator from_partition(const InstancePtr& inst, const std::vector<std::vector<std::size_t>>& blocks) {
  std::vector<Cell> cells;
  cells.reserve(blocks.size());
  for (const auto& b : blocks) cells.push_back(Cell::of_rows(*inst, b));
  return Approximator::from_cells(inst, std::move(cells));
}

/// Approximator from explicit per-row allocations (one vector per cell).
inline Approximator from_explicit_cells(const InstancePtr& inst, const std::vector<std::vector<Rational>>& allocations) {
  std::vector<Cell> cells;
  cells.reserve(allocations.size());
  for (const auto& a : allocations) cells.push_back(Cell(*inst, a));
  return Approximator::from_cells(inst, std::move(cells));
}

namespace detail {

inline void require_boolean(const Instance& inst, const char* what) {
  if (!inst.boolean_form())
    throw DomainError(std::string(what) + " is not applicable to ordinal (non-coordinate) instances");
}

inline std::vector<std::vector<std::size_t>> group_rows_by_key(const Instance& inst,
                                                               const std::vector<std::uint64_t>& keys) {
  std::vector<std::uint64_t> seen;
  std::vector<std::vector<std::size_t>> blocks;
  for (std::size_t r = 0; r < inst.num_rows(); ++r) {
    auto it = std::find(seen.begin(), seen.end(), keys[r]);
    if (it == seen.end()) {
      seen.push_back(keys[r]);
      blocks.push_back({r});
    } else {
      blocks[static_cast<std::size_t>(it - seen.begin())].push_back(r);
    }
  }
  return blocks;
}

}  // namespace detail

/// Cells are the classes of rows agreeing on every variable in `vars` (1..k, k+1 = group).
inline Approximator from_variable_selection(const InstancePtr& inst, const std::vector<int>& vars) {
  detail::require_boolean(*inst, "variable selection");
  const int k = *inst->k();
  std::uint32_t mask = 0;
  for (int v : vars) {
    if (v < 1 || v > k + 1)
      throw DomainError("variable index " + std::to_string(v) + " outside 1.." + std::to_string(k + 1));
    mask |= 1u << (v - 1);
  }
  std::vector<std::uint64_t> keys(inst->num_rows());
  for (std::size_t r = 0; r < inst->num_rows(); ++r) keys[r] = inst->row_bits(r) & mask;
  return from_partition(inst, detail::group_rows_by_key(*inst, keys));
}

/// Binary test tree. A node with var == 0 is a leaf; otherwise it tests x⟨var⟩ == value
/// (γ uses 0 for A and 1 for D) and descends into `yes` or `no`.
struct DecisionTree {
  int var = 0;
  int value = 0;
  std::shared_ptr<const DecisionTree> yes;
  std::shared_ptr<const DecisionTree> no;

  static std::shared_ptr<const DecisionTree> leaf() { return std::make_shared<const DecisionTree>(); }
  static std::shared_ptr<const DecisionTree> test(int var, int value, std::shared_ptr<const DecisionTree> yes,
                                                  std::shared_ptr<const DecisionTree> no) {
    return std::make_shared<const DecisionTree>(DecisionTree{var, value, std::move(yes), std::move(no)});
  }
  bool is_leaf() const { return var == 0; }
};

/// Cells are the nonempty leaf classes of the tree.
inline Approximator from_decision_tree(const InstancePtr& inst, const DecisionTree& tree) {
  detail::require_boolean(*inst, "decision trees");
  const int k = *inst->k();
  std::vector<std::uint64_t> keys(inst->num_rows());
  for (std::size_t r = 0; r < inst->num_rows(); ++r) {
    std::uint32_t bits = inst->row_bits(r);
    const DecisionTree* node = &tree;
    std::uint64_t path = 1;
    while (!node->is_leaf()) {
      if (node->var < 1 || node->var > k + 1)
        throw DomainError("tree tests variable " + std::to_string(node->var) + " outside 1.." + std::to_string(k + 1));
      if (node->value != 0 && node->value != 1) throw DomainError("tree test value must be 0 or 1");
      if (!node->yes || !node->no) throw DomainError("tree test node is missing a branch");
      if (path >> 62) throw DomainError("decision tree too deep");
      bool taken = static_cast<int>((bits >> (node->var - 1)) & 1u) == node->value;
      path = path * 2 + (taken ? 0 : 1);
      node = taken ? node->yes.get() : node->no.get();
    }
    keys[r] = path;
  }
  return from_partition(inst, detail::group_rows_by_key(*inst, keys));
}

enum class Flag : std::uint8_t { No, Yes, NotApplicable };

inline const char* flag_name(Flag f) {
  switch (f) {
    case Flag::Yes: return "true";
    case Flag::No: return "false";
    default: return "n/a";
  }
}

inline Flag to_flag(bool b) { return b ? Flag::Yes : Flag::No; }

struct StructureFlags {
  Flag discrete = Flag::No;
  Flag trivial = Flag::No;
  Flag nonTrivial = Flag::No;
  Flag allCube = Flag::NotApplicable;
  Flag simple = Flag::No;
  Flag graded = Flag::No;
  Flag separable = Flag::NotApplicable;
  Flag groupAgnostic = Flag::NotApplicable;
};

/// Cube test over extended coordinates: the row set equals the subcube fixed by the
/// coordinates on which all its members agree.
inline bool is_cube(const Instance& inst, const std::vector<std::size_t>& rows) {
  if (rows.empty() || !inst.boolean_form()) return false;
  const int dims = *inst.k() + 1;
  const std::uint32_t all = (dims >= 32) ? ~0u : ((1u << dims) - 1);
  std::uint32_t first = inst.row_bits(rows.front());
  std::uint32_t agree = all;
  for (std::size_t r : rows) agree &= ~(inst.row_bits(r) ^ first) & all;
  const int free_dims = dims - __builtin_popcount(agree);
  return rows.size() == (std::size_t{1} << free_dims);
}

/// Feature sets C⟨A⟩ and C⟨D⟩ of a discrete cell.
inline std::pair<std::set<std::size_t>, std::set<std::size_t>> group_feature_sets(const Instance& inst, const Cell& c) {
  std::set<std::size_t> a, d;
  for (std::size_t r : c.support()) (inst.group(r) == Group::A ? a : d).insert(inst.row(r).feature);
  return {a, d};
}

inline StructureFlags classify(const Approximator& g) {
  const Instance& inst = g.instance();
  StructureFlags flags;
  const bool discrete = g.is_discrete();
  const bool nontrivial = g.nontrivial();
  flags.discrete = to_flag(discrete);
  flags.nonTrivial = to_flag(nontrivial);
  flags.trivial = to_flag(!nontrivial);
  if (!discrete) return flags;

  bool all_cube = true, graded_cells = true, separable = true;
  for (const Cell& c : g.cells()) {
    auto rows = c.support();
    if (inst.boolean_form() && !is_cube(inst, rows)) all_cube = false;
    auto [a, d] = group_feature_sets(inst, c);
    bool a_in_d = std::includes(d.begin(), d.end(), a.begin(), a.end());
    bool d_in_a = std::includes(a.begin(), a.end(), d.begin(), d.end());
    if (!a_in_d && !d_in_a) graded_cells = false;
    if (c.nontrivial() && !a.empty() && !d.empty()) separable = false;
  }
  bool agnostic = true;
  for (std::size_t r = 0; r < inst.num_rows(); ++r)
    if (g.cell_of(r) != g.cell_of(inst.partner(r))) agnostic = false;

  flags.allCube = inst.boolean_form() ? to_flag(all_cube) : Flag::NotApplicable;
  flags.simple = to_flag(nontrivial && inst.boolean_form() && all_cube);
  flags.graded = to_flag(nontrivial && graded_cells);
  flags.separable = to_flag(separable);
  flags.groupAgnostic = to_flag(agnostic);
  return flags;
}

}  // namespace equitycells
