#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "equitycells/error.hpp"
#include "equitycells/rational.hpp"

namespace equitycells {

enum class Group : std::uint8_t { A = 0, D = 1 };

inline char group_char(Group g) { return g == Group::A ? 'A' : 'D'; }

/// A feature vector in either Boolean form (`coords`, length k) or ordinal form (`id`).
struct FeatureVector {
  std::vector<int> coords;
  int id = 0;

  bool operator==(const FeatureVector&) const = default;
  auto operator<=>(const FeatureVector&) const = default;
};

/// One line of the lookup table as read from input.
struct InstanceRow {
  FeatureVector x;
  Group group = Group::A;
  Rational f;
  Rational mu;
};

struct Row {
  std::size_t feature = 0;
  Group group = Group::A;
  bool operator==(const Row&) const = default;
};

/// One failed check. Which of the index lists is populated depends on the condition.
struct Violation {
  std::string condition;
  std::string detail;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> features;
  std::vector<std::uint64_t> subsets;  // row bitmasks
  std::vector<Rational> values;
};

inline constexpr std::size_t kWitnessCap = 64;

struct ConditionReport {
  bool holds = true;
  std::vector<Violation> witnesses;
  std::size_t violation_count = 0;  // may exceed witnesses.size() when capped

  void add(Violation v, std::size_t cap = kWitnessCap) {
    holds = false;
    ++violation_count;
    if (witnesses.size() < cap) witnesses.push_back(std::move(v));
  }
};

/// The lookup table defining f together with the row measures μ and the cell bound B.
/// Rows keep input order; feature vectors are numbered by first appearance.
class Instance {
 public:
  Instance() = default;

  /// Builds an instance from raw rows. Throws ParseError for structural defects that make
  /// the table ambiguous: mixed representations, bad coordinates, duplicate (feature, group)
  /// rows, or a feature whose A and D rows disagree on f.
  static Instance from_rows(std::optional<int> k, const std::vector<InstanceRow>& rows,
                            std::optional<int> cell_bound = std::nullopt) {
    Instance inst;
    inst.k_ = k;
    if (rows.empty()) throw ParseError("instance has no rows");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      bool boolean = !r.x.coords.empty();
      if (boolean != k.has_value())
        throw ParseError("row " + std::to_string(i) +
                         (k ? ": Boolean instance requires coordinates"
                            : ": ordinal instance must use ids (k is null)"));
      if (boolean) {
        if (static_cast<int>(r.x.coords.size()) != *k)
          throw ParseError("row " + std::to_string(i) + ": expected " + std::to_string(*k) +
                           " coordinates");
        for (int c : r.x.coords)
          if (c != 0 && c != 1) throw ParseError("row " + std::to_string(i) + ": coordinate not 0/1");
      }
      FeatureVector key = boolean ? FeatureVector{r.x.coords, 0} : FeatureVector{{}, r.x.id};
      auto it = std::find(inst.features_.begin(), inst.features_.end(), key);
      std::size_t feature = static_cast<std::size_t>(it - inst.features_.begin());
      if (it == inst.features_.end()) {
        inst.features_.push_back(key);
        inst.f_.push_back(r.f);
      } else if (inst.f_[feature] != r.f) {
        throw ParseError("row " + std::to_string(i) + ": f differs from the other row of feature " +
                         inst.feature_label(feature) + " (f is keyed on the feature vector)");
      }
      for (std::size_t j = 0; j < inst.rows_.size(); ++j)
        if (inst.rows_[j].feature == feature && inst.rows_[j].group == r.group)
          throw ParseError("row " + std::to_string(i) + ": duplicates row " + std::to_string(j));
      inst.rows_.push_back(Row{feature, r.group});
      inst.mu_.push_back(r.mu);
    }
    inst.cell_bound_ = cell_bound.value_or(static_cast<int>(inst.rows_.size()));
    inst.index_.assign(inst.features_.size() * 2, kMissing);
    for (std::size_t i = 0; i < inst.rows_.size(); ++i)
      inst.index_[inst.rows_[i].feature * 2 + static_cast<std::size_t>(inst.rows_[i].group)] = i;
    return inst;
  }

  std::optional<int> k() const { return k_; }
  bool boolean_form() const { return k_.has_value(); }
  std::size_t num_rows() const { return rows_.size(); }
  std::size_t num_features() const { return features_.size(); }
  int cell_bound() const { return cell_bound_; }

  const Row& row(std::size_t i) const { return rows_.at(i); }
  const FeatureVector& feature(std::size_t j) const { return features_.at(j); }
  const Rational& f_of_feature(std::size_t j) const { return f_.at(j); }
  const Rational& f(std::size_t row) const { return f_[rows_.at(row).feature]; }
  const Rational& mu(std::size_t row) const { return mu_.at(row); }
  Group group(std::size_t row) const { return rows_.at(row).group; }

  /// Row index of (feature, group), if present.
  std::optional<std::size_t> row_index(std::size_t feature, Group g) const {
    std::size_t i = index_.at(feature * 2 + static_cast<std::size_t>(g));
    if (i == kMissing) return std::nullopt;
    return i;
  }

  /// Row index of the other group's row for the same feature. Requires a valid instance.
  std::size_t partner(std::size_t row) const {
    const Row& r = rows_.at(row);
    auto p = row_index(r.feature, r.group == Group::A ? Group::D : Group::A);
    if (!p) throw DomainError("row " + row_label(row) + " has no partner row");
    return *p;
  }

  /// Bit pattern of a row over the k+1 extended coordinates; bit ℓ-1 holds x⟨ℓ⟩, bit k holds γ (D=1).
  std::uint32_t row_bits(std::size_t row) const {
    const Row& r = rows_.at(row);
    const auto& c = features_[r.feature].coords;
    std::uint32_t bits = 0;
    for (std::size_t l = 0; l < c.size(); ++l)
      if (c[l]) bits |= 1u << l;
    if (r.group == Group::D) bits |= 1u << c.size();
    return bits;
  }

  std::string feature_label(std::size_t j) const {
    const auto& x = features_.at(j);
    if (x.coords.empty()) return "x" + std::to_string(x.id);
    std::string s;
    for (std::size_t l = 0; l < x.coords.size(); ++l) s += (l ? "," : "") + std::to_string(x.coords[l]);
    return s;
  }

  std::string row_label(std::size_t row) const {
    const Row& r = rows_.at(row);
    return "(" + feature_label(r.feature) + "," + group_char(r.group) + ")";
  }

  /// Copy with productivity values replaced feature-by-feature.
  Instance with_productivity(std::vector<Rational> f) const {
    if (f.size() != f_.size()) throw DomainError("productivity vector has wrong length");
    Instance out = *this;
    out.f_ = std::move(f);
    return out;
  }

  /// Copy with row measures replaced. The caller keeps them positive and summing to one.
  Instance with_measures(std::vector<Rational> mu) const {
    if (mu.size() != mu_.size()) throw DomainError("measure vector has wrong length");
    Instance out = *this;
    out.mu_ = std::move(mu);
    return out;
  }

  /// Raw rows in input order, as accepted by from_rows.
  std::vector<InstanceRow> raw_rows() const {
    std::vector<InstanceRow> out;
    out.reserve(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i)
      out.push_back(InstanceRow{features_[rows_[i].feature], rows_[i].group, f(i), mu_[i]});
    return out;
  }

  bool operator==(const Instance& o) const {
    return k_ == o.k_ && features_ == o.features_ && f_ == o.f_ && rows_ == o.rows_ &&
           mu_ == o.mu_ && cell_bound_ == o.cell_bound_;
  }

 private:
  static constexpr std::size_t kMissing = static_cast<std::size_t>(-1);

  std::optional<int> k_;
  std::vector<FeatureVector> features_;
  std::vector<Rational> f_;
  std::vector<Row> rows_;
  std::vector<Rational> mu_;
  std::vector<std::size_t> index_;
  int cell_bound_ = 0;
};

/// Structural validation: positive measures summing to one, paired rows, representation
/// invariants, and B ≥ 2n. Distinctness of f across features is part of genericity.
inline ConditionReport validate_instance(const Instance& inst) {
  ConditionReport report;
  Rational total = 0;
  for (std::size_t i = 0; i < inst.num_rows(); ++i) {
    total += inst.mu(i);
    if (sgn(inst.mu(i)) <= 0)
      report.add({"positive-measure", "row " + std::to_string(i) + " " + inst.row_label(i) +
                                          " has non-positive measure",
                  {i}, {}, {}, {inst.mu(i)}});
  }
  if (total != 1)
    report.add({"total-measure", "measures sum to " + to_string(total) + ", not 1", {}, {}, {}, {total}});
  for (std::size_t j = 0; j < inst.num_features(); ++j)
    for (Group g : {Group::A, Group::D})
      if (!inst.row_index(j, g))
        report.add({"paired-rows", "feature " + inst.feature_label(j) + " has no " +
                                       std::string(1, group_char(g)) + " row",
                    {}, {j}, {}, {}});
  const std::size_t n = inst.num_features();
  if (inst.boolean_form()) {
    std::size_t expected = std::size_t{1} << *inst.k();
    if (n != expected)
      report.add({"boolean-cover", "Boolean instance with k=" + std::to_string(*inst.k()) + " has " +
                                       std::to_string(n) + " feature vectors, expected " +
                                       std::to_string(expected),
                  {}, {}, {}, {}});
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return inst.feature(a).id < inst.feature(b).id; });
    for (std::size_t pos = 0; pos < n; ++pos) {
      if (inst.feature(order[pos]).id != static_cast<int>(pos) + 1) {
        report.add({"ordinal-ids", "feature ids are not a permutation of 1..n", {}, {order[pos]}, {}, {}});
        break;
      }
      if (pos > 0 && inst.f_of_feature(order[pos]) <= inst.f_of_feature(order[pos - 1]))
        report.add({"ordinal-order", "f is not strictly increasing in feature id at " +
                                         inst.feature_label(order[pos]),
                    {}, {order[pos - 1], order[pos]}, {},
                    {inst.f_of_feature(order[pos - 1]), inst.f_of_feature(order[pos])}});
    }
  }
  if (inst.cell_bound() < static_cast<int>(2 * n))
    report.add({"cell-bound", "cell bound B=" + std::to_string(inst.cell_bound()) + " is below 2n=" +
                                  std::to_string(2 * n),
                {}, {}, {}, {}});
  return report;
}

/// Throws DomainError unless validate_instance holds.
inline void require_valid(const Instance& inst) {
  auto report = validate_instance(inst);
  if (!report.holds) throw DomainError("invalid instance: " + report.witnesses.front().detail);
}

/// Measure-weighted average of f over a nonempty set of rows.
inline Rational group_average(const Instance& inst, std::span<const std::size_t> rows) {
  if (rows.empty()) throw DomainError("group_average of an empty row set");
  std::vector<std::size_t> unique(rows.begin(), rows.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  Rational num = 0, den = 0;
  for (std::size_t i : unique) {
    if (i >= inst.num_rows()) throw DomainError("row index " + std::to_string(i) + " out of range");
    num += inst.mu(i) * inst.f(i);
    den += inst.mu(i);
  }
  if (sgn(den) == 0) throw DomainError("group_average over zero measure");
  return num / den;
}

inline std::vector<std::size_t> rows_of_group(const Instance& inst, Group g) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < inst.num_rows(); ++i)
    if (inst.group(i) == g) out.push_back(i);
  return out;
}

/// μ(x,A)/μ(x,D) for one feature of a valid instance.
inline Rational advantage_ratio(const Instance& inst, std::size_t feature) {
  return inst.mu(*inst.row_index(feature, Group::A)) / inst.mu(*inst.row_index(feature, Group::D));
}

/// Disadvantage condition: the A-to-D measure ratio is strictly increasing in f.
/// Each witness lists (higher-f feature, lower-f feature) with values {f_hi, ratio_hi, f_lo, ratio_lo}.
inline ConditionReport check_disadvantage(const Instance& inst) {
  require_valid(inst);
  ConditionReport report;
  const std::size_t n = inst.num_features();
  for (std::size_t hi = 0; hi < n; ++hi)
    for (std::size_t lo = 0; lo < n; ++lo) {
      if (inst.f_of_feature(hi) <= inst.f_of_feature(lo)) continue;
      Rational rh = advantage_ratio(inst, hi), rl = advantage_ratio(inst, lo);
      if (rh > rl) continue;
      report.add({"disadvantage",
                  "f(" + inst.feature_label(hi) + ")=" + to_string(inst.f_of_feature(hi)) + " has ratio " +
                      to_string(rh) + " but f(" + inst.feature_label(lo) + ")=" +
                      to_string(inst.f_of_feature(lo)) + " has ratio " + to_string(rl),
                  {}, {hi, lo}, {}, {inst.f_of_feature(hi), rh, inst.f_of_feature(lo), rl}});
    }
  return report;
}

inline constexpr std::size_t kDefaultGenericityCap = 16;

/// Genericity: all subset averages are pairwise distinct, except that subsets drawn from a
/// single feature vector necessarily share the value f(x). Exhaustive over 2^{2n}-1 subsets.
inline ConditionReport check_genericity(const Instance& inst, std::size_t cap = kDefaultGenericityCap) {
  require_valid(inst);
  const std::size_t m = inst.num_rows();
  if (m > cap || m > 24)
    throw ScaleError("genericity check is exhaustive and capped at " + std::to_string(cap) +
                     " rows; instance has " + std::to_string(m));
  const std::uint64_t count = std::uint64_t{1} << m;
  std::vector<Rational> num(count), den(count);
  std::vector<std::uint64_t> feature_mask(count, 0);
  for (std::uint64_t s = 1; s < count; ++s) {
    std::uint64_t low = s & (~s + 1);
    std::uint64_t rest = s ^ low;
    auto bit = static_cast<std::size_t>(__builtin_ctzll(low));
    num[s] = num[rest] + inst.mu(bit) * inst.f(bit);
    den[s] = den[rest] + inst.mu(bit);
    feature_mask[s] = feature_mask[rest] | (std::uint64_t{1} << inst.row(bit).feature);
  }
  // Equal rationals share one canonical form and hence one double, so sorting on the double
  // first keeps exact ties adjacent while avoiding most exact comparisons.
  struct Average {
    double approx;
    Rational value;
    std::uint64_t subset;
  };
  std::vector<Average> averages;
  averages.reserve(count - 1);
  for (std::uint64_t s = 1; s < count; ++s) {
    Rational v = num[s] / den[s];
    averages.push_back({v.get_d(), std::move(v), s});
  }
  std::sort(averages.begin(), averages.end(), [](const Average& a, const Average& b) {
    if (a.approx != b.approx) return a.approx < b.approx;
    if (int c = cmp(a.value, b.value); c != 0) return c < 0;
    return a.subset < b.subset;
  });

  auto single_feature = [&](std::uint64_t s) { return __builtin_popcountll(feature_mask[s]) == 1; };
  ConditionReport report;
  for (std::size_t i = 0; i < averages.size();) {
    std::size_t j = i + 1;
    while (j < averages.size() && averages[j].value == averages[i].value) ++j;
    for (std::size_t a = i; a < j; ++a)
      for (std::size_t b = a + 1; b < j; ++b) {
        std::uint64_t s = averages[a].subset, t = averages[b].subset;
        if (single_feature(s) && feature_mask[s] == feature_mask[t]) continue;
        if (report.witnesses.size() >= kWitnessCap) {
          report.holds = false;
          ++report.violation_count;
          continue;
        }
        std::ostringstream os;
        os << "row subsets 0x" << std::hex << s << " and 0x" << t << std::dec << " both average "
           << to_string(averages[a].value);
        report.add({"genericity", os.str(), {}, {}, {s, t}, {averages[a].value}});
      }
    i = j;
  }
  return report;
}

struct PerturbOptions {
  int decimal_digits = 6;  // shifts are eps * m / 10^digits with integer |m| ≤ 10^digits
  int max_attempts = 32;
  std::size_t genericity_cap = kDefaultGenericityCap;
  /// Also scale each μ by 1 + δ, |δ| ≤ eps, then renormalize. Needed when two feature vectors
  /// share both measures: their A-pair and D-pair then tie for every choice of f.
  bool jitter_measures = false;
};

struct PerturbResult {
  Instance instance;
  int attempts = 0;
  std::vector<std::string> warnings;
};

/// Shifts every f(x) by a seeded pseudo-random rational in [-eps, eps] until the instance is
/// generic. Measures are untouched unless options.jitter_measures is set. Features that share an f-value receive their shifts in
/// ascending order of advantage ratio so the disadvantage verdict survives whenever it can.
inline PerturbResult perturb_generic(const Instance& inst, const Rational& eps, std::uint64_t seed,
                                     const PerturbOptions& options = {}) {
  require_valid(inst);
  if (sgn(eps) < 0) throw DomainError("perturbation eps must be non-negative");
  if (check_genericity(inst, options.genericity_cap).holds) return {inst, 0, {}};
  if (sgn(eps) == 0) throw PreconditionError("eps = 0 and the instance is not generic");

  const std::size_t n = inst.num_features();
  std::vector<std::size_t> by_f(n);
  std::iota(by_f.begin(), by_f.end(), 0);
  std::stable_sort(by_f.begin(), by_f.end(), [&](std::size_t a, std::size_t b) {
    if (inst.f_of_feature(a) != inst.f_of_feature(b)) return inst.f_of_feature(a) < inst.f_of_feature(b);
    return advantage_ratio(inst, a) < advantage_ratio(inst, b);
  });
  for (std::size_t i = 1; i < n; ++i) {
    const Rational gap = inst.f_of_feature(by_f[i]) - inst.f_of_feature(by_f[i - 1]);
    if (sgn(gap) > 0 && !(2 * eps < gap))
      throw DomainError("perturbation eps must be below half the minimum f-gap " + to_string(gap));
  }

  PerturbResult result;
  for (std::size_t i = 1; i < n; ++i)
    if (inst.f_of_feature(by_f[i]) == inst.f_of_feature(by_f[i - 1]) &&
        advantage_ratio(inst, by_f[i]) == advantage_ratio(inst, by_f[i - 1]))
      result.warnings.push_back("features " + inst.feature_label(by_f[i - 1]) + " and " +
                                inst.feature_label(by_f[i]) +
                                " share both f and advantage ratio; disadvantage cannot survive perturbation");

  const long scale = [&] {
    long s = 1;
    for (int d = 0; d < options.decimal_digits; ++d) s *= 10;
    return s;
  }();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long> draw(-scale, scale);
  ConditionReport last;
  for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
    std::vector<Rational> shifts(n);
    for (auto& s : shifts) s = eps * make_rational(draw(rng), scale);
    // Within a tie group of equal f, hand out shifts in ascending order.
    std::vector<Rational> f(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i + 1;
      while (j < n && inst.f_of_feature(by_f[j]) == inst.f_of_feature(by_f[i])) ++j;
      std::vector<Rational> group_shifts;
      for (std::size_t t = i; t < j; ++t) group_shifts.push_back(shifts[by_f[t]]);
      std::sort(group_shifts.begin(), group_shifts.end());
      for (std::size_t t = i; t < j; ++t) f[by_f[t]] = inst.f_of_feature(by_f[t]) + group_shifts[t - i];
      i = j;
    }
    Instance candidate = inst.with_productivity(std::move(f));
    if (options.jitter_measures) {
      std::vector<Rational> mu(inst.num_rows());
      Rational total = 0;
      for (std::size_t r = 0; r < inst.num_rows(); ++r) {
        mu[r] = inst.mu(r) * (1 + eps * make_rational(draw(rng), scale));
        total += mu[r];
      }
      for (auto& m : mu) m /= total;
      candidate = candidate.with_measures(std::move(mu));
    }
    last = check_genericity(candidate, options.genericity_cap);
    if (last.holds) {
      result.instance = std::move(candidate);
      result.attempts = attempt;
      return result;
    }
  }
  throw Error("perturbation retry budget exhausted; last collision: " +
              (last.witnesses.empty() ? std::string("none") : last.witnesses.front().detail));
}

/// Per-group distributions of f over the feature values sorted ascending.
struct GroupDistribution {
  std::vector<Rational> values;
  std::vector<Rational> probA;
  std::vector<Rational> probD;
  std::vector<std::size_t> features;  // feature index for each position
};

inline GroupDistribution group_distributions(const Instance& inst) {
  require_valid(inst);
  GroupDistribution d;
  d.features.resize(inst.num_features());
  std::iota(d.features.begin(), d.features.end(), 0);
  std::stable_sort(d.features.begin(), d.features.end(), [&](std::size_t a, std::size_t b) {
    return inst.f_of_feature(a) < inst.f_of_feature(b);
  });
  Rational totalA = 0, totalD = 0;
  for (std::size_t i = 0; i < inst.num_rows(); ++i) (inst.group(i) == Group::A ? totalA : totalD) += inst.mu(i);
  for (std::size_t j : d.features) {
    d.values.push_back(inst.f_of_feature(j));
    d.probA.push_back(inst.mu(*inst.row_index(j, Group::A)) / totalA);
    d.probD.push_back(inst.mu(*inst.row_index(j, Group::D)) / totalD);
  }
  return d;
}

}  // namespace equitycells
