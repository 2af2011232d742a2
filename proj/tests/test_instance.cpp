#include <gtest/gtest.h>

#include <map>
#include <set>
#include <random>

#include "support.hpp"

using namespace ectest;

namespace {

std::vector<InstanceRow> ordinal_rows(const std::vector<std::tuple<int, char, Rational, Rational>>& spec) {
  std::vector<InstanceRow> rows;
  for (const auto& [id, g, f, mu] : spec) rows.push_back({FeatureVector{{}, id}, g == 'A' ? Group::A : Group::D, f, mu});
  return rows;
}

bool has_condition(const ConditionReport& r, const std::string& c) {
  for (const auto& w : r.witnesses)
    if (w.condition == c) return true;
  return false;
}

}  // namespace

TEST(Validate, SimpsonTableIsValidAndSumsToOne) {
  auto inst = simpson();
  EXPECT_TRUE(validate_instance(*inst).holds);
  Rational total = 0;
  for (std::size_t r = 0; r < inst->num_rows(); ++r) total += inst->mu(r);
  EXPECT_EQ(total, 1);
  EXPECT_EQ(inst->num_rows(), 8u);
  EXPECT_EQ(inst->num_features(), 4u);
}

TEST(Validate, ZeroMeasureRowIsNamed) {
  auto rows = simpson_instance().raw_rows();
  rows[3].mu = 0;
  rows[2].mu += q(3, 50);
  auto report = validate_instance(Instance::from_rows(2, rows));
  ASSERT_FALSE(report.holds);
  ASSERT_TRUE(has_condition(report, "positive-measure"));
  EXPECT_EQ(report.witnesses.front().rows, std::vector<std::size_t>{3});
}

TEST(Validate, ReportsEachStructuralDefect) {
  auto rows = simpson_instance().raw_rows();
  rows[0].mu += q(1, 100);
  EXPECT_TRUE(has_condition(validate_instance(Instance::from_rows(2, rows)), "total-measure"));

  auto unpaired = simpson_instance().raw_rows();
  unpaired.pop_back();
  unpaired.back().mu += q(34, 100);
  EXPECT_TRUE(has_condition(validate_instance(Instance::from_rows(2, unpaired)), "paired-rows"));

  auto partial = simpson_instance().raw_rows();
  partial.resize(6);
  partial[0].mu += q(69, 100);
  EXPECT_TRUE(has_condition(validate_instance(Instance::from_rows(2, partial)), "boolean-cover"));

  EXPECT_TRUE(has_condition(validate_instance(Instance::from_rows(2, simpson_instance().raw_rows(), 7)), "cell-bound"));

  auto unordered = ordinal_rows({{1, 'A', q(1, 2), q(1, 4)}, {1, 'D', q(1, 2), q(1, 4)},
                                 {2, 'A', q(1, 3), q(1, 4)}, {2, 'D', q(1, 3), q(1, 4)}});
  EXPECT_TRUE(has_condition(validate_instance(Instance::from_rows(std::nullopt, unordered)), "ordinal-order"));

  auto gap = ordinal_rows({{1, 'A', q(1, 3), q(1, 4)}, {1, 'D', q(1, 3), q(1, 4)},
                           {3, 'A', q(1, 2), q(1, 4)}, {3, 'D', q(1, 2), q(1, 4)}});
  EXPECT_TRUE(has_condition(validate_instance(Instance::from_rows(std::nullopt, gap)), "ordinal-ids"));
}

TEST(Validate, ParseRejectsAmbiguousTables) {
  auto rows = simpson_instance().raw_rows();
  rows[1].f = q(1, 2);  // f disagrees between (1,1,D) and (1,1,A)
  EXPECT_THROW(Instance::from_rows(2, rows), ParseError);

  auto dup = simpson_instance().raw_rows();
  dup[1].group = Group::D;
  EXPECT_THROW(Instance::from_rows(2, dup), ParseError);

  auto mixed = simpson_instance().raw_rows();
  EXPECT_THROW(Instance::from_rows(std::nullopt, mixed), ParseError);

  auto badcoord = simpson_instance().raw_rows();
  badcoord[0].x.coords[0] = 2;
  EXPECT_THROW(Instance::from_rows(2, badcoord), ParseError);

  auto badlen = simpson_instance().raw_rows();
  badlen[0].x.coords.push_back(0);
  EXPECT_THROW(Instance::from_rows(2, badlen), ParseError);
  EXPECT_THROW(Instance::from_rows(2, {}), ParseError);
}

TEST(GroupAverage, SimpsonGroupMeans) {
  auto inst = simpson();
  auto a = rows_of_group(*inst, Group::A), d = rows_of_group(*inst, Group::D);
  EXPECT_EQ(group_average(*inst, a), q(227, 1250));
  EXPECT_EQ(group_average(*inst, d), q(87, 500));
  EXPECT_EQ(q(227, 1250) - q(87, 500), q(19, 2500));
}

TEST(GroupAverage, SingletonAndPairAndEmpty) {
  auto inst = simpson();
  for (std::size_t r = 0; r < inst->num_rows(); ++r) {
    std::vector<std::size_t> one{r};
    EXPECT_EQ(group_average(*inst, one), inst->f(r));
    std::vector<std::size_t> partner{inst->partner(r)};
    EXPECT_EQ(group_average(*inst, one), group_average(*inst, partner));
  }
  EXPECT_THROW(group_average(*inst, std::vector<std::size_t>{}), DomainError);
  EXPECT_THROW(group_average(*inst, std::vector<std::size_t>{99}), DomainError);
}

TEST(Disadvantage, SimpsonFailsWithRatioWitness) {
  auto report = check_disadvantage(*simpson());
  ASSERT_FALSE(report.holds);
  bool found = false;
  for (const auto& w : report.witnesses)
    if (w.values == std::vector<Rational>{q(1, 5), q(6, 7), q(1, 50), q(34, 35)}) found = true;
  EXPECT_TRUE(found);
}

TEST(Disadvantage, Fig1DefaultsHold) {
  auto inst = fig1();
  EXPECT_TRUE(check_disadvantage(*inst).holds);
  // Direct ratio table, ascending f.
  std::vector<std::pair<Rational, Rational>> table;
  for (std::size_t j = 0; j < inst->num_features(); ++j)
    table.emplace_back(inst->f_of_feature(j), inst->mu(*inst->row_index(j, Group::A)) / inst->mu(*inst->row_index(j, Group::D)));
  std::sort(table.begin(), table.end());
  EXPECT_EQ(table.front().second, q(20, 729));
  EXPECT_EQ(table.back().second, q(720, 19));
  for (std::size_t i = 1; i < table.size(); ++i) EXPECT_GT(table[i].second, table[i - 1].second);
}

TEST(Disadvantage, SingleFeatureHoldsVacuously) {
  auto inst = Instance::from_rows(std::nullopt, ordinal_rows({{1, 'A', q(1, 2), q(1, 3)}, {1, 'D', q(1, 2), q(2, 3)}}));
  EXPECT_TRUE(check_disadvantage(inst).holds);
  EXPECT_TRUE(check_genericity(inst).holds);
}

TEST(Disadvantage, EquivalentToIncreasingDistributionRatio) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<long> mass(1, 9);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t n = 2 + trial % 4;
    std::vector<std::tuple<int, char, Rational, Rational>> spec;
    Rational total = 0;
    for (std::size_t i = 1; i <= n; ++i) {
      Rational a(mass(rng)), d(mass(rng));
      spec.emplace_back(static_cast<int>(i), 'A', Rational(static_cast<long>(i)), a);
      spec.emplace_back(static_cast<int>(i), 'D', Rational(static_cast<long>(i)), d);
      total += a + d;
    }
    for (auto& s : spec) std::get<3>(s) /= total;
    Instance inst = Instance::from_rows(std::nullopt, ordinal_rows(spec));
    auto dist = group_distributions(inst);
    bool increasing = true;
    for (std::size_t j = 1; j < n; ++j)
      if (!(dist.probA[j] / dist.probD[j] > dist.probA[j - 1] / dist.probD[j - 1])) increasing = false;
    EXPECT_EQ(check_disadvantage(inst).holds, increasing);
  }
}

// Under disadvantage, the A-rows of any set of at least two feature vectors average strictly
// more than the D-rows of the same set.
TEST(Disadvantage, GroupAveragesOrderedOnEveryFeatureSet) {
  std::mt19937_64 rng(5);
  std::vector<Instance> instances = {fig_example_instance()};
  for (int i = 0; i < 20; ++i) instances.push_back(random_disadvantaged(rng, 0, 5));
  for (int i = 0; i < 10; ++i) instances.push_back(random_disadvantaged(rng, 3));
  for (const auto& inst : instances) {
    ASSERT_TRUE(check_disadvantage(inst).holds);
    const std::size_t n = inst.num_features();
    for (std::uint64_t s = 1; s < (std::uint64_t{1} << n); ++s) {
      if (__builtin_popcountll(s) < 2) continue;
      std::vector<std::size_t> a, d;
      for (std::size_t j = 0; j < n; ++j)
        if (s >> j & 1) {
          a.push_back(*inst.row_index(j, Group::A));
          d.push_back(*inst.row_index(j, Group::D));
        }
      EXPECT_GT(group_average(inst, a), group_average(inst, d));
    }
  }
}

TEST(Genericity, Fig1DefaultsAreGeneric) { EXPECT_TRUE(check_genericity(*fig1()).holds); }

TEST(Genericity, SimpsonAsPrintedCollides) {
  auto inst = simpson();
  auto report = check_genericity(*inst);
  ASSERT_FALSE(report.holds);

  // Independent count of colliding subset pairs.
  const std::size_t m = inst->num_rows();
  std::map<Rational, std::vector<std::uint64_t>> by_avg;
  for (std::uint64_t s = 1; s < (1u << m); ++s) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < m; ++r)
      if (s >> r & 1) rows.push_back(r);
    by_avg[group_average(*inst, rows)].push_back(s);
  }
  auto one_feature = [&](std::uint64_t s) {
    std::set<std::size_t> fs;
    for (std::size_t r = 0; r < m; ++r)
      if (s >> r & 1) fs.insert(inst->row(r).feature);
    return fs.size() == 1 ? static_cast<long>(*fs.begin()) : -1L;
  };
  std::size_t pairs = 0;
  bool eleven_fiftieths = false;
  for (const auto& [avg, subsets] : by_avg)
    for (std::size_t i = 0; i < subsets.size(); ++i)
      for (std::size_t j = i + 1; j < subsets.size(); ++j) {
        long fi = one_feature(subsets[i]);
        if (fi >= 0 && fi == one_feature(subsets[j])) continue;
        ++pairs;
        if (avg == q(11, 50)) eleven_fiftieths = true;
      }
  EXPECT_EQ(report.violation_count, pairs);
  EXPECT_TRUE(eleven_fiftieths);
  EXPECT_LE(report.witnesses.size(), 64u);
}

TEST(Genericity, AboveCapIsAScaleError) {
  EXPECT_THROW(check_genericity(*majority(q(1, 10)), 12), ScaleError);
}

TEST(Perturb, SimpsonBecomesGenericWithOrderAndMeasuresKept) {
  auto inst = simpson_instance();
  auto result = perturb_generic(inst, q(1, 1000000), 1);
  const Instance& out = result.instance;
  EXPECT_TRUE(check_genericity(out).holds);
  EXPECT_GE(result.attempts, 1);
  for (std::size_t r = 0; r < inst.num_rows(); ++r) {
    EXPECT_EQ(out.mu(r), inst.mu(r));
    Rational shift = out.f(r) - inst.f(r);
    EXPECT_LE(abs(shift), q(1, 1000000));
    EXPECT_EQ(out.f(r), out.f(inst.partner(r)));
  }
  for (std::size_t a = 0; a < inst.num_features(); ++a)
    for (std::size_t b = 0; b < inst.num_features(); ++b)
      EXPECT_EQ(inst.f_of_feature(a) < inst.f_of_feature(b), out.f_of_feature(a) < out.f_of_feature(b));
  EXPECT_EQ(check_disadvantage(out).holds, check_disadvantage(inst).holds);
}

TEST(Perturb, DeterministicPerSeed) {
  auto a = perturb_generic(simpson_instance(), q(1, 1000), 42).instance;
  auto b = perturb_generic(simpson_instance(), q(1, 1000), 42).instance;
  auto c = perturb_generic(simpson_instance(), q(1, 1000), 43).instance;
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == c);
}

TEST(Perturb, GenericInputIsReturnedUnchanged) {
  auto inst = fig_example_instance();
  auto result = perturb_generic(inst, q(1, 1000), 3);
  EXPECT_EQ(result.instance, inst);
  EXPECT_EQ(result.attempts, 0);
  EXPECT_EQ(perturb_generic(inst, 0, 3).instance, inst);
}

TEST(Perturb, RejectsZeroOrOversizedEps) {
  EXPECT_THROW(perturb_generic(simpson_instance(), 0, 1), PreconditionError);
  EXPECT_THROW(perturb_generic(simpson_instance(), q(1, 10), 1), DomainError);
  EXPECT_THROW(perturb_generic(simpson_instance(), q(-1, 10), 1), DomainError);
}

TEST(Perturb, TiedFeaturesSharingARatioWarn) {
  auto inst = majority_instance(q(1, 10));
  EXPECT_TRUE(check_disadvantage(inst).holds);
  EXPECT_FALSE(check_genericity(inst).holds);
  PerturbOptions f_only;
  f_only.max_attempts = 2;
  EXPECT_THROW(perturb_generic(inst, q(1, 100), 9, f_only), Error);

  PerturbOptions jitter;
  jitter.jitter_measures = true;
  auto result = perturb_generic(inst, q(1, 100), 9, jitter);
  EXPECT_FALSE(result.warnings.empty());
  EXPECT_TRUE(check_genericity(result.instance).holds);
  EXPECT_TRUE(validate_instance(result.instance).holds);
}

TEST(GroupDistributions, SimpsonAlpha) {
  auto d = group_distributions(*simpson());
  EXPECT_EQ(d.values, (std::vector<Rational>{q(1, 50), q(1, 5), q(3, 5), q(9, 10)}));
  EXPECT_EQ(d.probA, (std::vector<Rational>{q(17, 25), q(3, 25), q(3, 25), q(2, 25)}));
  Rational sa = 0, sd = 0;
  for (std::size_t j = 0; j < 4; ++j) {
    sa += d.probA[j];
    sd += d.probD[j];
  }
  EXPECT_EQ(sa, 1);
  EXPECT_EQ(sd, 1);
}

TEST(GroupDistributions, SymmetricInstanceHasEqualGroups) {
  auto inst = Instance::from_rows(std::nullopt, ordinal_rows({{1, 'A', q(0), q(1, 8)}, {1, 'D', q(0), q(1, 8)},
                                                               {2, 'A', q(1), q(3, 8)}, {2, 'D', q(1), q(3, 8)}}));
  auto d = group_distributions(inst);
  EXPECT_EQ(d.probA, d.probD);
}

TEST(GroupDistributions, MajorityRowsAreCoordinateProducts) {
  auto inst = majority(q(1, 10));
  for (std::size_t j = 0; j < inst->num_features(); ++j) {
    Rational a = 1, d = 1;
    for (int b : inst->feature(j).coords) {
      a *= b ? q(9, 10) : q(1, 10);
      d *= b ? q(1, 10) : q(9, 10);
    }
    EXPECT_EQ(inst->mu(*inst->row_index(j, Group::A)), a / 2);
    EXPECT_EQ(inst->mu(*inst->row_index(j, Group::D)), d / 2);
  }
}
