#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "equitycells/io.hpp"
#include "support.hpp"

using namespace ectest;

namespace {

Json parse(const char* text) { return Json::parse(text); }

std::string temp_file(const std::string& name, const std::string& content) {
  std::string path = testing::TempDir() + name;
  std::ofstream(path) << content;
  return path;
}

}  // namespace

TEST(Json, InstanceRoundTripForEveryCatalogInstance) {
  for (const auto& name : {"fig1", "simpson", "simpson-generic", "majority:1/10", "majority-generic:1/10"}) {
    Instance inst = example_instance(name);
    Json j = instance_to_json(inst);
    Instance back = instance_from_json(Json::parse(j.dump()));
    EXPECT_EQ(back, inst) << name;
    EXPECT_EQ(instance_hash(back), instance_hash(inst));
  }
  std::mt19937_64 rng(73);
  Instance ordinal = random_disadvantaged(rng, 0, 4);
  EXPECT_EQ(instance_from_json(instance_to_json(ordinal)), ordinal);
  EXPECT_TRUE(instance_to_json(ordinal)["k"].is_null());
}

TEST(Json, HashIsSixteenHexDigitsAndSeparatesInstances) {
  std::string a = instance_hash(fig_example_instance()), b = instance_hash(simpson_instance());
  EXPECT_EQ(a.size(), 16u);
  EXPECT_EQ(a.find_first_not_of("0123456789abcdef"), std::string::npos);
  EXPECT_NE(a, b);
  EXPECT_EQ(a, instance_hash(fig_example_instance()));
}

TEST(Json, RationalsAcceptStringsAndIntegersOnly) {
  EXPECT_EQ(rational_from_json(Json("3/8"), "x"), q(3, 8));
  EXPECT_EQ(rational_from_json(Json("0.06"), "x"), q(3, 50));
  EXPECT_EQ(rational_from_json(Json(2), "x"), q(2));
  EXPECT_THROW(rational_from_json(Json(0.5), "x"), ParseError);
  EXPECT_THROW(rational_from_json(Json(true), "x"), ParseError);
  EXPECT_THROW(rational_from_json(Json("1/0"), "x"), ParseError);
}

TEST(Json, InstanceParseErrors) {
  const char* bad[] = {
      R"([])",
      R"({"k": 1})",
      R"({"k": 0, "rows": []})",
      R"({"k": 1, "rows": [{"x": [1], "group": "B", "f": "1", "mu": "1"}]})",
      R"({"k": 1, "rows": [{"x": [1], "group": "A", "f": 0.5, "mu": "1"}]})",
      R"({"k": 1, "rows": [{"group": "A", "f": "1", "mu": "1"}]})",
      R"({"k": 1, "rows": [{"x": [1], "group": "A", "mu": "1"}]})",
      R"({"k": 2, "rows": [{"x": [1], "group": "A", "f": "1", "mu": "1"}]})",
      R"({"k": null, "rows": [{"x": [1], "group": "A", "f": "1", "mu": "1"}]})",
      R"({"k": 1, "rows": [{"x": [2], "group": "A", "f": "1", "mu": "1"}]})",
      R"({"k": 1, "rows": [{"x": [1], "group": "A", "f": "1", "mu": "1"}], "cell_bound": "x"})",
  };
  for (const char* text : bad) EXPECT_THROW(instance_from_json(parse(text)), ParseError) << text;
}

TEST(Json, CellBoundSurvivesRoundTrip) {
  Instance inst = instance_from_json(parse(
      R"({"k": 1, "cell_bound": 1, "rows": [{"x": [1], "group": "A", "f": "1", "mu": "1/2"},
                                            {"x": [0], "group": "A", "f": "0", "mu": "1/2"}]})"));
  EXPECT_EQ(inst.cell_bound(), 1);
  EXPECT_EQ(instance_from_json(instance_to_json(inst)).cell_bound(), 1);
}

TEST(Json, FilesThatCannotBeReadOrParsed) {
  EXPECT_THROW(read_json_file("/nonexistent/instance.json"), ParseError);
  EXPECT_THROW(load_instance(temp_file("ec_bad.json", "{ not json")), ParseError);
  auto path = temp_file("ec_fig1.json", instance_to_json(fig_example_instance()).dump(2));
  EXPECT_EQ(load_instance(path), fig_example_instance());
}

TEST(Json, ApproximatorSpecs) {
  auto inst = fig1();
  auto sel = approximator_from_json(inst, parse(R"({"type": "variable_selection", "vars": [1]})"));
  EXPECT_EQ(sel.partition(), canonical_approximator(inst, "g1").partition());

  auto tree = approximator_from_json(
      inst, parse(R"({"type": "decision_tree", "tree": {"var": 1, "value": 1, "then": {}, "else": {}}})"));
  EXPECT_EQ(tree.partition(), sel.partition());

  auto expl = approximator_from_json(
      inst, parse(R"({"type": "explicit", "cells": [{"rows": [{"row": 0}, {"row": 1}, {"row": 2}, {"row": 3}]},
                                                     {"rows": [{"row": 4}, {"row": 5}, {"row": 6}, {"row": 7}]}]})"));
  EXPECT_EQ(expl, sel);

  EXPECT_THROW(approximator_from_json(inst, parse(R"({"type": "forest"})")), ParseError);
  EXPECT_THROW(approximator_from_json(inst, parse(R"({"vars": [1]})")), ParseError);
  EXPECT_THROW(approximator_from_json(inst, parse(R"({"type": "explicit", "cells": [{"rows": [{"row": 9}]}]})")),
               DomainError);
  EXPECT_THROW(approximator_from_json(inst, parse(R"({"type": "explicit", "cells": [{"rows": [{"row": 0}]}]})")),
               ConstraintError);
  EXPECT_THROW(approximator_from_json(inst, parse(R"({"type": "decision_tree", "tree": {"var": 1}})")), ParseError);
}

TEST(Json, ApproximatorRoundTripIncludingFractionalCells) {
  auto inst = fig1();
  auto fractional = improve_graded(canonical_approximator(inst, "nondiscrete_g")).improved;
  for (const auto& g : {canonical_approximator(inst, "g1"), canonical_approximator(inst, "h_improver"), fractional}) {
    Json j = approximator_to_json(g);
    EXPECT_EQ(approximator_from_json(inst, Json::parse(j.dump())), g);
  }
  EXPECT_TRUE(approximator_to_json(fractional).dump().find("measure") != std::string::npos);
}

TEST(Json, TreeRoundTrip) {
  auto leaf = DecisionTree::leaf();
  auto t = DecisionTree::test(1, 1, DecisionTree::test(3, 0, leaf, leaf), leaf);
  Json j = tree_to_json(*t);
  EXPECT_EQ(tree_to_json(*tree_from_json(j)), j);
  EXPECT_THROW(tree_from_json(parse(R"({"var": 0, "value": 1, "then": {}, "else": {}})")), ParseError);
}

TEST(Json, VerdictAndReportsSerializeExactValues) {
  auto inst = fig1();
  auto v = compare(canonical_approximator(inst, "g_star"), canonical_approximator(inst, "g1"));
  Json j = verdict_to_json(v);
  EXPECT_EQ(j["strict"], false);
  EXPECT_EQ(j["counterWitness"]["r"], "739/2000");
  EXPECT_EQ(j["counterWitness"]["W_h"], "19/739");
  EXPECT_TRUE(j["witness"].is_null());

  auto res = improve_graded(canonical_approximator(inst, "nondiscrete_g"));
  Json m = move_to_json(*inst, res.move);
  EXPECT_EQ(m["caseTag"], "C3a");
  EXPECT_EQ(m["bound"]["maxEps"], "237/44000");
  EXPECT_EQ(m["rows"][0]["label"], "(1,1,D)");

  Json b = budget_to_json(budget_selection(majority(q(1, 10)), 1));
  EXPECT_EQ(b["winner"], "gamma");
  EXPECT_EQ(b["entries"][1]["marginAtHalf"], "31/500");

  Json t = theorem2_to_json(exhaustive_theorem2(inst));
  EXPECT_EQ(t["passed"], 14);

  Json flags = flags_to_json(classify(canonical_approximator(inst, "g1")));
  EXPECT_EQ(flags["simple"], "true");
  EXPECT_EQ(flags["separable"], "false");
}

TEST(Csv, FrontierHasOneLinePerMember) {
  auto report = discrete_frontier(fig1());
  std::ostringstream out;
  write_frontier_csv(out, report);
  std::string text = out.str();
  EXPECT_EQ(text.rfind("member,cells,partition\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), report.members.size() + 1);
}
