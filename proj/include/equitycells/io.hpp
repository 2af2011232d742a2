#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "equitycells/approximator.hpp"
#include "equitycells/curves.hpp"
#include "equitycells/error.hpp"
#include "equitycells/improve.hpp"
#include "equitycells/instance.hpp"
#include "equitycells/oracle.hpp"
#include "equitycells/rational.hpp"

namespace equitycells {

using Json = nlohmann::ordered_json;

/// Rationals travel as strings ("3/8", "0.06") or JSON integers. JSON floats are refused
/// because their binary value is not the decimal that was written.
inline Rational rational_from_json(const Json& j, const std::string& where) {
  if (j.is_string()) {
    try {
      return parse_rational(j.get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  if (j.is_number_integer()) return Rational(j.dump());
  if (j.is_number_float()) throw ParseError(where + ": write rationals as strings, not JSON floats");
  throw ParseError(where + ": expected a rational");
}

inline Json rational_to_json(const Rational& r) { return to_string(r); }

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline Instance instance_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("instance must be a JSON object");
  std::optional<int> k;
  if (j.contains("k") && !j["k"].is_null()) {
    if (!j["k"].is_number_integer() || j["k"].get<int>() < 1) throw ParseError("k must be a positive integer or null");
    k = j["k"].get<int>();
  }
  if (!j.contains("rows") || !j["rows"].is_array()) throw ParseError("instance needs a \"rows\" array");
  std::vector<InstanceRow> rows;
  std::size_t i = 0;
  for (const auto& r : j["rows"]) {
    const std::string where = "rows[" + std::to_string(i++) + "]";
    if (!r.is_object()) throw ParseError(where + ": expected an object");
    InstanceRow row;
    if (r.contains("x")) {
      if (!r["x"].is_array() || r["x"].empty()) throw ParseError(where + ": \"x\" must be a nonempty array");
      for (const auto& c : r["x"]) {
        if (!c.is_number_integer()) throw ParseError(where + ": coordinates must be integers");
        row.x.coords.push_back(c.get<int>());
      }
    } else if (r.contains("id")) {
      if (!r["id"].is_number_integer()) throw ParseError(where + ": \"id\" must be an integer");
      row.x.id = r["id"].get<int>();
    } else {
      throw ParseError(where + ": needs \"x\" or \"id\"");
    }
    if (!r.contains("group") || !r["group"].is_string()) throw ParseError(where + ": needs \"group\"");
    const std::string g = r["group"].get<std::string>();
    if (g != "A" && g != "D") throw ParseError(where + ": group must be \"A\" or \"D\"");
    row.group = g == "A" ? Group::A : Group::D;
    if (!r.contains("f") || !r.contains("mu")) throw ParseError(where + ": needs \"f\" and \"mu\"");
    row.f = rational_from_json(r["f"], where + ".f");
    row.mu = rational_from_json(r["mu"], where + ".mu");
    rows.push_back(std::move(row));
  }
  std::optional<int> bound;
  if (j.contains("cell_bound") && !j["cell_bound"].is_null()) {
    if (!j["cell_bound"].is_number_integer()) throw ParseError("cell_bound must be an integer");
    bound = j["cell_bound"].get<int>();
  }
  return Instance::from_rows(k, rows, bound);
}

inline Json instance_to_json(const Instance& inst) {
  Json j;
  j["k"] = inst.k() ? Json(*inst.k()) : Json(nullptr);
  Json rows = Json::array();
  for (const auto& r : inst.raw_rows()) {
    Json row;
    if (inst.boolean_form()) {
      row["x"] = r.x.coords;
    } else {
      row["id"] = r.x.id;
    }
    row["group"] = std::string(1, group_char(r.group));
    row["f"] = rational_to_json(r.f);
    row["mu"] = rational_to_json(r.mu);
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  j["cell_bound"] = inst.cell_bound();
  return j;
}

inline Instance load_instance(const std::string& path) { return instance_from_json(read_json_file(path)); }

/// 64-bit FNV-1a of the compact canonical instance JSON, as 16 hex digits.
inline std::string instance_hash(const Instance& inst) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : instance_to_json(inst).dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::shared_ptr<const DecisionTree> tree_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("tree node must be an object");
  if (!j.contains("var")) return DecisionTree::leaf();
  if (!j["var"].is_number_integer() || !j.contains("value") || !j["value"].is_number_integer())
    throw ParseError("tree test needs integer \"var\" and \"value\"");
  if (!j.contains("then") || !j.contains("else")) throw ParseError("tree test needs \"then\" and \"else\"");
  const int var = j["var"].get<int>();
  if (var < 1) throw ParseError("tree variables are numbered from 1");
  return DecisionTree::test(var, j["value"].get<int>(), tree_from_json(j["then"]), tree_from_json(j["else"]));
}

inline Json tree_to_json(const DecisionTree& t) {
  if (t.is_leaf()) return Json::object();
  return Json{{"var", t.var}, {"value", t.value}, {"then", tree_to_json(*t.yes)}, {"else", tree_to_json(*t.no)}};
}

/// Reads an approximator spec: variable_selection, decision_tree or explicit cells.
inline Approximator approximator_from_json(const InstancePtr& inst, const Json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw ParseError("approximator spec needs a string \"type\"");
  const std::string type = j["type"].get<std::string>();
  if (type == "variable_selection") {
    if (!j.contains("vars") || !j["vars"].is_array()) throw ParseError("variable_selection needs \"vars\"");
    std::vector<int> vars;
    for (const auto& v : j["vars"]) {
      if (!v.is_number_integer()) throw ParseError("vars must be integers");
      vars.push_back(v.get<int>());
    }
    return from_variable_selection(inst, vars);
  }
  if (type == "decision_tree") {
    if (!j.contains("tree")) throw ParseError("decision_tree needs \"tree\"");
    return from_decision_tree(inst, *tree_from_json(j["tree"]));
  }
  if (type == "explicit") {
    if (!j.contains("cells") || !j["cells"].is_array()) throw ParseError("explicit approximator needs \"cells\"");
    std::vector<std::vector<Rational>> allocations;
    std::size_t ci = 0;
    for (const auto& c : j["cells"]) {
      const std::string where = "cells[" + std::to_string(ci++) + "]";
      if (!c.is_object() || !c.contains("rows") || !c["rows"].is_array()) throw ParseError(where + ": needs \"rows\"");
      std::vector<Rational> alloc(inst->num_rows());
      for (const auto& r : c["rows"]) {
        if (!r.is_object() || !r.contains("row") || !r["row"].is_number_integer())
          throw ParseError(where + ": each entry needs an integer \"row\"");
        const long idx = r["row"].get<long>();
        if (idx < 0 || static_cast<std::size_t>(idx) >= inst->num_rows())
          throw DomainError(where + ": row index " + std::to_string(idx) + " out of range");
        const auto u = static_cast<std::size_t>(idx);
        alloc[u] += r.contains("measure") ? rational_from_json(r["measure"], where + ".measure") : inst->mu(u);
      }
      allocations.push_back(std::move(alloc));
    }
    return from_explicit_cells(inst, allocations);
  }
  throw ParseError("unknown approximator type '" + type + "'");
}

/// Explicit spec in admission order; measures are omitted for rows held in full.
inline Json approximator_to_json(const Approximator& g) {
  Json cells = Json::array();
  for (const Cell& c : g.cells()) {
    Json rows = Json::array();
    for (std::size_t r : c.support()) {
      Json e{{"row", r}};
      if (c.allocation(r) != g.instance().mu(r)) e["measure"] = rational_to_json(c.allocation(r));
      rows.push_back(std::move(e));
    }
    cells.push_back(Json{{"rows", std::move(rows)}});
  }
  return Json{{"type", "explicit"}, {"cells", std::move(cells)}};
}

inline Json violation_to_json(const Violation& v) {
  Json j{{"condition", v.condition}, {"detail", v.detail}};
  if (!v.rows.empty()) j["rows"] = v.rows;
  if (!v.features.empty()) j["features"] = v.features;
  if (!v.subsets.empty()) j["subsets"] = v.subsets;
  if (!v.values.empty()) {
    Json vals = Json::array();
    for (const auto& x : v.values) vals.push_back(rational_to_json(x));
    j["values"] = std::move(vals);
  }
  return j;
}

inline Json report_to_json(const ConditionReport& r) {
  Json w = Json::array();
  for (const auto& v : r.witnesses) w.push_back(violation_to_json(v));
  return Json{{"holds", r.holds}, {"violations", r.violation_count}, {"witnesses", std::move(w)}};
}

inline Json flags_to_json(const StructureFlags& f) {
  return Json{{"discrete", flag_name(f.discrete)},   {"trivial", flag_name(f.trivial)},
              {"nonTrivial", flag_name(f.nonTrivial)}, {"allCube", flag_name(f.allCube)},
              {"simple", flag_name(f.simple)},       {"graded", flag_name(f.graded)},
              {"separable", flag_name(f.separable)}, {"groupAgnostic", flag_name(f.groupAgnostic)}};
}

inline Json point_to_json(const PointComparison& p) {
  return Json{{"r", to_string(p.r)}, {"V_h", to_string(p.Vh)}, {"V_g", to_string(p.Vg)},
              {"W_h", to_string(p.Wh)}, {"W_g", to_string(p.Wg)}};
}

inline Json verdict_to_json(const DominanceVerdict& v) {
  Json j{{"weak", v.weak},
         {"strict", v.strict},
         {"strictEfficiency", v.strictEfficiency},
         {"strictEquity", v.strictEquity},
         {"weakEfficiency", v.weakEfficiency},
         {"weakEquity", v.weakEquity}};
  j["witness"] = v.witness ? point_to_json(*v.witness) : Json(nullptr);
  j["counterWitness"] = v.counterWitness ? point_to_json(*v.counterWitness) : Json(nullptr);
  return j;
}

inline Json cells_summary(const Approximator& g) {
  Json cells = Json::array();
  for (const Cell& c : g.cells()) {
    Json rows = Json::array();
    for (std::size_t r : c.support()) rows.push_back(g.instance().row_label(r));
    cells.push_back(Json{{"rows", std::move(rows)},
                         {"measure", to_string(c.measure())},
                         {"theta", to_string(c.theta())},
                         {"sigma", to_string(c.sigma())}});
  }
  return cells;
}

inline Json epsilon_bound_to_json(const EpsilonBound& b) {
  Json j{{"maxEps", to_string(b.maxEps)},
         {"chosen", to_string(b.chosen)},
         {"orderBinds", b.orderBinds},
         {"bindingConstraint", b.bindingConstraint}};
  j["neighborCell"] = b.neighborCell ? Json(*b.neighborCell) : Json(nullptr);
  return j;
}

inline Json witness_to_json(const Instance& inst, const SeparableWitness& w) {
  return Json{{"feature", inst.feature_label(w.feature)}, {"cellD", w.cellD},
              {"cellA", w.cellA},                         {"thetaD", to_string(w.thetaD)},
              {"thetaA", to_string(w.thetaA)}};
}

inline Json move_to_json(const Instance& inst, const ImprovementMove& m) {
  Json rows = Json::array();
  for (std::size_t r : m.rows) rows.push_back(Json{{"index", r}, {"label", inst.row_label(r)}});
  Json j{{"caseTag", case_name(m.caseTag)},
         {"sourceCells", m.sourceCells},
         {"rows", std::move(rows)},
         {"epsilon", to_string(m.epsilon)},
         {"insertedPosition", m.insertedPosition},
         {"residualPositions", m.residualPositions},
         {"bound", epsilon_bound_to_json(m.bound)}};
  j["witness"] = m.witness ? witness_to_json(inst, *m.witness) : Json(nullptr);
  return j;
}

inline Json theorem1_to_json(const Theorem1Report& r) {
  Json failures = Json::array();
  for (const auto& f : r.failures) failures.push_back(Json{{"partition", f.partition}, {"message", f.message}});
  return Json{{"filter", r.filter == GradedFilter::Graded ? "graded" : "simple"},
              {"enumerated", r.enumerated},
              {"candidates", r.candidates},
              {"improved", r.improved},
              {"nonDiscreteImprovers", r.nonDiscreteImprovers},
              {"caseCounts", r.caseCounts},
              {"failures", std::move(failures)}};
}

inline Json theorem2_to_json(const Theorem2Report& r) {
  Json failures = Json::array();
  for (const auto& f : r.failures) failures.push_back(Json{{"partition", f.partition}, {"message", f.message}});
  return Json{{"featurePartitions", r.featurePartitions},
              {"trivialSkipped", r.trivialSkipped},
              {"candidates", r.candidates},
              {"passed", r.passed},
              {"failures", std::move(failures)}};
}

inline Json hierarchy_to_json(const DominanceHierarchyReport& r) {
  Json j{{"lrHolds", r.lrHolds},
         {"fosdHolds", r.fosdHolds},
         {"expHolds", r.expHolds},
         {"meanP", to_string(r.meanP)},
         {"meanQ", to_string(r.meanQ)}};
  j["lrWitness"] = r.lrWitness ? Json(*r.lrWitness) : Json(nullptr);
  j["fosdWitness"] = r.fosdWitness ? Json(to_string(*r.fosdWitness)) : Json(nullptr);
  return j;
}

inline Json budget_to_json(const BudgetReport& r) {
  Json entries = Json::array();
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    Json improves = Json::array();
    for (const auto& v : e.efficiencyImproves) improves.push_back(v);
    entries.push_back(Json{{"vars", e.vars},
                           {"label", e.label},
                           {"V_half", to_string(e.vHalf)},
                           {"marginAtHalf", to_string(r.margins[i])},
                           {"efficiencyImproves", std::move(improves)},
                           {"perfect", e.perfect}});
  }
  Json j{{"c", r.c}, {"entries", std::move(entries)}};
  j["winner"] = r.winner ? Json(r.entries[*r.winner].label) : Json(nullptr);
  return j;
}

/// One line per frontier member: index, cell count, row labels.
inline void write_frontier_csv(std::ostream& out, const FrontierReport& r) {
  out << "member,cells,partition\n";
  for (std::size_t i = 0; i < r.members.size(); ++i)
    out << i << "," << r.members[i].size() << ",\"" << r.members[i].label() << "\"\n";
}

}  // namespace equitycells
