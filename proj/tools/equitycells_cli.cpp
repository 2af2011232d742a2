// Command-line driver: instance checks, curves, comparisons, constructive moves and oracle sweeps.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "equitycells/equitycells.hpp"
#include "equitycells/io.hpp"

namespace ec = equitycells;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInput = 1, kPrecondition = 2, kVerification = 3 };

struct RunConfig {
  std::string command;
  std::string instance_path;
  std::string example;
  std::vector<std::string> approx;
  std::string out;
  std::string format = "json";
  std::string perturb;
  std::uint64_t seed = 0;
  std::size_t max_rows = ec::default_max_rows();
  std::optional<std::size_t> max_cells;
  std::size_t genericity_cap = ec::kDefaultGenericityCap;
  // command-specific
  int budget = 1;
  std::optional<std::size_t> cell;
  bool force = false;
  bool waive_genericity = false;
  bool equalize = false;
  std::string filter = "graded";
};

struct Loaded {
  ec::InstancePtr inst;
  std::vector<std::string> inputs;  // files read, for the overwrite guard
};

Loaded load(const RunConfig& cfg) {
  const bool has_file = !cfg.instance_path.empty(), has_example = !cfg.example.empty();
  if (has_file == has_example) throw ec::ParseError("give exactly one of --instance PATH or --example NAME");
  Loaded l;
  ec::Instance inst;
  if (has_file) {
    inst = ec::load_instance(cfg.instance_path);
    l.inputs.push_back(cfg.instance_path);
  } else {
    inst = ec::example_instance(cfg.example);
  }
  if (!cfg.perturb.empty()) {
    ec::PerturbOptions opt;
    opt.genericity_cap = cfg.genericity_cap;
    auto p = ec::perturb_generic(inst, ec::parse_rational(cfg.perturb), cfg.seed, opt);
    for (const auto& w : p.warnings) std::cerr << "warning: " << w << "\n";
    inst = std::move(p.instance);
  }
  l.inst = std::make_shared<const ec::Instance>(std::move(inst));
  return l;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ec::ParseError("bad variable list '" + s + "'");
    }
  }
  return out;
}

ec::Approximator resolve_approx(const ec::InstancePtr& inst, const std::string& spec, std::vector<std::string>& inputs) {
  if (spec.rfind("vars:", 0) == 0) return ec::from_variable_selection(inst, parse_int_list(spec.substr(5)));
  if (spec.rfind("name:", 0) == 0) return ec::canonical_approximator(inst, spec.substr(5));
  if (spec.rfind("tree:", 0) == 0) {
    inputs.push_back(spec.substr(5));
    return ec::from_decision_tree(inst, *ec::tree_from_json(ec::read_json_file(spec.substr(5))));
  }
  inputs.push_back(spec);
  return ec::approximator_from_json(inst, ec::read_json_file(spec));
}

std::vector<ec::Approximator> approximators(const RunConfig& cfg, Loaded& l, std::size_t expected) {
  if (cfg.approx.size() != expected)
    throw ec::ParseError(cfg.command + " needs " + std::to_string(expected) + " --approx value(s)");
  std::vector<ec::Approximator> out;
  for (const auto& a : cfg.approx) out.push_back(resolve_approx(l.inst, a, l.inputs));
  return out;
}

ec::EnumerationOptions enumeration(const RunConfig& cfg) {
  ec::EnumerationOptions opt;
  opt.maxRows = cfg.max_rows;
  opt.maxCells = cfg.max_cells;
  return opt;
}

void emit(const RunConfig& cfg, const Loaded& l, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::error_code ec_;
  const fs::path target = fs::weakly_canonical(cfg.out, ec_);
  for (const auto& in : l.inputs)
    if (fs::weakly_canonical(in, ec_) == target) throw ec::ParseError("--out would overwrite input " + in);
  std::ofstream f(cfg.out);
  if (!f) throw ec::ParseError("cannot write " + cfg.out);
  f << text;
}

void emit_json(const RunConfig& cfg, const Loaded& l, ec::Json result) {
  ec::Json j{{"command", cfg.command}, {"instance_hash", ec::instance_hash(*l.inst)}};
  j["seed"] = cfg.seed;
  j["caps"] = ec::Json{{"max_rows", cfg.max_rows}, {"genericity", cfg.genericity_cap}};
  j["result"] = std::move(result);
  emit(cfg, l, j.dump(2) + "\n");
}

ec::CheckOptions checks_for(const RunConfig& cfg) {
  if (cfg.force) return {false, false, false};
  if (cfg.waive_genericity) std::cerr << "warning: genericity not checked (--waive-genericity)\n";
  return {true, true, !cfg.waive_genericity};
}

int cmd_check(const RunConfig& cfg) {
  Loaded l = load(cfg);
  ec::Json result;
  auto valid = ec::validate_instance(*l.inst);
  result["validation"] = ec::report_to_json(valid);
  if (!valid.holds) {
    emit_json(cfg, l, result);
    return kInput;
  }
  auto dis = ec::check_disadvantage(*l.inst);
  result["disadvantage"] = ec::report_to_json(dis);
  bool generic = true;
  if (cfg.waive_genericity) {
    result["genericity"] = ec::Json{{"waived", true}};
  } else {
    auto gen = ec::check_genericity(*l.inst, cfg.genericity_cap);
    result["genericity"] = ec::report_to_json(gen);
    generic = gen.holds;
  }
  emit_json(cfg, l, result);
  if (!dis.holds) std::cerr << "disadvantage condition fails\n";
  if (!generic) std::cerr << "genericity condition fails\n";
  return dis.holds && generic ? kOk : kPrecondition;
}

int cmd_show(const RunConfig& cfg) {
  Loaded l = load(cfg);
  emit(cfg, l, ec::instance_to_json(*l.inst).dump(2) + "\n");
  return kOk;
}

int cmd_classify(const RunConfig& cfg) {
  Loaded l = load(cfg);
  auto g = approximators(cfg, l, 1).front();
  emit_json(cfg, l, ec::Json{{"flags", ec::flags_to_json(ec::classify(g))}, {"cells", ec::cells_summary(g)}});
  return kOk;
}

int cmd_curves(const RunConfig& cfg) {
  Loaded l = load(cfg);
  auto g = approximators(cfg, l, 1).front();
  if (cfg.format == "csv") {
    std::ostringstream os;
    ec::write_curves_csv(os, g);
    emit(cfg, l, os.str());
    return kOk;
  }
  const auto cc = ec::cumulative_curves(g);
  ec::Json pts = ec::Json::array();
  for (std::size_t j = 0; j < cc.breakpoints.size(); ++j)
    pts.push_back(ec::Json{{"r", ec::to_string(cc.breakpoints[j])},
                           {"Vstar", ec::to_string(cc.vstar[j])},
                           {"Wstar", ec::to_string(cc.wstar[j])}});
  emit_json(cfg, l, ec::Json{{"breakpoints", std::move(pts)}, {"cells", ec::cells_summary(g)}});
  return kOk;
}

int cmd_compare(const RunConfig& cfg) {
  Loaded l = load(cfg);
  auto gs = approximators(cfg, l, 2);
  emit_json(cfg, l, ec::Json{{"h", gs[0].label()}, {"g", gs[1].label()}, {"verdict", ec::verdict_to_json(ec::compare(gs[0], gs[1]))}});
  return kOk;
}

int cmd_improve(const RunConfig& cfg) {
  Loaded l = load(cfg);
  auto g = approximators(cfg, l, 1).front();
  const ec::CheckOptions checks = checks_for(cfg);
  auto r = cfg.equalize ? ec::equalizing_improvement(g, checks) : ec::improve_graded(g, checks);
  emit_json(cfg, l, ec::Json{{"move", ec::move_to_json(*l.inst, r.move)},
                            {"verdict", ec::verdict_to_json(r.verdict)},
                            {"discrete", r.improved.is_discrete()},
                            {"cells", ec::cells_summary(r.improved)},
                            {"approximator", ec::approximator_to_json(r.improved)}});
  return kOk;
}

int cmd_split(const RunConfig& cfg) {
  Loaded l = load(cfg);
  auto g = approximators(cfg, l, 1).front();
  const ec::CheckOptions checks = checks_for(cfg);
  ec::Json result;
  if (cfg.cell) {
    auto s = ec::split_cell(g, *cfg.cell, checks);
    result = ec::Json{{"thetaA", ec::to_string(s.thetaA)},
                      {"thetaCell", ec::to_string(s.thetaCell)},
                      {"thetaD", ec::to_string(s.thetaD)},
                      {"efficiency", ec::verdict_to_json(s.efficiency)},
                      {"equity", ec::verdict_to_json(s.equity)},
                      {"cells", ec::cells_summary(s.split)},
                      {"approximator", ec::approximator_to_json(s.split)}};
  } else {
    auto s = ec::group_split(g, checks);
    result = ec::Json{{"efficiency", ec::verdict_to_json(s.efficiency)},
                      {"equity", ec::verdict_to_json(s.equity)},
                      {"cells", ec::cells_summary(s.split)},
                      {"approximator", ec::approximator_to_json(s.split)}};
  }
  emit_json(cfg, l, std::move(result));
  return kOk;
}

int cmd_witness(const RunConfig& cfg) {
  Loaded l = load(cfg);
  auto g = approximators(cfg, l, 1).front();
  auto w = ec::separable_witness(g, checks_for(cfg));
  emit_json(cfg, l, ec::witness_to_json(*l.inst, w));
  return kOk;
}

int cmd_frontier(const RunConfig& cfg) {
  Loaded l = load(cfg);
  auto fr = ec::discrete_frontier(l.inst, enumeration(cfg));
  if (cfg.format == "csv") {
    std::ostringstream os;
    ec::write_frontier_csv(os, fr);
    emit(cfg, l, os.str());
    return kOk;
  }
  ec::Json members = ec::Json::array();
  for (const auto& g : fr.members) members.push_back(ec::Json{{"label", g.label()}, {"trivial", !g.nontrivial()}});
  emit_json(cfg, l, ec::Json{{"kind", "discrete frontier"}, {"enumerated", fr.enumerated}, {"size", fr.members.size()},
                            {"members", std::move(members)}});
  return kOk;
}

int cmd_no_improver(const RunConfig& cfg) {
  Loaded l = load(cfg);
  auto g = approximators(cfg, l, 1).front();
  auto r = ec::verify_no_discrete_improver(g, enumeration(cfg));
  ec::Json improvers = ec::Json::array();
  for (const auto& h : r.improvers) improvers.push_back(h.label());
  emit_json(cfg, l, ec::Json{{"holds", r.holds}, {"checked", r.checked}, {"improvers", std::move(improvers)}});
  return kOk;
}

int cmd_theorem1(const RunConfig& cfg) {
  Loaded l = load(cfg);
  if (cfg.filter != "graded" && cfg.filter != "simple") throw ec::ParseError("--filter must be graded or simple");
  auto r = ec::exhaustive_theorem1(l.inst, cfg.filter == "simple" ? ec::GradedFilter::Simple : ec::GradedFilter::Graded,
                                   enumeration(cfg));
  emit_json(cfg, l, ec::theorem1_to_json(r));
  return r.failures.empty() ? kOk : kVerification;
}

int cmd_theorem2(const RunConfig& cfg) {
  Loaded l = load(cfg);
  auto r = ec::exhaustive_theorem2(l.inst, enumeration(cfg));
  emit_json(cfg, l, ec::theorem2_to_json(r));
  return r.failures.empty() ? kOk : kVerification;
}

int cmd_budget(const RunConfig& cfg) {
  Loaded l = load(cfg);
  emit_json(cfg, l, ec::budget_to_json(ec::budget_selection(l.inst, cfg.budget)));
  return kOk;
}

int cmd_hierarchy(const RunConfig& cfg) {
  Loaded l = load(cfg);
  auto [p, q] = ec::group_pair(*l.inst);
  emit_json(cfg, l, ec::hierarchy_to_json(ec::dominance_hierarchy(p, q)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equitycells: exact analysis of cell-based approximators of a ranking criterion"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--instance", cfg.instance_path, "Instance JSON file");
    sub->add_option("--example", cfg.example, "Catalog instance: fig1, simpson, simpson-generic, majority:EPS");
    sub->add_option("--perturb", cfg.perturb, "Perturb f by at most EPS until generic");
    sub->add_option("--seed", cfg.seed, "Seed for perturbation");
    sub->add_option("--out", cfg.out, "Output path (default stdout)");
    sub->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--genericity-cap", cfg.genericity_cap, "Largest row count for the genericity check");
  };
  auto add_approx = [&](CLI::App* sub) {
    sub->add_option("--approx", cfg.approx, "PATH | vars:i,j | tree:PATH | name:CANONICAL");
  };
  auto add_enum = [&](CLI::App* sub) {
    sub->add_option("--max-rows", cfg.max_rows, "Enumeration cap on rows");
    sub->add_option("--max-cells", cfg.max_cells, "Largest number of cells enumerated");
  };

  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&);
    bool approx;
    bool enumerates;
  };
  const Sub subs[] = {
      {"check", "Validate the instance and test disadvantage and genericity", cmd_check, false, false},
      {"show", "Print the instance as JSON", cmd_show, false, false},
      {"classify", "Structural flags of an approximator", cmd_classify, true, false},
      {"curves", "Efficiency and equity curves", cmd_curves, true, false},
      {"compare", "Dominance verdict of the first approximator over the second", cmd_compare, true, false},
      {"improve", "Constructive strict improvement of a graded approximator", cmd_improve, true, false},
      {"split", "Group split of an approximator or of one cell (--cell)", cmd_split, true, false},
      {"witness", "Feature whose A-row is valued above its D-row", cmd_witness, true, false},
      {"frontier", "Discrete frontier by exhaustive enumeration", cmd_frontier, false, true},
      {"no-discrete-improver", "Search all discrete approximators for a strict improver", cmd_no_improver, true, true},
      {"theorem1", "Improve every graded approximator exhaustively", cmd_theorem1, false, true},
      {"theorem2", "Check the group split on every group-agnostic approximator", cmd_theorem2, false, true},
      {"budget", "Compare variable selections of a fixed size", cmd_budget, false, false},
      {"hierarchy", "Likelihood-ratio, stochastic and mean dominance of the groups", cmd_hierarchy, false, false},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> registered;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common(sub);
    if (s.approx) add_approx(sub);
    if (s.enumerates) add_enum(sub);
    registered.emplace_back(sub, &s);
  }
  app.get_subcommand("budget")->add_option("--c", cfg.budget, "Number of variables")->required();
  app.get_subcommand("split")->add_option("--cell", cfg.cell, "Split only this cell (admission-order index)");
  for (const char* name : {"split", "improve"})
    app.get_subcommand(name)->add_flag("--force", cfg.force, "Skip precondition checks and post-verification");
  for (const char* name : {"check", "improve", "split", "witness"})
    app.get_subcommand(name)->add_flag("--waive-genericity", cfg.waive_genericity,
                                       "Skip the genericity check (needed above the row cap)");
  app.get_subcommand("improve")->add_flag("--equalize", cfg.equalize, "Push ε to the collision value and merge");
  app.get_subcommand("theorem1")->add_option("--filter", cfg.filter, "graded or simple");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  for (const auto& [sub, s] : registered) {
    if (!sub->parsed()) continue;
    cfg.command = s->name;
    try {
      return s->run(cfg);
    } catch (const ec::PreconditionError& e) {
      std::cerr << "precondition failed: " << e.what() << "\n";
      return kPrecondition;
    } catch (const ec::VerificationError& e) {
      std::cerr << "verification failed: " << e.what() << "\n";
      return kVerification;
    } catch (const ec::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kInput;
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kInput;
    }
  }
  return kInput;
}
