#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "polygame/dot.hpp"
#include "polygame/error.hpp"
#include "polygame/exchange.hpp"
#include "polygame/game.hpp"
#include "polygame/instances.hpp"
#include "polygame/json_io.hpp"
#include "polygame/matroid.hpp"
#include "polygame/solver.hpp"

namespace polygame::cli {

using json = nlohmann::json;

enum Exit : int { ok = 0, negative = 1, input_error = 2, no_convergence = 3 };

inline constexpr std::uint64_t kDefaultSeed = 42;

struct Options {
  std::string game_path, profile_path, oracle_path, x_path, y_path, matroid_path, graph_path, dot_path;
  std::string target;
  std::size_t starts = 1;
  std::size_t samples = 200;
  std::uint64_t seed = kDefaultSeed;
  double verify_tol = kTol;
  SolverParams params;
};

namespace detail {

inline std::uint64_t effective_seed(std::uint64_t flag) {
  if (const char* env = std::getenv("POLYGAME_SEED"); env && *env) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw InvalidSpec(std::string("POLYGAME_SEED is not an unsigned integer: ") + env);
    }
  }
  return flag;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw InvalidSpec("cannot write '" + path + "'");
  f << text;
}

inline std::vector<StrategyProfile> seeded_starts(const Game& g, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<StrategyProfile> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(random_profile(g, rng));
  return out;
}

inline void add_solver_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--damping", o.params.damping, "best-response damping in (0, 1]")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--tol", o.params.eq_tol, "equilibrium residual tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", o.params.max_iters, "conditional-gradient iterations per best response");
  cmd->add_option("--max-sweeps", o.params.max_sweeps, "best-response sweeps per start");
  cmd->add_option("--jobs", o.params.jobs, "worker threads")->check(CLI::PositiveNumber);
}

// ---------------------------------------------------------------------------
// Commands

inline int solve(const Options& o, std::ostream& out, bool probe) {
  auto g = io::game_from_json(io::read_file(o.game_path));
  auto rep = probe_multiplicity(g, seeded_starts(g, o.starts, effective_seed(o.seed)), o.params);
  auto j = io::multiplicity_to_json(g, rep);
  j["seed"] = effective_seed(o.seed);
  j["starts"] = o.starts;
  out << io::dump(j);
  if (rep.equilibria.empty() || (probe && !rep.failures.empty())) return no_convergence;
  return ok;
}

inline int verify(const Options& o, std::ostream& out, std::ostream& err) {
  auto g = io::game_from_json(io::read_file(o.game_path));
  auto x = io::profile_from_json(g, io::read_file(o.profile_path));
  auto problems = check_feasibility(g, x, o.params.tol);
  if (!problems.empty()) {
    out << io::dump(io::versioned({{"feasible", false}, {"problems", problems}}));
    for (const auto& p : problems) err << "infeasible: " << p << "\n";
    return input_error;
  }
  auto rep = is_equilibrium(g, x, o.verify_tol);
  auto j = io::equilibrium_report_to_json(g, rep);
  j["feasible"] = true;
  j["tol"] = o.verify_tol;
  out << io::dump(io::versioned(j));
  return rep.is_equilibrium ? ok : negative;
}

inline int matroid_check(const Options& o, std::ostream& out) {
  auto mat = io::matroid_from_json(io::read_file(o.matroid_path));
  auto axioms = check_matroid_axioms(mat);
  json j{{"class", to_string(mat.class_tag())}, {"rank", mat.rank()}, {"axioms_hold", axioms.ok}};
  if (!axioms.ok) j["axiom_failure"] = axioms.failure;
  try {
    j["base_order"] = io::base_order_to_json(mat.ground(), is_base_orderable(mat));
  } catch (const GroundTooLarge& e) {
    j["base_order"] = {{"skipped", e.what()}};
  }
  out << io::dump(io::versioned(j));
  return axioms.ok ? ok : negative;
}

inline int exchange(const Options& o, std::ostream& out) {
  auto rho = io::oracle_from_json(io::read_file(o.oracle_path));
  auto x = io::load_from_json(rho.ground(), io::read_file(o.x_path));
  require_in_polytope(rho, x, o.params.tol, "x");
  json j;
  std::string graph_dot;
  if (o.y_path.empty()) {
    auto dx = build_directed(rho, x, o.params.tol);
    j["directed_graph"] = io::exchange_graph_to_json(dx);
    graph_dot = dot::exchange_graph(dx);
  } else {
    auto y = io::load_from_json(rho.ground(), io::read_file(o.y_path));
    require_in_polytope(rho, y, o.params.tol, "y");
    auto dx = build_directed(rho, x, o.params.tol);
    auto f = directed_flow(rho, x, y, o.params.tol);
    j["directed_graph"] = io::exchange_graph_to_json(dx);
    j["directed_flow"] = io::flow_to_json(f);
    j["directed_flow"]["bound"] = rho.size() * rho.size() / 4;
    auto b = bidirectional_flow(rho, x, y, o.params.tol);
    j["bidirectional"] = io::bidirectional_to_json(b);
    graph_dot = dot::exchange_graph(b.graph, b.feasible ? &b.flow : nullptr);
    if (!o.dot_path.empty()) write_text(o.dot_path, graph_dot);
    out << io::dump(io::versioned(j));
    return b.feasible ? ok : negative;
  }
  if (!o.dot_path.empty()) write_text(o.dot_path, graph_dot);
  out << io::dump(io::versioned(j));
  return ok;
}

inline int property_bidir(const Options& o, std::ostream& out) {
  auto rho = io::oracle_from_json(io::read_file(o.oracle_path));
  auto seed = effective_seed(o.seed);
  auto rep = probe_bidirectional_property(rho, o.samples, seed, o.params.jobs, o.params.tol);
  auto j = io::probe_report_to_json(rep);
  j["seed"] = seed;
  j["samples"] = o.samples;
  out << io::dump(j);
  return rep.conflicts.empty() ? ok : negative;
}

inline int property_graph(const Options& o, std::ostream& out) {
  auto g = io::graph_from_json(io::read_file(o.graph_path));
  bool unique = graph_uniqueness_property(g);
  out << io::dump(io::versioned({{"uniqueness_property", unique}}));
  return unique ? ok : negative;
}

// ---------------------------------------------------------------------------
// Reproduction targets

inline json verified_profile(const Game& g, const StrategyProfile& x, double tol) {
  auto rep = is_equilibrium(g, x, tol);
  return {{"profile", io::profile_to_json(g, x)}, {"report", io::equilibrium_report_to_json(g, rep)}};
}

inline std::vector<double> aggregate_values(const StrategyProfile& x) { return x.aggregate().values(); }

// Both pure profiles verify at 1e-9 and the solver, started from each,
// stays at two equilibria with different aggregate loads.
inline json two_equilibria_check(const Game& g, const Options& o) {
  constexpr double exact = 1e-9;
  auto direct = all_direct(g), indirect = all_indirect(g);
  auto rd = is_equilibrium(g, direct, exact), ri = is_equilibrium(g, indirect, exact);
  auto params = o.params;
  auto probe = probe_multiplicity(g, {direct, indirect}, params);
  bool passed = rd.is_equilibrium && ri.is_equilibrium && probe.equilibria.size() == 2 &&
                probe.distinct_aggregate == 2 && probe.failures.empty();
  return {{"all_direct", verified_profile(g, direct, exact)},
          {"all_indirect", verified_profile(g, indirect, exact)},
          {"probe", io::multiplicity_to_json(g, probe)},
          {"distinct_equilibria", probe.equilibria.size()},
          {"passed", passed}};
}

inline json reproduce_triangle(const Options& o) {
  auto g = triangle_game();
  auto check = two_equilibria_check(g, o);
  check["expected"] = {{"distinct_equilibria", 2},
                       {"aggregates", {{1.0, 1.0, 1.0}, {2.0, 2.0, 2.0}}},
                       {"max_residual", 1e-9}};
  bool agg_ok = aggregate_values(all_direct(g)) == std::vector<double>{1, 1, 1} &&
                aggregate_values(all_indirect(g)) == std::vector<double>{2, 2, 2};
  check["passed"] = check["passed"].get<bool>() && agg_ok;
  return {{"target", "triangle"}, {"game", io::game_to_json(g)}, {"check", check}};
}

inline json reproduce_cycle(int k, const Options& o) {
  auto g = cycle_game(k);
  MultiGraph cycle;
  for (int v = 1; v <= k; ++v) cycle.vertices.push_back("v" + std::to_string(v));
  for (int v = 1; v <= k; ++v) {
    cycle.edges.push_back({"c" + std::to_string(v), "v" + std::to_string(v), "v" + std::to_string(v % k + 1)});
  }
  auto check = two_equilibria_check(g, o);
  bool prop = graph_uniqueness_property(cycle);
  check["graph_uniqueness_property"] = prop;
  check["expected"] = {{"distinct_equilibria", 2}, {"graph_uniqueness_property", false}};
  check["passed"] = check["passed"].get<bool>() && !prop;
  return {{"target", "cycle:" + std::to_string(k)},
          {"graph", io::graph_to_json(cycle)},
          {"game", io::game_to_json(g)},
          {"check", check}};
}

inline json reproduce_k4(const Options& o) {
  auto pair = k4_conflict_pair();
  const auto& rho = pair.oracle();
  auto b = bidirectional_flow(rho, pair.x, pair.y, o.params.tol);
  auto f = directed_flow(rho, pair.x, pair.y, o.params.tol);
  bool balanced = linf_distance(f.net_outflow(), supplies(pair.x, pair.y)) <= 1e-9;
  bool cut_ok = false;
  if (b.certificate) {
    const auto& c = *b.certificate;
    auto names = [&](const std::vector<std::size_t>& v) {
      std::vector<std::string> out;
      for (auto e : v) out.push_back(rho.ground()[e]);
      return out;
    };
    cut_ok = names(c.supply_nodes) == std::vector<std::string>{"1", "6"} &&
             names(c.demand_nodes) == std::vector<std::string>{"4"};
  }
  bool passed = !b.feasible && cut_ok && balanced;
  json check{{"bidirectional", io::bidirectional_to_json(b)},
             {"directed_flow", io::flow_to_json(f)},
             {"directed_flow_balanced", balanced},
             {"expected",
              {{"verdict", "conflicting strategies"}, {"supply_nodes", {"1", "6"}}, {"demand_nodes", {"4"}}}},
             {"passed", passed}};
  return {{"target", "k4"},
          {"matroid", io::matroid_to_json(pair.matroid)},
          {"x", io::load_to_json(pair.x)},
          {"y", io::load_to_json(pair.y)},
          {"check", check}};
}

inline json reproduce_queueing(const Options& o) {
  auto seed = effective_seed(o.seed);
  // one player splitting over two equal queues
  auto single = queueing_game({2.0, 2.0}, {1.0}, {{0, 1}});
  auto s = find_equilibrium(single, seeded_starts(single, 1, seed).front(), o.params);
  auto loads = s.profile.players[0].load.values();
  bool split_ok = std::abs(loads[0] - 0.5) <= 1e-6 && std::abs(loads[1] - 0.5) <= 1e-6;

  auto shared = queueing_game({3.0, 3.0}, {1.0, 1.0}, {{0, 1}, {0, 1}});
  auto probe = probe_multiplicity(shared, seeded_starts(shared, 10, seed), o.params);
  bool unique = probe.equilibria.size() == 1 && probe.failures.empty();
  json check{{"single_player", verified_profile(single, s.profile, o.params.eq_tol)},
             {"two_players", io::multiplicity_to_json(shared, probe)},
             {"expected", {{"single_player_loads", {0.5, 0.5}}, {"two_players_distinct_equilibria", 1}}},
             {"passed", split_ok && unique}};
  return {{"target", "queueing"}, {"game", io::game_to_json(shared)}, {"check", check}};
}

inline int reproduce(const Options& o, std::ostream& out) {
  json j;
  const std::string& t = o.target;
  if (t == "triangle") {
    j = reproduce_triangle(o);
  } else if (t == "k4") {
    j = reproduce_k4(o);
  } else if (t == "queueing") {
    j = reproduce_queueing(o);
  } else if (t.rfind("cycle:", 0) == 0) {
    int k = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(t.substr(6), &used);
      if (used != t.size() - 6) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw InvalidK("cycle target needs an integer length, got '" + t.substr(6) + "'");
    }
    j = reproduce_cycle(k, o);
  } else {
    throw InvalidSpec("unknown reproduce target '" + t + "' (triangle, k4, cycle:<k>, queueing)");
  }
  out << io::dump(io::versioned(j));
  return j["check"]["passed"].get<bool>() ? ok : negative;
}

}  // namespace detail

// Runs the command line; output JSON goes to `out`, diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options o;
  CLI::App app{"Polymatroid congestion games: equilibria, exchange flows and uniqueness probes", "polygame"};
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "find equilibria from seeded random starts");
  solve->add_option("game", o.game_path, "game JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--starts", o.starts, "number of random starts")->check(CLI::PositiveNumber);
  solve->add_option("--seed", o.seed, "random seed (POLYGAME_SEED overrides)");
  detail::add_solver_flags(solve, o);

  auto* verify = app.add_subcommand("verify", "check a profile against the equilibrium conditions");
  verify->add_option("game", o.game_path, "game JSON")->required()->check(CLI::ExistingFile);
  verify->add_option("profile", o.profile_path, "profile JSON")->required()->check(CLI::ExistingFile);
  verify->add_option("--tol", o.verify_tol, "residual tolerance")->check(CLI::PositiveNumber);

  auto* probe = app.add_subcommand("probe", "count distinct equilibria over random starts");
  probe->add_option("game", o.game_path, "game JSON")->required()->check(CLI::ExistingFile);
  probe->add_option("--starts", o.starts, "number of random starts")->required()->check(CLI::PositiveNumber);
  probe->add_option("--seed", o.seed, "random seed (POLYGAME_SEED overrides)");
  detail::add_solver_flags(probe, o);

  auto* matroid = app.add_subcommand("matroid", "matroid tools");
  matroid->require_subcommand(1);
  auto* check = matroid->add_subcommand("check", "axioms and base orderability");
  check->add_option("matroid", o.matroid_path, "matroid JSON")->required()->check(CLI::ExistingFile);

  auto* exchange = app.add_subcommand("exchange", "exchange graphs and flows between strategies");
  exchange->add_option("oracle", o.oracle_path, "oracle JSON")->required()->check(CLI::ExistingFile);
  exchange->add_option("x", o.x_path, "load vector JSON")->required()->check(CLI::ExistingFile);
  exchange->add_option("y", o.y_path, "second load vector JSON")->check(CLI::ExistingFile);
  exchange->add_option("--dot", o.dot_path, "write the exchange graph in DOT format");

  auto* reproduce = app.add_subcommand("reproduce", "rebuild a reference instance and self-check it");
  reproduce->add_option("target", o.target, "triangle | k4 | cycle:<k> | queueing")->required();
  reproduce->add_option("--seed", o.seed, "random seed (POLYGAME_SEED overrides)");

  auto* property = app.add_subcommand("property", "uniqueness-related properties");
  property->require_subcommand(1);
  auto* bidir = property->add_subcommand("bidir", "probe the bidirectional flow property");
  bidir->add_option("oracle", o.oracle_path, "oracle JSON")->required()->check(CLI::ExistingFile);
  bidir->add_option("--samples", o.samples, "interior pairs to sample");
  bidir->add_option("--seed", o.seed, "random seed (POLYGAME_SEED overrides)");
  bidir->add_option("--jobs", o.params.jobs, "worker threads")->check(CLI::PositiveNumber);
  auto* graph = property->add_subcommand("graph", "uniqueness property of an undirected graph");
  graph->add_option("graph", o.graph_path, "graph JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? ok : input_error;
  }
  try {
    if (solve->parsed()) return detail::solve(o, out, false);
    if (verify->parsed()) return detail::verify(o, out, err);
    if (probe->parsed()) return detail::solve(o, out, true);
    if (check->parsed()) return detail::matroid_check(o, out);
    if (exchange->parsed()) return detail::exchange(o, out);
    if (reproduce->parsed()) return detail::reproduce(o, out);
    if (bidir->parsed()) return detail::property_bidir(o, out);
    if (graph->parsed()) return detail::property_graph(o, out);
  } catch (const NoConvergence& e) {
    err << e.what() << "\n";
    return no_convergence;
  } catch (const error& e) {
    err << e.what() << "\n";
    return input_error;
  } catch (const nlohmann::json::exception& e) {
    err << "InvalidSpec: " << e.what() << "\n";
    return input_error;
  }
  return input_error;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"polygame"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace polygame::cli
