#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polygame/cost.hpp"
#include "polygame/error.hpp"
#include "polygame/exchange.hpp"
#include "polygame/game.hpp"
#include "polygame/graph.hpp"
#include "polygame/matroid.hpp"
#include "polygame/polymatroid.hpp"
#include "polygame/solver.hpp"

namespace polygame::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Pretty-printed, keys sorted (nlohmann::json objects are ordered maps).
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json versioned(json j) {
  j["schema_version"] = kSchemaVersion;
  return j;
}

inline json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSpec("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidSpec("'" + path + "' is not valid JSON: " + e.what());
  }
}

namespace detail {

inline void check_version(const json& j) {
  if (j.is_object() && j.contains("schema_version") && j.at("schema_version") != kSchemaVersion) {
    throw InvalidSpec("unsupported schema_version " + j.at("schema_version").dump());
  }
}

template <typename T>
T get(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InvalidSpec(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidSpec(std::string("field '") + key + "' has the wrong type: " + e.what());
  }
}

// Borrowed reference, so range-for and stored pointers stay valid.
inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InvalidSpec(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.is_object() && j.contains(key) ? get<T>(j, key) : fallback;
}

inline GroundSet ground_from(const json& j) {
  auto ids = get<std::vector<std::string>>(j, "ground");
  for (const auto& id : ids) {
    if (id.empty() || id.find(',') != std::string::npos) {
      throw InvalidSpec("resource id '" + id + "' must be nonempty and free of commas");
    }
  }
  return GroundSet(ids);
}

inline Mask parse_key(const GroundSet& ground, const std::string& key) {
  Mask u = 0;
  if (key.empty()) return u;
  std::stringstream ss(key);
  std::string id;
  while (std::getline(ss, id, ',')) u |= bit(ground.index_of(id));
  return u;
}

inline std::vector<std::string> names(const GroundSet& g, const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(g[i]);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matroids

inline json capped_to_json(const std::vector<CappedSet>& sets) {
  json out = json::array();
  for (const auto& s : sets) out.push_back({{"elements", s.elements}, {"capacity", s.capacity}});
  return out;
}

inline std::vector<CappedSet> capped_from_json(const json& j) {
  std::vector<CappedSet> out;
  for (const auto& s : j) {
    out.push_back({detail::get<std::vector<std::string>>(s, "elements"), detail::get<int>(s, "capacity")});
  }
  return out;
}

inline json graph_to_json(const MultiGraph& g) {
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({e.id, e.u, e.v});
  return {{"vertices", g.vertices}, {"edges", edges}};
}

inline MultiGraph graph_from_json(const json& j) {
  detail::check_version(j);
  MultiGraph g;
  g.vertices = detail::get<std::vector<std::string>>(j, "vertices");
  for (const auto& e : detail::field(j, "edges")) {
    if (!e.is_array() || e.size() != 3) throw InvalidSpec("graph edges are [id, u, v] triples");
    g.edges.push_back({e[0].get<std::string>(), e[1].get<std::string>(), e[2].get<std::string>()});
  }
  g.validate();
  return g;
}

inline json gammoid_to_json(const GammoidSpec& s) {
  json arcs = json::array();
  for (const auto& [a, b] : s.arcs) arcs.push_back({a, b});
  return {{"vertices", s.vertices}, {"arcs", arcs}, {"targets", s.targets}, {"ground", s.ground}};
}

inline GammoidSpec gammoid_from_json(const json& j) {
  GammoidSpec s;
  s.vertices = detail::get<std::vector<std::string>>(j, "vertices");
  for (const auto& a : detail::field(j, "arcs")) {
    if (!a.is_array() || a.size() != 2) throw InvalidSpec("gammoid arcs are [from, to] pairs");
    s.arcs.emplace_back(a[0].get<std::string>(), a[1].get<std::string>());
  }
  s.targets = detail::get<std::vector<std::string>>(j, "targets");
  s.ground = detail::get<std::vector<std::string>>(j, "ground");
  return s;
}

inline json matroid_to_json(const Matroid& mat) {
  json j{{"class", to_string(mat.class_tag())}, {"ground", mat.ground().elements()}};
  std::visit(
      [&](const auto& def) {
        using T = std::decay_t<decltype(def)>;
        if constexpr (std::is_same_v<T, UniformDef>) {
          j["k"] = def.k;
        } else if constexpr (std::is_same_v<T, PartitionDef>) {
          j["blocks"] = capped_to_json(def.blocks);
        } else if constexpr (std::is_same_v<T, LaminarDef>) {
          j["family"] = capped_to_json(def.family);
        } else if constexpr (std::is_same_v<T, TransversalDef>) {
          j["sets"] = def.sets;
        } else if constexpr (std::is_same_v<T, GraphicDef>) {
          j.update(graph_to_json(def.graph));
          j.erase("ground");
        } else if constexpr (std::is_same_v<T, GammoidDef>) {
          j.update(gammoid_to_json(def.spec));
        } else if constexpr (std::is_same_v<T, ExplicitDef>) {
          j["bases"] = def.bases;
        }
      },
      mat.definition());
  return j;
}

inline Matroid matroid_from_json(const json& j) {
  detail::check_version(j);
  auto cls = detail::get<std::string>(j, "class");
  auto ground = [&]() -> std::optional<GroundSet> {
    if (j.contains("ground")) return detail::ground_from(j);
    return std::nullopt;
  };
  if (cls == "uniform") {
    int k = detail::get<int>(j, "k");
    if (auto g = ground()) return make_uniform(*g, k);
    return make_uniform(detail::get<std::size_t>(j, "m"), k);
  }
  if (cls == "partition") {
    auto blocks = capped_from_json(detail::field(j, "blocks"));
    if (auto g = ground()) return make_partition(*g, std::move(blocks));
    return make_partition(std::move(blocks));
  }
  if (cls == "laminar") {
    auto family = capped_from_json(detail::field(j, "family"));
    if (auto g = ground()) return make_laminar(*g, std::move(family));
    return make_laminar(std::move(family));
  }
  if (cls == "transversal") {
    auto sets = detail::get<std::vector<std::vector<std::string>>>(j, "sets");
    if (auto g = ground()) return make_transversal(*g, std::move(sets));
    return make_transversal(std::move(sets));
  }
  if (cls == "graphic") return make_graphic(graph_from_json(j));
  if (cls == "gammoid") return make_gammoid(gammoid_from_json(j));
  if (cls == "explicit") {
    return make_explicit(detail::ground_from(j), detail::get<std::vector<std::vector<std::string>>>(j, "bases"));
  }
  throw InvalidSpec("unknown matroid class '" + cls + "'");
}

// ---------------------------------------------------------------------------
// Polymatroid oracles

// Either an explicit table {"ground": [...], "values": {"a,b": 2, ...}} with
// every nonempty subset listed (the empty set may be omitted), or
// {"matroid": {...}, "scale": d} for d times a matroid rank.
inline SubmodularOracle oracle_from_json(const json& j) {
  detail::check_version(j);
  if (j.contains("matroid")) {
    auto mat = matroid_from_json(j.at("matroid"));
    double d = detail::get_or<double>(j, "scale", 1.0);
    if (!(d > 0.0)) throw InvalidSpec("oracle scale must be positive");
    return scale_oracle(mat.rank_oracle(), d);
  }
  auto ground = detail::ground_from(j);
  require_ground(ground.size(), kMaxAxiomGround, "explicit oracle table");
  std::vector<double> table(std::size_t{1} << ground.size(), std::numeric_limits<double>::quiet_NaN());
  table[0] = 0.0;
  for (const auto& [key, v] : detail::field(j, "values").items()) {
    if (!v.is_number()) throw InvalidSpec("oracle value for '" + key + "' is not a number");
    table[detail::parse_key(ground, key)] = v.get<double>();
  }
  for (Mask u = 1; u < table.size(); ++u) {
    if (std::isnan(table[u])) throw InvalidSpec("oracle table misses subset {" + ground.key(u) + "}");
  }
  SubmodularOracle rho(ground, [table](Mask u) { return table[u]; });
  auto cert = certify_polymatroid(rho);
  if (!cert) {
    throw InvalidSpec(std::string("oracle is not a polymatroid rank function (") + to_string(cert.kind) +
                      " fails at {" + ground.key(cert.u) + "} / {" + ground.key(cert.v) + "})");
  }
  return rho;
}

inline json oracle_to_json(const SubmodularOracle& rho) {
  require_ground(rho.size(), kMaxAxiomGround, "oracle table export");
  json values = json::object();
  for (Mask u = 1; u <= rho.ground().full(); ++u) values[rho.ground().key(u)] = rho(u);
  return {{"ground", rho.ground().elements()}, {"values", values}};
}

// ---------------------------------------------------------------------------
// Load vectors and costs

inline json load_to_json(const LoadVector& x) {
  json j = json::object();
  for (std::size_t e = 0; e < x.size(); ++e) j[x.ground()[e]] = x[e];
  return j;
}

// Accepts {"a": 1, ...} or {"loads": {...}}; unlisted resources are 0.
inline LoadVector load_from_json(const GroundSet& ground, const json& j) {
  detail::check_version(j);
  const json& m = j.contains("loads") ? j.at("loads") : j;
  LoadVector x(ground);
  for (const auto& [id, v] : m.items()) {
    if (id == "schema_version") continue;
    if (!v.is_number()) throw InvalidSpec("load on '" + id + "' is not a number");
    x[ground.index_of(id)] = v.get<double>();
  }
  return x;
}

inline json cost_to_json(const CostFunction& c) {
  switch (c.form()) {
    case CostFunction::Form::polynomial: return {{"poly", c.coefficients()}};
    case CostFunction::Form::queue: return {{"queue", {{"mu", c.mu()}}}};
    case CostFunction::Form::affine: return {{"affine", {{"c", c.scale()}, {"b", c.offset()}}}};
  }
  return nullptr;
}

inline CostFunction cost_from_json(const json& j) {
  if (j.contains("poly")) return CostFunction::polynomial(detail::get<std::vector<double>>(j, "poly"));
  if (j.contains("queue")) return CostFunction::queue(detail::get<double>(j.at("queue"), "mu"));
  if (j.contains("affine")) {
    const auto& a = j.at("affine");
    return CostFunction::affine(detail::get<double>(a, "c"), detail::get<double>(a, "b"));
  }
  throw InvalidSpec("cost needs one of 'poly', 'queue', 'affine'");
}

// ---------------------------------------------------------------------------
// Games

inline json game_to_json(const Game& g) {
  json players = json::array();
  for (const auto& p : g.players) {
    json costs = json::object();
    for (std::size_t e = 0; e < g.size(); ++e) {
      if (p.costs[e]) costs[g.ground[e]] = cost_to_json(*p.costs[e]);
    }
    json space;
    if (p.is_set_system()) {
      json sets = json::array();
      for (Mask s : p.set_system().sets) sets.push_back(g.ground.names(s));
      space = {{"kind", "set_system"}, {"sets", sets}};
    } else if (const auto& sp = p.polymatroid(); sp.matroid) {
      space = matroid_to_json(*sp.matroid);
      space["kind"] = "matroid";
      space["scale"] = sp.scale;
    } else {
      space = {{"kind", "polymatroid"}, {"oracle", oracle_to_json(sp.oracle)}};
    }
    players.push_back({{"id", p.id}, {"demand", p.demand}, {"space", space}, {"costs", costs}});
  }
  return versioned({{"ground", g.ground.elements()}, {"players", players}});
}

inline Game game_from_json(const json& j) {
  detail::check_version(j);
  Game g{detail::ground_from(j), {}};
  for (const auto& pj : detail::field(j, "players")) {
    auto id = detail::get<std::string>(pj, "id");
    double demand = detail::get<double>(pj, "demand");
    std::map<std::string, CostFunction> costs;
    for (const auto& [e, c] : detail::field(pj, "costs").items()) {
      if (!g.ground.has(e)) throw InvalidSpec("player '" + id + "' has a cost on unknown resource '" + e + "'");
      costs.emplace(e, cost_from_json(c));
    }
    const auto& sj = detail::field(pj, "space");
    auto kind = detail::get<std::string>(sj, "kind");
    if (kind == "set_system") {
      g.players.push_back(set_system_player(g.ground, id, demand,
                                            detail::get<std::vector<std::vector<std::string>>>(sj, "sets"), costs));
    } else if (kind == "matroid") {
      // matroid fields sit in the space object itself, or under "matroid"
      auto mat = matroid_from_json(sj.contains("matroid") ? sj.at("matroid") : sj);
      if (!(mat.ground() == g.ground)) throw InvalidSpec("player '" + id + "' matroid ground differs from the game's");
      double scale = detail::get_or<double>(sj, "scale", demand);
      if (std::abs(scale - demand) > kTol) throw InvalidSpec("player '" + id + "' matroid scale must equal its demand");
      g.players.push_back(matroid_player(id, demand, mat, costs));
    } else if (kind == "polymatroid") {
      auto rho = oracle_from_json(detail::field(sj, "oracle"));
      if (!(rho.ground() == g.ground)) throw InvalidSpec("player '" + id + "' oracle ground differs from the game's");
      if (std::abs(rho.total() - demand) > kTol) throw InvalidSpec("player '" + id + "' demand must equal rho(E)");
      g.players.push_back({id, demand, PolymatroidSpace{rho, std::nullopt, 1.0}, cost_table(g.ground, costs)});
    } else {
      throw InvalidSpec("unknown strategy space kind '" + kind + "'");
    }
  }
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// Profiles

inline json profile_to_json(const Game& g, const StrategyProfile& x) {
  json players = json::array();
  for (std::size_t i = 0; i < g.players.size(); ++i) {
    const auto& p = g.players[i];
    json pj{{"id", p.id}, {"loads", load_to_json(x.players[i].load)}};
    if (p.is_set_system()) {
      json dist = json::object();
      const auto& sets = p.set_system().sets;
      for (std::size_t k = 0; k < sets.size(); ++k) {
        if (x.players[i].distribution[k] != 0.0) dist[g.ground.key(sets[k])] = x.players[i].distribution[k];
      }
      pj["distribution"] = dist;
    }
    players.push_back(pj);
  }
  return versioned({{"players", players}});
}

// Players are matched by id. Set-system players give "distribution" keyed by
// comma-joined subsets (loads are derived); polymatroid players give "loads".
inline StrategyProfile profile_from_json(const Game& g, const json& j) {
  detail::check_version(j);
  std::map<std::string, const json*> by_id;
  for (const auto& pj : detail::field(j, "players")) {
    if (!by_id.emplace(detail::get<std::string>(pj, "id"), &pj).second) {
      throw InvalidSpec("profile lists a player twice");
    }
  }
  if (by_id.size() != g.players.size()) throw InvalidSpec("profile and game have different players");
  StrategyProfile x;
  for (std::size_t i = 0; i < g.players.size(); ++i) {
    const auto& p = g.players[i];
    auto it = by_id.find(p.id);
    if (it == by_id.end()) throw InvalidSpec("profile has no entry for player '" + p.id + "'");
    const json& pj = *it->second;
    if (p.is_set_system()) {
      const auto& sets = p.set_system().sets;
      std::vector<double> dist(sets.size(), 0.0);
      for (const auto& [key, w] : detail::field(pj, "distribution").items()) {
        Mask s = detail::parse_key(g.ground, key);
        auto pos = std::find(sets.begin(), sets.end(), s);
        if (pos == sets.end()) throw InvalidSpec("player '" + p.id + "' has no allowable subset {" + key + "}");
        dist[static_cast<std::size_t>(pos - sets.begin())] += w.get<double>();
      }
      x.players.push_back(set_strategy(g, i, std::move(dist)));
    } else {
      x.players.push_back({load_from_json(g.ground, detail::field(pj, "loads")), {}});
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Reports

inline json equilibrium_report_to_json(const Game& g, const EquilibriumReport& r) {
  json residuals = json::object();
  for (std::size_t i = 0; i < g.players.size(); ++i) residuals[g.players[i].id] = r.residuals[i];
  json j{{"is_equilibrium", r.is_equilibrium},
         {"worst_violation", r.worst_violation},
         {"residuals", residuals},
         {"aggregate", load_to_json(r.aggregate)}};
  if (r.worst) {
    j["worst"] = {{"player", g.players[r.worst->player].id},
                  {"from", r.worst->from},
                  {"to", r.worst->to},
                  {"amount", r.worst->amount}};
  }
  return j;
}

inline json multiplicity_to_json(const Game& g, const MultiplicityReport& r) {
  json eqs = json::array();
  for (const auto& e : r.equilibria) {
    eqs.push_back({{"profile", profile_to_json(g, e.profile)},
                   {"report", equilibrium_report_to_json(g, e.report)},
                   {"starts", e.starts},
                   {"aggregate_class", e.aggregate_class}});
  }
  json failures = json::array();
  for (const auto& f : r.failures) failures.push_back({{"start", f.start}, {"message", f.message}});
  return versioned({{"equilibria", eqs},
                    {"distinct_equilibria", r.equilibria.size()},
                    {"distinct_aggregate", r.distinct_aggregate},
                    {"failures", failures}});
}

inline json exchange_graph_to_json(const ExchangeGraph& gr) {
  json arcs = json::array();
  for (const auto& a : gr.arcs) {
    arcs.push_back({{"from", gr.ground[a.from]}, {"to", gr.ground[a.to]}, {"capacity", a.capacity}});
  }
  return {{"kind", gr.kind == ExchangeKind::directed ? "directed" : "bidirectional"},
          {"nodes", gr.ground.elements()},
          {"arcs", arcs}};
}

inline json flow_to_json(const Flow& f) {
  json arcs = json::array();
  for (const auto& [arc, v] : f.arc_flows) {
    arcs.push_back({{"from", f.ground[arc.first]}, {"to", f.ground[arc.second]}, {"flow", v}});
  }
  json trace = json::array();
  for (const auto& t : f.trace) {
    trace.push_back({{"from", f.ground[t.from]}, {"to", f.ground[t.to]}, {"amount", t.amount}});
  }
  return {{"arcs", arcs}, {"trace", trace}, {"exchanges", f.trace.size()}};
}

inline json cut_to_json(const GroundSet& g, const CutCertificate& c) {
  return {{"cut", detail::names(g, c.cut)},
          {"supply_nodes", detail::names(g, c.supply_nodes)},
          {"demand_nodes", detail::names(g, c.demand_nodes)},
          {"supply_in_cut", c.supply_in_cut},
          {"demand_in_cut", c.demand_in_cut},
          {"capacity_out", c.capacity_out},
          {"shortfall", c.shortfall}};
}

inline json bidirectional_to_json(const BidirectionalResult& r) {
  json j{{"feasible", r.feasible}, {"graph", exchange_graph_to_json(r.graph)}};
  if (r.feasible) j["flow"] = flow_to_json(r.flow);
  if (r.certificate) {
    j["certificate"] = cut_to_json(r.graph.ground, *r.certificate);
    j["verdict"] = "conflicting strategies";
  }
  return j;
}

inline json probe_report_to_json(const BidirectionalProbeReport& r) {
  json conflicts = json::array();
  for (const auto& c : r.conflicts) {
    conflicts.push_back({{"x", load_to_json(c.x)},
                         {"y", load_to_json(c.y)},
                         {"at_vertices", c.at_vertices},
                         {"certificate", cut_to_json(c.x.ground(), c.certificate)}});
  }
  return versioned({{"vertex_count", r.vertex_count},
                    {"pairs_tested", r.pairs_tested},
                    {"conflicts", conflicts},
                    {"bidirectional", r.conflicts.empty()}});
}

inline json base_order_to_json(const GroundSet& g, const BaseOrderCertificate& c) {
  json j{{"base_orderable", c.ok}, {"base_count", c.base_count}};
  if (!c.ok) {
    j["failing_pair"] = {g.names(c.fail_from), g.names(c.fail_to)};
    return j;
  }
  json bij = json::array();
  for (const auto& b : c.bijections) {
    json map = json::object();
    for (auto [e, f] : b.pairs) map[g[e]] = g[f];
    bij.push_back({{"from", g.names(b.from)}, {"to", g.names(b.to)}, {"map", map}});
  }
  j["bijections"] = bij;
  return j;
}

}  // namespace polygame::io
