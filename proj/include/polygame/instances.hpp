#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "polygame/cost.hpp"
#include "polygame/error.hpp"
#include "polygame/game.hpp"
#include "polygame/graph.hpp"
#include "polygame/matroid.hpp"

namespace polygame {

using SetFamily = std::vector<std::vector<std::string>>;

inline constexpr double kDefaultM = 100.0;
inline constexpr std::size_t kMaxFamilyGround = 10;

inline CostFunction cubic() { return CostFunction::polynomial({0.0, 0.0, 0.0, 1.0}); }
inline CostFunction plus_one() { return CostFunction::polynomial({1.0, 1.0}); }

// Everyone puts the whole demand on subset choice[i].
inline StrategyProfile pure_profile(const Game& g, const std::vector<std::size_t>& choice) {
  StrategyProfile x;
  for (std::size_t i = 0; i < g.players.size(); ++i) x.players.push_back(pure_set_strategy(g, i, choice.at(i)));
  return x;
}

// Three players on {e,f,g}; player i either takes its own direct resource or
// the two others. Direct resource costs x^3, the others x+1.
inline Game triangle_game() {
  GroundSet ground({"e", "f", "g"});
  Game g{ground, {}};
  const std::string names[3] = {"e", "f", "g"};
  for (int i = 0; i < 3; ++i) {
    std::vector<std::string> indirect;
    std::map<std::string, CostFunction> costs;
    for (int j = 0; j < 3; ++j) {
      if (j != i) indirect.push_back(names[j]);
      costs.emplace(names[j], j == i ? cubic() : plus_one());
    }
    g.players.push_back(set_system_player(ground, std::to_string(i + 1), 1.0, {{names[i]}, indirect}, costs));
  }
  g.validate();
  return g;
}

// Subset 0 is the direct route, subset 1 the indirect one, for every player
// of triangle_game and cycle_game.
inline StrategyProfile all_direct(const Game& g) { return pure_profile(g, std::vector<std::size_t>(g.players.size(), 0)); }
inline StrategyProfile all_indirect(const Game& g) { return pure_profile(g, std::vector<std::size_t>(g.players.size(), 1)); }

// Cycle v1..vk with edges c1 = v1v2, c2 = v2v3 and the remaining path R =
// c3..ck from v3 back to v1. Player 1 travels v1 -> v2, player 2 v2 -> v3,
// player 3 v3 -> v1; each may go either way around. Edges of R share their
// cost with factor 1/(k-2) so that R behaves like a single edge.
inline Game cycle_game(int k, double M = kDefaultM) {
  if (k < 3) throw InvalidK("cycle length must be at least 3, got " + std::to_string(k));
  if (!(M >= kDefaultM)) throw InvalidSpec("M must be at least 100");
  std::vector<std::string> ids;
  for (int j = 1; j <= k; ++j) ids.push_back("c" + std::to_string(j));
  GroundSet ground(ids);
  std::vector<std::string> rest(ids.begin() + 2, ids.end());
  const double s = 1.0 / (k - 2);
  auto scaled_plus_one = CostFunction::affine(s, 1.0);
  auto scaled_cubic = CostFunction::polynomial({0.0, 0.0, 0.0, s});

  auto with_rest = [&](std::vector<std::string> head) {
    head.insert(head.end(), rest.begin(), rest.end());
    return head;
  };
  auto costs_for = [&](const CostFunction& c1, const CostFunction& c2, const CostFunction& r) {
    std::map<std::string, CostFunction> out{{"c1", c1}, {"c2", c2}};
    for (const auto& e : rest) out.emplace(e, r);
    return out;
  };

  Game g{ground, {}};
  g.players.push_back(set_system_player(ground, "1", 1.0, {{"c1"}, with_rest({"c2"})},
                                        costs_for(cubic(), plus_one(), scaled_plus_one)));
  g.players.push_back(set_system_player(ground, "2", 1.0, {{"c2"}, with_rest({"c1"})},
                                        costs_for(plus_one(), cubic(), scaled_plus_one)));
  g.players.push_back(set_system_player(ground, "3", 1.0, {rest, {"c1", "c2"}},
                                        costs_for(plus_one(), plus_one(), scaled_cubic)));
  g.validate();
  return g;
}

// Players route demand d_i over the queues they may use; queue q has mean
// delay 1/(mu_q - x). Each player's space is the base polytope of d_i times
// the rank-1 uniform matroid on its allowed queues. Queues are named q1..qn.
inline Game queueing_game(const std::vector<double>& mus, const std::vector<double>& demands,
                          const std::vector<std::vector<std::size_t>>& allowed) {
  if (mus.empty()) throw InvalidSpec("queueing game needs at least one queue");
  if (demands.size() != allowed.size()) throw InvalidSpec("one allowed set per player is required");
  if (demands.size() > 20) throw InvalidSpec("queueing game supports at most 20 players");
  std::vector<std::string> ids;
  for (std::size_t q = 0; q < mus.size(); ++q) ids.push_back("q" + std::to_string(q + 1));
  GroundSet ground(ids);

  std::vector<Mask> masks;
  for (const auto& a : allowed) {
    Mask u = 0;
    for (auto q : a) {
      if (q >= mus.size()) throw InvalidSpec("allowed queue index out of range");
      u |= bit(q);
    }
    if (u == 0) throw InvalidSpec("every player needs at least one allowed queue");
    masks.push_back(u);
  }
  // Hall-type stability: every group of players fits strictly below the
  // service capacity of the queues it can reach.
  const std::size_t n = demands.size();
  for (Mask t = 1; t < (Mask{1} << n); ++t) {
    double load = 0.0, capacity = 0.0;
    Mask reach = 0;
    for (auto i : members(t)) {
      load += demands[i];
      reach |= masks[i];
    }
    for (auto q : members(reach)) capacity += mus[q];
    if (!(load < capacity)) {
      throw Unstable("players {" + [&] {
        std::string s;
        for (auto i : members(t)) s += (s.empty() ? "" : ",") + std::to_string(i + 1);
        return s;
      }() + "} need " + std::to_string(load) + " but their queues serve " + std::to_string(capacity));
    }
  }

  Game g{ground, {}};
  for (std::size_t i = 0; i < n; ++i) {
    auto names = ground.names(masks[i]);
    std::vector<CappedSet> blocks{{names, 1}};
    if (auto others = ground.names(ground.full() & ~masks[i]); !others.empty()) blocks.push_back({others, 0});
    std::map<std::string, CostFunction> costs;
    for (auto q : members(masks[i])) costs.emplace(ground[q], CostFunction::queue(mus[q]));
    g.players.push_back(matroid_player(std::to_string(i + 1), demands[i], make_partition(ground, blocks), costs));
  }
  g.validate();
  return g;
}

// K4 on A, B, C and centre D with edges 1 = AB, 2 = BC, 3 = CA, 4 = AD,
// 5 = BD, 6 = CD.
inline MultiGraph k4_graph() {
  return {{"A", "B", "C", "D"},
          {{"1", "A", "B"}, {"2", "B", "C"}, {"3", "C", "A"}, {"4", "A", "D"}, {"5", "B", "D"}, {"6", "C", "D"}}};
}

struct ConflictPair {
  Matroid matroid;
  LoadVector x;
  LoadVector y;
  const SubmodularOracle& oracle() const { return matroid.rank_oracle(); }
};

// Spanning trees {1,2,6} and {3,4,5} of K4, which admit no bidirectional flow.
inline ConflictPair k4_conflict_pair() {
  auto mat = make_graphic(k4_graph());
  LoadVector x(mat.ground(), {1, 1, 0, 0, 0, 1});
  LoadVector y(mat.ground(), {0, 0, 1, 1, 1, 0});
  return {std::move(mat), std::move(x), std::move(y)};
}

// ---------------------------------------------------------------------------
// Non-matroid set systems

namespace detail {

struct IndexedFamily {
  GroundSet ground;
  std::vector<Mask> sets;
};

inline IndexedFamily index_family(const SetFamily& family) {
  if (family.empty()) throw InvalidSpec("set family is empty");
  std::set<std::string> all;
  for (const auto& s : family) all.insert(s.begin(), s.end());
  if (all.size() > kMaxFamilyGround) {
    throw GroundTooLarge("set family spans " + std::to_string(all.size()) + " elements, limit is " +
                         std::to_string(kMaxFamilyGround));
  }
  IndexedFamily out{GroundSet(std::vector<std::string>(all.begin(), all.end())), {}};
  for (const auto& s : family) {
    std::set<std::string> uniq(s.begin(), s.end());
    out.sets.push_back(out.ground.mask_of(std::vector<std::string>(uniq.begin(), uniq.end())));
  }
  return out;
}

inline bool is_antichain(const std::vector<Mask>& sets) {
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = 0; j < sets.size(); ++j) {
      if (i != j && (sets[i] & ~sets[j]) == 0) return false;
    }
  }
  return true;
}

}  // namespace detail

inline bool is_matroid_base_family(const SetFamily& family) {
  return is_base_family(detail::index_family(family).sets);
}

struct NonMatroidWitness {
  std::vector<std::string> X;
  std::vector<std::string> Y;
  std::string a, b, c;
  std::size_t x_index = 0;  // positions of X and Y in the input family
  std::size_t y_index = 0;
};

// First (X, Y, a, b, c) in lexicographic order (family positions, then
// element order, b < c) such that every member Z of the family inside X u Y
// contains a or both b and c. The search keeps a in X, which forces
// {b, c} into Y \ X.
inline NonMatroidWitness find_nonmatroid_witness(const SetFamily& family) {
  auto f = detail::index_family(family);
  if (!detail::is_antichain(f.sets)) throw WitnessNotFound("set family is not an anti-chain");
  if (is_base_family(f.sets)) throw WitnessNotFound("set family is the base family of a matroid");
  for (std::size_t xi = 0; xi < f.sets.size(); ++xi) {
    for (std::size_t yi = 0; yi < f.sets.size(); ++yi) {
      if (xi == yi) continue;
      Mask X = f.sets[xi], Y = f.sets[yi];
      std::vector<Mask> inside;
      for (Mask z : f.sets) {
        if ((z & ~(X | Y)) == 0) inside.push_back(z);
      }
      for (auto a : members(X & ~Y)) {
        auto rest = members((X ^ Y) & ~bit(a));
        for (std::size_t bi = 0; bi < rest.size(); ++bi) {
          for (std::size_t ci = bi + 1; ci < rest.size(); ++ci) {
            Mask bc = bit(rest[bi]) | bit(rest[ci]);
            bool ok = std::all_of(inside.begin(), inside.end(),
                                  [&](Mask z) { return contains(z, a) || (z & bc) == bc; });
            if (ok) {
              return {f.ground.names(X), f.ground.names(Y), f.ground[a], f.ground[rest[bi]], f.ground[rest[ci]],
                      xi, yi};
            }
          }
        }
      }
    }
  }
  throw WitnessNotFound("no witness triple exists");
}

struct Embedding {
  std::vector<std::map<std::string, std::string>> tau;  // per player: own element -> shared resource
  std::vector<std::vector<Mask>> images;                // per player: image of every member set
};

struct Counterexample {
  Game game;
  Embedding embedding;
  std::vector<NonMatroidWitness> witnesses;  // players 1..3
  StrategyProfile on_x;  // players 1..3 on their X (carrying the direct resource), others idle
  StrategyProfile on_y;
};

// Embeds three or more non-matroid anti-chains into one ground set so that
// players 1..3 reproduce triangle_game on shared resources e, f, g. Player i's
// a-element is its direct resource; its b and c elements map onto the other
// two. Remaining elements get fresh names "p<i>_<label>"; those inside
// X u Y cost nothing, the rest cost x + M. Players beyond the third have
// demand 0 and zero costs.
inline Counterexample embed_counterexample(const std::vector<SetFamily>& systems, double M = kDefaultM) {
  if (systems.size() < 3) throw InvalidSpec("embedding needs at least three set systems");
  std::vector<NonMatroidWitness> witnesses;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    auto f = detail::index_family(systems[i]);
    if (!detail::is_antichain(f.sets) || is_base_family(f.sets)) {
      throw NotNonMatroid("set system " + std::to_string(i + 1) + " is not a non-matroid anti-chain");
    }
    if (i < 3) witnesses.push_back(find_nonmatroid_witness(systems[i]));
  }

  const std::string shared[3] = {"e", "f", "g"};
  // roles[i] = images of (a, b, c) for player i
  const std::array<std::array<std::string, 3>, 3> roles{{{"e", "f", "g"}, {"f", "e", "g"}, {"g", "f", "e"}}};

  Embedding emb;
  std::set<std::string> resources(std::begin(shared), std::end(shared));
  for (std::size_t i = 0; i < systems.size(); ++i) {
    std::map<std::string, std::string> tau;
    if (i < 3) {
      tau[witnesses[i].a] = roles[i][0];
      tau[witnesses[i].b] = roles[i][1];
      tau[witnesses[i].c] = roles[i][2];
    }
    for (const auto& s : systems[i]) {
      for (const auto& el : s) {
        if (!tau.count(el)) tau[el] = "p" + std::to_string(i + 1) + "_" + el;
      }
    }
    for (const auto& [from, to] : tau) resources.insert(to);
    emb.tau.push_back(std::move(tau));
  }
  GroundSet ground(std::vector<std::string>(resources.begin(), resources.end()));

  Game g{ground, {}};
  for (std::size_t i = 0; i < systems.size(); ++i) {
    const auto& tau = emb.tau[i];
    std::vector<std::vector<std::string>> sets;
    std::vector<Mask> images;
    for (const auto& s : systems[i]) {
      std::set<std::string> img;
      for (const auto& el : s) img.insert(tau.at(el));
      sets.emplace_back(img.begin(), img.end());
      images.push_back(ground.mask_of(sets.back()));
    }
    emb.images.push_back(std::move(images));

    std::map<std::string, CostFunction> costs;
    if (i < 3) {
      const auto& w = witnesses[i];
      std::set<std::string> xy(w.X.begin(), w.X.end());
      xy.insert(w.Y.begin(), w.Y.end());
      for (const auto& [from, to] : tau) {
        if (to == shared[0] || to == shared[1] || to == shared[2]) {
          costs.emplace(to, to == shared[i] ? cubic() : plus_one());
        } else if (xy.count(from)) {
          costs.emplace(to, CostFunction::zero());
        } else {
          costs.emplace(to, CostFunction::polynomial({M, 1.0}));
        }
      }
    } else {
      for (const auto& [from, to] : tau) costs.emplace(to, CostFunction::zero());
    }
    g.players.push_back(set_system_player(ground, std::to_string(i + 1), i < 3 ? 1.0 : 0.0, sets, costs));
  }
  g.validate();

  std::vector<std::size_t> cx(systems.size(), 0), cy(systems.size(), 0);
  for (std::size_t i = 0; i < 3; ++i) {
    cx[i] = witnesses[i].x_index;
    cy[i] = witnesses[i].y_index;
  }
  auto on_x = pure_profile(g, cx);
  auto on_y = pure_profile(g, cy);
  return {std::move(g), std::move(emb), std::move(witnesses), std::move(on_x), std::move(on_y)};
}

// ---------------------------------------------------------------------------
// Routing on undirected graphs

// True iff the graph has no simple cycle through three or more distinct
// vertices, i.e. its simple quotient (loops dropped, parallels merged) is a
// forest.
inline bool graph_uniqueness_property(const MultiGraph& g) {
  g.validate();
  UnionFind uf(g.vertices.size());
  for (auto [a, b] : g.simple_edges()) {
    if (!uf.unite(a, b)) return false;
  }
  return true;
}

struct Commodity {
  std::string id;
  std::string source;
  std::string sink;
  double demand = 1.0;
  std::map<std::string, CostFunction> costs;  // by edge id; every edge on some route needs one
};

// Edge sets of all simple source-sink paths.
inline std::vector<std::vector<std::string>> simple_paths(const MultiGraph& g, const std::string& source,
                                                          const std::string& sink) {
  g.validate();
  const std::size_t s = g.vertex_index(source), t = g.vertex_index(sink);
  if (s == t) throw InvalidSpec("source and sink coincide");
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(g.vertices.size());
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    auto a = g.vertex_index(g.edges[k].u), b = g.vertex_index(g.edges[k].v);
    if (a == b) continue;
    adj[a].push_back({b, k});
    adj[b].push_back({a, k});
  }
  std::vector<std::vector<std::string>> out;
  std::vector<bool> seen(g.vertices.size(), false);
  std::vector<std::string> path;
  auto dfs = [&](auto&& self, std::size_t v) -> void {
    if (v == t) {
      out.push_back(path);
      if (out.size() > kMaxSetSystem) throw InvalidSpec("too many simple paths");
      return;
    }
    seen[v] = true;
    for (auto [w, k] : adj[v]) {
      if (seen[w]) continue;
      path.push_back(g.edges[k].id);
      self(self, w);
      path.pop_back();
    }
    seen[v] = false;
  };
  dfs(dfs, s);
  if (out.empty()) throw InvalidSpec("sink '" + sink + "' is unreachable from '" + source + "'");
  return out;
}

// Splittable routing game on an undirected multigraph; resources are edges.
inline Game routing_game(const MultiGraph& graph, const std::vector<Commodity>& commodities) {
  std::vector<std::string> ids;
  for (const auto& e : graph.edges) ids.push_back(e.id);
  GroundSet ground(ids);
  Game g{ground, {}};
  for (const auto& c : commodities) {
    g.players.push_back(set_system_player(ground, c.id, c.demand, simple_paths(graph, c.source, c.sink), c.costs));
  }
  g.validate();
  return g;
}

}  // namespace polygame
