#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "polygame/error.hpp"

namespace polygame {

// Undirected multigraph; parallel edges and loops allowed, edge ids unique.
struct MultiGraph {
  struct Edge {
    std::string id;
    std::string u;
    std::string v;
  };
  std::vector<std::string> vertices;
  std::vector<Edge> edges;

  void validate() const {
    std::set<std::string> vs(vertices.begin(), vertices.end());
    if (vs.size() != vertices.size()) throw InvalidSpec("duplicate vertex in graph");
    std::set<std::string> ids;
    for (const auto& e : edges) {
      if (!ids.insert(e.id).second) throw InvalidSpec("duplicate edge id '" + e.id + "'");
      if (!vs.count(e.u) || !vs.count(e.v)) {
        throw InvalidSpec("edge '" + e.id + "' has an undeclared endpoint");
      }
    }
  }

  std::size_t vertex_index(const std::string& v) const {
    auto it = std::find(vertices.begin(), vertices.end(), v);
    if (it == vertices.end()) throw InvalidSpec("unknown vertex '" + v + "'");
    return static_cast<std::size_t>(it - vertices.begin());
  }

  // Edge list of the simple quotient graph: loops dropped, parallels merged.
  std::set<std::pair<std::size_t, std::size_t>> simple_edges() const {
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (const auto& e : edges) {
      auto a = vertex_index(e.u), b = vertex_index(e.v);
      if (a == b) continue;
      out.insert({std::min(a, b), std::max(a, b)});
    }
    return out;
  }
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[a] = b;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

inline constexpr std::size_t kMaxMinorVertices = 12;
inline constexpr std::size_t kMaxMinorEdges = 30;

// K4-minor test by contraction/deletion of low-degree vertices on the simple
// quotient: a vertex of degree <= 1 is deleted, one of degree 2 is
// contracted into a neighbour (series reduction). The graph is K4-minor-free
// exactly when this empties it; any remaining core has minimum degree 3 and
// therefore contains a K4 minor.
inline bool has_k4_minor(const MultiGraph& g) {
  g.validate();
  if (g.vertices.size() > kMaxMinorVertices || g.edges.size() > kMaxMinorEdges) {
    throw GraphTooLarge("K4-minor search supports at most " + std::to_string(kMaxMinorVertices) +
                        " vertices and " + std::to_string(kMaxMinorEdges) + " edges");
  }
  std::vector<std::set<std::size_t>> adj(g.vertices.size());
  for (auto [a, b] : g.simple_edges()) {
    adj[a].insert(b);
    adj[b].insert(a);
  }
  std::vector<bool> alive(adj.size(), true);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t v = 0; v < adj.size(); ++v) {
      if (!alive[v] || adj[v].size() > 2) continue;
      std::vector<std::size_t> nb(adj[v].begin(), adj[v].end());
      for (auto u : nb) adj[u].erase(v);
      if (nb.size() == 2) {
        adj[nb[0]].insert(nb[1]);
        adj[nb[1]].insert(nb[0]);
      }
      adj[v].clear();
      alive[v] = false;
      changed = true;
    }
  }
  return std::any_of(alive.begin(), alive.end(), [](bool a) { return a; });
}

inline bool is_gsp(const MultiGraph& g) { return !has_k4_minor(g); }

}  // namespace polygame
