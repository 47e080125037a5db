#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "polygame/error.hpp"
#include "polygame/flow.hpp"
#include "polygame/graph.hpp"
#include "polygame/ground_set.hpp"
#include "polygame/polymatroid.hpp"

namespace polygame {

enum class MatroidClass { uniform, partition, laminar, transversal, graphic, gammoid, explicit_bases };

inline const char* to_string(MatroidClass c) {
  switch (c) {
    case MatroidClass::uniform: return "uniform";
    case MatroidClass::partition: return "partition";
    case MatroidClass::laminar: return "laminar";
    case MatroidClass::transversal: return "transversal";
    case MatroidClass::graphic: return "graphic";
    case MatroidClass::gammoid: return "gammoid";
    case MatroidClass::explicit_bases: return "explicit";
  }
  return "?";
}

// A subset with an upper bound on how many of its elements may be chosen.
struct CappedSet {
  std::vector<std::string> elements;
  int capacity = 0;
};

// Directed graph whose vertex subset `ground` forms the matroid; X is
// independent iff X can be linked into `targets` by vertex-disjoint directed
// paths starting in X.
struct GammoidSpec {
  std::vector<std::string> vertices;
  std::vector<std::pair<std::string, std::string>> arcs;
  std::vector<std::string> targets;
  std::vector<std::string> ground;
};

struct UniformDef { int k = 0; };
struct PartitionDef { std::vector<CappedSet> blocks; };
struct LaminarDef { std::vector<CappedSet> family; };
struct TransversalDef { std::vector<std::vector<std::string>> sets; };
struct GraphicDef { MultiGraph graph; };
struct GammoidDef { GammoidSpec spec; };
struct ExplicitDef { std::vector<std::vector<std::string>> bases; };

using MatroidDefinition = std::variant<UniformDef, PartitionDef, LaminarDef, TransversalDef,
                                       GraphicDef, GammoidDef, ExplicitDef>;

// Immutable matroid given by its rank oracle. The constructing data is kept
// for serialization.
class Matroid {
 public:
  using RankFn = std::function<int(Mask)>;

  Matroid(GroundSet ground, MatroidClass tag, const RankFn& rank, MatroidDefinition def)
      : tag_(tag),
        def_(std::move(def)),
        oracle_(std::move(ground), [rank](Mask u) { return static_cast<double>(rank(u)); }) {}

  const GroundSet& ground() const { return oracle_.ground(); }
  std::size_t size() const { return oracle_.size(); }
  MatroidClass class_tag() const { return tag_; }
  const MatroidDefinition& definition() const { return def_; }

  int rank(Mask u) const { return static_cast<int>(oracle_(u)); }
  int rank() const { return static_cast<int>(oracle_.total()); }
  bool is_independent(Mask u) const { return rank(u) == popcount(u); }
  bool is_base(Mask u) const { return popcount(u) == rank() && is_independent(u); }

  // Rank function as a polymatroid oracle (memoized, shared).
  const SubmodularOracle& rank_oracle() const { return oracle_; }

 private:
  MatroidClass tag_;
  MatroidDefinition def_;
  SubmodularOracle oracle_;
};

namespace detail {

inline GroundSet union_ground(const std::vector<std::vector<std::string>>& sets) {
  std::set<std::string> all;
  for (const auto& s : sets) all.insert(s.begin(), s.end());
  return GroundSet(std::vector<std::string>(all.begin(), all.end()));
}

inline std::vector<std::vector<std::string>> elements_of(const std::vector<CappedSet>& sets) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : sets) out.push_back(s.elements);
  return out;
}

inline Mask mask_checked(const GroundSet& ground, const std::vector<std::string>& ids) {
  Mask m = 0;
  for (const auto& id : ids) {
    if (!ground.has(id)) throw InvalidSpec("element '" + id + "' is not in the ground set");
    if (contains(m, ground.index_of(id))) throw InvalidSpec("element '" + id + "' listed twice");
    m |= bit(ground.index_of(id));
  }
  return m;
}

struct LaminarNode {
  Mask set = 0;
  int capacity = 0;
  std::vector<std::size_t> children;
  Mask covered_by_children = 0;
};

// Laminar forest; duplicates merged with the smaller capacity. Nodes are
// sorted by increasing size, so children precede parents.
struct LaminarForest {
  std::vector<LaminarNode> nodes;
  std::vector<std::size_t> roots;
  std::vector<std::optional<std::size_t>> parent;
};

inline LaminarForest build_laminar(const GroundSet& ground, const std::vector<CappedSet>& family) {
  std::map<Mask, int> merged;
  for (const auto& s : family) {
    if (s.capacity < 0) throw InvalidSpec("negative capacity in laminar family");
    Mask m = mask_checked(ground, s.elements);
    auto [it, fresh] = merged.emplace(m, s.capacity);
    if (!fresh) it->second = std::min(it->second, s.capacity);
  }
  LaminarForest f;
  for (auto [m, k] : merged) f.nodes.push_back({m, k, {}, 0});
  std::stable_sort(f.nodes.begin(), f.nodes.end(), [](const LaminarNode& a, const LaminarNode& b) {
    return popcount(a.set) < popcount(b.set);
  });
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < f.nodes.size(); ++j) {
      Mask a = f.nodes[i].set, b = f.nodes[j].set;
      Mask both = a & b;
      if (both != 0 && both != a && both != b) {
        throw NotLaminar("sets {" + ground.key(a) + "} and {" + ground.key(b) +
                         "} overlap without nesting");
      }
    }
  }
  f.parent.assign(f.nodes.size(), std::nullopt);
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < f.nodes.size(); ++j) {
      if ((f.nodes[i].set & f.nodes[j].set) == f.nodes[i].set) {
        f.parent[i] = j;
        f.nodes[j].children.push_back(i);
        f.nodes[j].covered_by_children |= f.nodes[i].set;
        break;
      }
    }
    if (!f.parent[i]) f.roots.push_back(i);
  }
  return f;
}

inline int laminar_rank(const LaminarForest& f, Mask u) {
  std::vector<int> r(f.nodes.size(), 0);
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    const auto& n = f.nodes[i];
    int inner = popcount(u & n.set & ~n.covered_by_children);
    for (auto c : n.children) inner += r[c];
    r[i] = std::min(n.capacity, inner);
  }
  Mask covered = 0;
  int total = 0;
  for (auto root : f.roots) {
    covered |= f.nodes[root].set;
    total += r[root];
  }
  return total + popcount(u & ~covered);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Constructors

inline Matroid make_uniform(const GroundSet& ground, int k) {
  if (k < 0) throw InvalidSpec("uniform matroid needs k >= 0");
  return Matroid(ground, MatroidClass::uniform,
                 [k](Mask u) { return std::min(popcount(u), k); }, UniformDef{k});
}

inline Matroid make_uniform(std::size_t m, int k) { return make_uniform(GroundSet::letters(m), k); }

// Elements outside every block are unconstrained.
inline Matroid make_partition(const GroundSet& ground, std::vector<CappedSet> blocks) {
  std::vector<std::pair<Mask, int>> parts;
  Mask seen = 0;
  for (const auto& b : blocks) {
    if (b.capacity < 0) throw InvalidSpec("negative block capacity");
    Mask m = detail::mask_checked(ground, b.elements);
    if (m & seen) throw InvalidSpec("partition blocks must be disjoint");
    seen |= m;
    parts.emplace_back(m, b.capacity);
  }
  return Matroid(
      ground, MatroidClass::partition,
      [parts, seen](Mask u) {
        int r = popcount(u & ~seen);
        for (auto [m, k] : parts) r += std::min(popcount(u & m), k);
        return r;
      },
      PartitionDef{std::move(blocks)});
}

inline Matroid make_partition(std::vector<CappedSet> blocks) {
  auto ground = detail::union_ground(detail::elements_of(blocks));
  return make_partition(ground, std::move(blocks));
}

// Independent sets: |I & X| <= k_X for every X in the family.
inline Matroid make_laminar(const GroundSet& ground, std::vector<CappedSet> family) {
  auto forest = detail::build_laminar(ground, family);
  return Matroid(
      ground, MatroidClass::laminar,
      [forest = std::move(forest)](Mask u) { return detail::laminar_rank(forest, u); },
      LaminarDef{std::move(family)});
}

inline Matroid make_laminar(std::vector<CappedSet> family) {
  auto ground = detail::union_ground(detail::elements_of(family));
  return make_laminar(ground, std::move(family));
}

// Partial transversals of the given family; rank is a maximum matching.
inline Matroid make_transversal(const GroundSet& ground, std::vector<std::vector<std::string>> sets) {
  std::vector<Mask> masks;
  for (const auto& s : sets) masks.push_back(detail::mask_checked(ground, s));
  const std::size_t m = ground.size();
  return Matroid(
      ground, MatroidClass::transversal,
      [masks, m](Mask u) {
        std::vector<std::vector<int>> adj;
        for (std::size_t e = 0; e < m; ++e) {
          if (!contains(u, e)) continue;
          auto& row = adj.emplace_back();
          for (std::size_t j = 0; j < masks.size(); ++j) {
            if (contains(masks[j], e)) row.push_back(static_cast<int>(j));
          }
        }
        return static_cast<int>(matching_size(max_bipartite_matching(adj, masks.size())));
      },
      TransversalDef{std::move(sets)});
}

inline Matroid make_transversal(std::vector<std::vector<std::string>> sets) {
  auto ground = detail::union_ground(sets);
  return make_transversal(ground, std::move(sets));
}

inline Matroid make_graphic(const MultiGraph& g) {
  g.validate();
  std::vector<std::string> ids;
  for (const auto& e : g.edges) ids.push_back(e.id);
  GroundSet ground(ids);
  std::vector<std::pair<std::size_t, std::size_t>> ends(ground.size());
  for (const auto& e : g.edges) ends[ground.index_of(e.id)] = {g.vertex_index(e.u), g.vertex_index(e.v)};
  const std::size_t nv = g.vertices.size();
  return Matroid(
      ground, MatroidClass::graphic,
      [ends, nv](Mask u) {
        UnionFind uf(nv);
        int r = 0;
        for (auto e : members(u)) r += uf.unite(ends[e].first, ends[e].second) ? 1 : 0;
        return r;
      },
      GraphicDef{g});
}

inline Matroid make_gammoid(const GammoidSpec& spec) {
  std::map<std::string, std::size_t> index;
  for (const auto& v : spec.vertices) {
    if (!index.emplace(v, index.size()).second) throw InvalidSpec("duplicate gammoid vertex '" + v + "'");
  }
  auto at = [&](const std::string& v) {
    auto it = index.find(v);
    if (it == index.end()) throw InvalidSpec("unknown gammoid vertex '" + v + "'");
    return it->second;
  };
  std::vector<std::pair<std::size_t, std::size_t>> arcs;
  for (const auto& [a, b] : spec.arcs) arcs.emplace_back(at(a), at(b));
  std::vector<std::size_t> targets;
  for (const auto& t : spec.targets) targets.push_back(at(t));
  GroundSet ground(spec.ground);
  std::vector<std::size_t> element_vertex(ground.size());
  for (std::size_t e = 0; e < ground.size(); ++e) element_vertex[e] = at(ground[e]);
  const std::size_t nv = spec.vertices.size();

  return Matroid(
      ground, MatroidClass::gammoid,
      [arcs, targets, element_vertex, nv](Mask u) {
        // vertex v splits into in = 2v, out = 2v+1 with unit capacity
        MaxFlow net(2 * nv + 2);
        const std::size_t s = 2 * nv, t = 2 * nv + 1;
        for (std::size_t v = 0; v < nv; ++v) net.add_arc(2 * v, 2 * v + 1, 1);
        for (auto [a, b] : arcs) net.add_arc(2 * a + 1, 2 * b, 1);
        for (auto tv : targets) net.add_arc(2 * tv + 1, t, 1);
        for (auto e : members(u)) net.add_arc(s, 2 * element_vertex[e], 1);
        return static_cast<int>(net.run(s, t));
      },
      GammoidDef{spec});
}

// Exchange axiom on an explicit family of bases (equicardinal, and for all
// B, B' and e in B \ B' some f in B' \ B has B - e + f in the family).
inline bool is_base_family(const std::vector<Mask>& family) {
  if (family.empty()) return false;
  std::unordered_set<Mask> set(family.begin(), family.end());
  int r = popcount(family.front());
  for (Mask b : family) {
    if (popcount(b) != r) return false;
  }
  for (Mask b : set) {
    for (Mask bp : set) {
      for (auto e : members(b & ~bp)) {
        bool found = false;
        for (auto f : members(bp & ~b)) {
          if (set.count((b & ~bit(e)) | bit(f))) {
            found = true;
            break;
          }
        }
        if (!found) return false;
      }
    }
  }
  return true;
}

inline Matroid make_explicit(const GroundSet& ground, std::vector<std::vector<std::string>> bases) {
  std::vector<Mask> masks;
  for (const auto& b : bases) masks.push_back(detail::mask_checked(ground, b));
  if (!is_base_family(masks)) throw InvalidSpec("explicit base family violates the base exchange axiom");
  return Matroid(
      ground, MatroidClass::explicit_bases,
      [masks](Mask u) {
        int r = 0;
        for (Mask b : masks) r = std::max(r, popcount(u & b));
        return r;
      },
      ExplicitDef{std::move(bases)});
}

// ---------------------------------------------------------------------------
// Axioms, bases, base orderability

inline constexpr std::size_t kMaxBaseEnumGround = 14;
inline constexpr std::size_t kMaxOrderableGround = 12;
inline constexpr std::size_t kMaxOrderableBases = 200;

struct MatroidAxiomReport {
  bool ok = true;
  std::string failure;
  Mask u = 0;
  Mask v = 0;
};

inline MatroidAxiomReport check_matroid_axioms(const Matroid& mat) {
  const std::size_t m = mat.size();
  require_ground(m, kMaxBaseEnumGround, "check_matroid_axioms");
  const Mask n = Mask{1} << m;
  if (mat.rank(0) != 0) return {false, "rank(empty) != 0", 0, 0};
  for (Mask u = 0; u < n; ++u) {
    if (mat.rank(u) > popcount(u) || mat.rank(u) < 0) return {false, "rank(U) outside [0, |U|]", u, u};
    for (std::size_t e = 0; e < m; ++e) {
      if (contains(u, e)) continue;
      int d = mat.rank(u | bit(e)) - mat.rank(u);
      if (d < 0 || d > 1) return {false, "rank not unit-increasing", u, u | bit(e)};
    }
  }
  auto cert = certify_polymatroid(mat.rank_oracle());
  if (!cert.ok) return {false, std::string("rank not ") + to_string(cert.kind), cert.u, cert.v};
  return {};
}

// Bases sorted lexicographically by their sorted element lists.
inline std::vector<Mask> enumerate_bases(const Matroid& mat) {
  const std::size_t m = mat.size();
  require_ground(m, kMaxBaseEnumGround, "enumerate_bases");
  const int r = mat.rank();
  std::vector<Mask> out;
  for (Mask u = 0; u < (Mask{1} << m); ++u) {
    if (popcount(u) == r && mat.rank(u) == r) out.push_back(u);
  }
  std::sort(out.begin(), out.end(), [](Mask a, Mask b) { return members(a) < members(b); });
  return out;
}

struct BaseBijection {
  Mask from = 0;
  Mask to = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // e -> g(e)
};

struct BaseOrderCertificate {
  bool ok = true;
  std::vector<BaseBijection> bijections;  // one per ordered pair when ok
  Mask fail_from = 0;
  Mask fail_to = 0;
  std::size_t base_count = 0;
  explicit operator bool() const { return ok; }
};

// For every ordered base pair (B, B') look for a bijection g: B -> B' fixing
// B & B' with B - e + g(e) and B' - g(e) + e both bases; existence is a
// perfect-matching question on the allowed swaps.
inline BaseOrderCertificate is_base_orderable(const Matroid& mat, bool keep_bijections = true) {
  require_ground(mat.size(), kMaxOrderableGround, "is_base_orderable");
  auto bases = enumerate_bases(mat);
  if (bases.size() > kMaxOrderableBases) {
    throw GroundTooLarge("matroid has " + std::to_string(bases.size()) + " bases, at most " +
                         std::to_string(kMaxOrderableBases) + " supported");
  }
  std::unordered_set<Mask> is_base(bases.begin(), bases.end());
  BaseOrderCertificate cert;
  cert.base_count = bases.size();
  for (Mask b : bases) {
    for (Mask bp : bases) {
      auto left = members(b & ~bp);
      auto right = members(bp & ~b);
      std::vector<std::vector<int>> adj(left.size());
      for (std::size_t i = 0; i < left.size(); ++i) {
        for (std::size_t j = 0; j < right.size(); ++j) {
          Mask b1 = (b & ~bit(left[i])) | bit(right[j]);
          Mask b2 = (bp & ~bit(right[j])) | bit(left[i]);
          if (is_base.count(b1) && is_base.count(b2)) adj[i].push_back(static_cast<int>(j));
        }
      }
      auto match = max_bipartite_matching(adj, right.size());
      if (matching_size(match) != left.size()) {
        cert.ok = false;
        cert.fail_from = b;
        cert.fail_to = bp;
        cert.bijections.clear();
        return cert;
      }
      if (keep_bijections) {
        BaseBijection bij{b, bp, {}};
        for (auto e : members(b & bp)) bij.pairs.emplace_back(e, e);
        for (std::size_t i = 0; i < left.size(); ++i) bij.pairs.emplace_back(left[i], right[match[i]]);
        std::sort(bij.pairs.begin(), bij.pairs.end());
        cert.bijections.push_back(std::move(bij));
      }
    }
  }
  return cert;
}

// ---------------------------------------------------------------------------
// Laminar -> gammoid

// Each family set X becomes min(k_X, |X|) copy vertices. Elements point to
// the copies of the smallest set containing them and every copy points to
// the copies of its parent set, so a path from an element passes through a
// copy of every set containing it; the copies of the ground set are the
// targets. Linking into them is then limited by k_X at every X.
inline GammoidSpec laminar_to_gammoid(const GroundSet& ground, std::vector<CappedSet> family) {
  if (std::none_of(family.begin(), family.end(), [&](const CappedSet& s) {
        return detail::mask_checked(ground, s.elements) == ground.full();
      })) {
    family.push_back({ground.elements(), static_cast<int>(ground.size())});
  }
  auto forest = detail::build_laminar(ground, family);
  GammoidSpec spec;
  spec.ground = ground.elements();
  spec.vertices = ground.elements();
  std::vector<std::vector<std::string>> copies(forest.nodes.size());
  for (std::size_t i = 0; i < forest.nodes.size(); ++i) {
    const auto& n = forest.nodes[i];
    int k = std::min(n.capacity, popcount(n.set));
    for (int j = 1; j <= k; ++j) {
      copies[i].push_back("#{" + ground.key(n.set) + "}:" + std::to_string(j));
      spec.vertices.push_back(copies[i].back());
    }
  }
  for (std::size_t i = 0; i < forest.nodes.size(); ++i) {
    if (auto p = forest.parent[i]) {
      for (const auto& a : copies[i]) {
        for (const auto& b : copies[*p]) spec.arcs.emplace_back(a, b);
      }
    }
  }
  for (std::size_t e = 0; e < ground.size(); ++e) {
    for (std::size_t i = 0; i < forest.nodes.size(); ++i) {
      if (!contains(forest.nodes[i].set, e)) continue;
      for (const auto& c : copies[i]) spec.arcs.emplace_back(ground[e], c);
      break;  // nodes are size-sorted: first hit is the smallest set
    }
  }
  for (std::size_t i = 0; i < forest.nodes.size(); ++i) {
    if (forest.nodes[i].set == ground.full()) spec.targets = copies[i];
  }
  return spec;
}

}  // namespace polygame
