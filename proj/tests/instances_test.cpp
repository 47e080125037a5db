#include <gtest/gtest.h>

#include <random>
#include <set>

#include "polygame/instances.hpp"
#include "polygame/solver.hpp"
#include "support/oracles.hpp"
#include "support/random_instances.hpp"

using namespace polygame;
using namespace testing_support;

namespace {

using Family_ = std::vector<std::set<std::string>>;

Family_ as_sets(const SetFamily& f) {
  Family_ out;
  for (const auto& s : f) out.emplace_back(s.begin(), s.end());
  return out;
}

// Equicardinality plus the base-exchange axiom, checked element by element.
bool brute_base_family(const SetFamily& family) {
  auto f = as_sets(family);
  std::set<std::set<std::string>> members(f.begin(), f.end());
  for (const auto& b : f) {
    if (b.size() != f.front().size()) return false;
    for (const auto& bp : f) {
      for (const auto& e : b) {
        if (bp.count(e)) continue;
        bool found = false;
        for (const auto& x : bp) {
          if (b.count(x)) continue;
          auto swapped = b;
          swapped.erase(e);
          swapped.insert(x);
          found = found || members.count(swapped);
        }
        if (!found) return false;
      }
    }
  }
  return true;
}

bool witness_condition_holds(const SetFamily& family, const NonMatroidWitness& w) {
  std::set<std::string> X(w.X.begin(), w.X.end()), Y(w.Y.begin(), w.Y.end()), XY = X;
  XY.insert(Y.begin(), Y.end());
  std::set<std::string> sym;
  for (const auto& e : XY) {
    if (X.count(e) != Y.count(e)) sym.insert(e);
  }
  if (!sym.count(w.a) || !sym.count(w.b) || !sym.count(w.c)) return false;
  if (w.a == w.b || w.a == w.c || w.b == w.c) return false;
  auto fam = as_sets(family);
  if (std::find(fam.begin(), fam.end(), X) == fam.end() || std::find(fam.begin(), fam.end(), Y) == fam.end()) {
    return false;
  }
  for (const auto& z : fam) {
    if (!std::includes(XY.begin(), XY.end(), z.begin(), z.end())) continue;
    if (!z.count(w.a) && !(z.count(w.b) && z.count(w.c))) return false;
  }
  return true;
}

// All nonempty anti-chains of nonempty subsets of {a, b, ..} with n
// elements, as lists of masks.
std::vector<std::vector<Mask>> all_antichains(std::size_t n) {
  std::vector<std::vector<Mask>> out;
  std::vector<Mask> cur;
  const Mask top = Mask{1} << n;
  auto go = [&](auto&& self, Mask next) -> void {
    if (!cur.empty()) out.push_back(cur);
    for (Mask s = next; s < top; ++s) {
      bool ok = std::all_of(cur.begin(), cur.end(), [&](Mask c) { return (c & ~s) != 0 && (s & ~c) != 0; });
      if (!ok) continue;
      cur.push_back(s);
      self(self, s + 1);
      cur.pop_back();
    }
  };
  go(go, 1);
  return out;
}

SetFamily to_family(const std::vector<Mask>& sets, std::size_t n) {
  auto g = GroundSet::letters(n);
  SetFamily f;
  for (Mask s : sets) f.push_back(g.names(s));
  return f;
}

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(TriangleGame, Structure) {
  auto g = triangle_game();
  ASSERT_EQ(g.players.size(), 3u);
  EXPECT_EQ(g.ground.elements(), (std::vector<std::string>{"e", "f", "g"}));
  const auto& sets = g.players[1].set_system().sets;
  EXPECT_EQ(g.ground.key(sets[0]), "f");
  EXPECT_EQ(g.ground.key(sets[1]), "e,g");
  EXPECT_DOUBLE_EQ(g.players[0].cost(0).value(2.0), 8.0);
  EXPECT_DOUBLE_EQ(g.players[0].cost(1).value(2.0), 3.0);
}

TEST(TriangleGame, BothPureProfilesAreEquilibriaWithDistinctAggregates) {
  auto g = triangle_game();
  EXPECT_TRUE(is_equilibrium(g, all_direct(g), 1e-9).is_equilibrium);
  EXPECT_TRUE(is_equilibrium(g, all_indirect(g), 1e-9).is_equilibrium);
  auto rep = probe_multiplicity(g, {all_direct(g), all_indirect(g)});
  ASSERT_EQ(rep.equilibria.size(), 2u);
  EXPECT_EQ(rep.distinct_aggregate, 2u);
}

TEST(CycleGame, LengthThreeMatchesTriangle) {
  auto tri = triangle_game();
  auto cyc = cycle_game(3);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 30; ++t) {
    StrategyProfile a, b;
    for (std::size_t i = 0; i < 3; ++i) {
      double w = t < 2 ? double(t) : uniform_real(rng, 0, 1);
      a.players.push_back(set_strategy(tri, i, {1 - w, w}));
      b.players.push_back(set_strategy(cyc, i, {1 - w, w}));
    }
    auto ra = is_equilibrium(tri, a), rb = is_equilibrium(cyc, b);
    EXPECT_EQ(ra.is_equilibrium, rb.is_equilibrium);
    EXPECT_NEAR(ra.worst_violation, rb.worst_violation, 1e-9);
  }
}

// Hand evaluation of route marginal sums at loads 1 (all direct) and 2
// (all indirect); every player is exactly indifferent.
TEST(CycleGame, BothOrientationsAreEquilibria) {
  for (int k : {4, 5, 7}) {
    auto g = cycle_game(k);
    const double s = 1.0 / (k - 2);
    auto d = all_direct(g);
    auto ind = all_indirect(g);
    // player 1 direct: 1 + 3 ; indirect: (1 + 1) + (k-2) * s * (1 + 1)
    double direct_route = 0.0, other_route = 0.0;
    for (auto e : members(g.players[0].set_system().sets[0])) direct_route += marginal_cost(g, d, 0, e);
    for (auto e : members(g.players[0].set_system().sets[1])) other_route += marginal_cost(g, d, 0, e);
    EXPECT_NEAR(direct_route, 4.0, 1e-12);
    EXPECT_NEAR(other_route, 2.0 + (k - 2) * s * 2.0, 1e-12);
    // player 3 indirect at load 2: (3 + 1) * 2 ; direct: (k-2) * s * (8 + 12)
    double p3_direct = 0.0, p3_other = 0.0;
    for (auto e : members(g.players[2].set_system().sets[0])) p3_direct += marginal_cost(g, ind, 2, e);
    for (auto e : members(g.players[2].set_system().sets[1])) p3_other += marginal_cost(g, ind, 2, e);
    EXPECT_NEAR(p3_other, 8.0, 1e-12);
    EXPECT_NEAR(p3_direct, 8.0, 1e-12);
    EXPECT_TRUE(is_equilibrium(g, d, 1e-9).is_equilibrium) << "k=" << k;
    EXPECT_TRUE(is_equilibrium(g, ind, 1e-9).is_equilibrium) << "k=" << k;
  }
}

TEST(CycleGame, RejectsShortCyclesAndSmallM) {
  EXPECT_THROW(cycle_game(2), InvalidK);
  EXPECT_THROW(cycle_game(4, 50.0), InvalidSpec);
  EXPECT_NO_THROW(cycle_game(4, 1000.0));
}

TEST(QueueingGame, SinglePlayerSymmetricSplit) {
  auto g = queueing_game({2, 2}, {1}, {{0, 1}});
  auto r = find_equilibrium(g, {{{LoadVector(g.ground, {1, 0}), {}}}});
  EXPECT_NEAR(r.profile.players[0].load[0], 0.5, 1e-6);
  EXPECT_NEAR(r.profile.players[0].load[1], 0.5, 1e-6);
}

TEST(QueueingGame, DisjointPlayersSolveAlone) {
  auto joint = queueing_game({2, 3, 1, 4}, {1, 2}, {{0, 1}, {2, 3}});
  auto alone1 = queueing_game({2, 3}, {1}, {{0, 1}});
  auto alone2 = queueing_game({1, 4}, {2}, {{0, 1}});
  std::mt19937_64 rng(2);
  auto rj = find_equilibrium(joint, random_profile(joint, rng)).profile;
  auto r1 = find_equilibrium(alone1, random_profile(alone1, rng)).profile;
  auto r2 = find_equilibrium(alone2, random_profile(alone2, rng)).profile;
  EXPECT_NEAR(rj.players[0].load[0], r1.players[0].load[0], 1e-6);
  EXPECT_NEAR(rj.players[0].load[1], r1.players[0].load[1], 1e-6);
  EXPECT_NEAR(rj.players[1].load[2], r2.players[0].load[0], 1e-6);
  EXPECT_NEAR(rj.players[1].load[3], r2.players[0].load[1], 1e-6);
  EXPECT_NEAR(rj.players[0].load[2] + rj.players[0].load[3], 0.0, 1e-12);
}

TEST(QueueingGame, TwoPlayersUniqueEquilibrium) {
  auto g = queueing_game({3, 3}, {1, 1}, {{0, 1}, {0, 1}});
  std::mt19937_64 rng(3);
  auto rep = probe_multiplicity(g, random_starts(g, rng, 10));
  EXPECT_TRUE(rep.failures.empty());
  ASSERT_EQ(rep.equilibria.size(), 1u);
  for (const auto& p : rep.equilibria[0].profile.players) EXPECT_NEAR(p.load[0], 0.5, 1e-6);
}

TEST(QueueingGame, UnstableAndMalformedInputs) {
  EXPECT_THROW(queueing_game({1, 1}, {2}, {{0, 1}}), Unstable);
  // each player fits alone but not together
  EXPECT_THROW(queueing_game({2}, {1, 1}, {{0}, {0}}), Unstable);
  EXPECT_THROW(queueing_game({2}, {1}, {{1}}), InvalidSpec);
  EXPECT_THROW(queueing_game({2}, {1}, {{}}), InvalidSpec);
}

TEST(K4ConflictPair, VectorsAreSpanningTreeIndicators) {
  auto p = k4_conflict_pair();
  EXPECT_TRUE(in_base_polytope(p.oracle(), p.x));
  EXPECT_TRUE(in_base_polytope(p.oracle(), p.y));
  Mask x = 0, y = 0;
  for (std::size_t e = 0; e < 6; ++e) {
    if (p.x[e] == 1.0) x |= bit(e);
    if (p.y[e] == 1.0) y |= bit(e);
  }
  EXPECT_TRUE(is_forest(k4_graph(), x));
  EXPECT_TRUE(is_forest(k4_graph(), y));
  EXPECT_EQ(x | y, Mask{63});
}

TEST(IsMatroidBaseFamily, Examples) {
  EXPECT_FALSE(is_matroid_base_family({{"e"}, {"f", "g"}}));
  EXPECT_TRUE(is_matroid_base_family({{"a", "b"}, {"a", "c"}, {"b", "c"}}));
  EXPECT_FALSE(is_matroid_base_family({{"a", "b"}, {"c", "d"}}));
  SetFamily big{{"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k"}};
  EXPECT_THROW(is_matroid_base_family(big), GroundTooLarge);
}

TEST(IsMatroidBaseFamily, AgreesWithExchangeAxiomOnAllSmallAntichains) {
  for (std::size_t n = 1; n <= 4; ++n) {
    for (const auto& sets : all_antichains(n)) {
      auto f = to_family(sets, n);
      ASSERT_EQ(is_matroid_base_family(f), brute_base_family(f));
    }
  }
}

TEST(FindNonmatroidWitness, TriangleSystem) {
  auto w = find_nonmatroid_witness({{"e"}, {"f", "g"}});
  EXPECT_EQ(w.X, (std::vector<std::string>{"e"}));
  EXPECT_EQ(w.Y, (std::vector<std::string>{"f", "g"}));
  EXPECT_EQ(w.a, "e");
  EXPECT_EQ(w.b, "f");
  EXPECT_EQ(w.c, "g");
}

TEST(FindNonmatroidWitness, RejectsMatroidsAndNonAntichains) {
  EXPECT_THROW(find_nonmatroid_witness({{"a"}, {"b"}}), WitnessNotFound);
  EXPECT_THROW(find_nonmatroid_witness({{"a"}, {"a", "b"}}), WitnessNotFound);
}

TEST(FindNonmatroidWitness, ExistsForEveryNonMatroidAntichainUpToFiveElements) {
  std::size_t checked = 0;
  for (std::size_t n = 1; n <= 5; ++n) {
    for (const auto& sets : all_antichains(n)) {
      auto f = to_family(sets, n);
      if (brute_base_family(f)) continue;
      auto w = find_nonmatroid_witness(f);
      ASSERT_TRUE(witness_condition_holds(f, w)) << "n=" << n;
      ++checked;
    }
  }
  EXPECT_GT(checked, 5000u);
}

TEST(EmbedCounterexample, ThreeTriangleSystemsGiveTheTriangleGame) {
  SetFamily s{{"e"}, {"f", "g"}};
  auto ce = embed_counterexample({s, s, s});
  auto tri = triangle_game();
  EXPECT_EQ(ce.game.ground.elements(), tri.ground.elements());
  for (std::size_t i = 0; i < 3; ++i) {
    std::set<Mask> a(ce.game.players[i].set_system().sets.begin(), ce.game.players[i].set_system().sets.end());
    std::set<Mask> b(tri.players[i].set_system().sets.begin(), tri.players[i].set_system().sets.end());
    EXPECT_EQ(a, b) << "player " << i;
    for (std::size_t e = 0; e < 3; ++e) {
      EXPECT_DOUBLE_EQ(ce.game.players[i].cost(e).value(1.7), tri.players[i].cost(e).value(1.7));
    }
  }
  EXPECT_TRUE(is_equilibrium(ce.game, ce.on_x, 1e-9).is_equilibrium);
  EXPECT_TRUE(is_equilibrium(ce.game, ce.on_y, 1e-9).is_equilibrium);
  auto rep = probe_multiplicity(ce.game, {ce.on_x, ce.on_y});
  EXPECT_EQ(rep.equilibria.size(), 2u);
}

TEST(EmbedCounterexample, ExtraExpensiveElementsStayUnused) {
  std::vector<SetFamily> systems{{{"e", "u"}, {"f", "g", "u"}, {"v", "w"}},
                                 {{"x"}, {"y", "z"}, {"q", "r"}},
                                 {{"e"}, {"f", "g"}, {"h", "i"}}};
  auto ce = embed_counterexample(systems);
  for (const auto* prof : {&ce.on_x, &ce.on_y}) {
    auto rep = is_equilibrium(ce.game, *prof, 1e-9);
    EXPECT_TRUE(rep.is_equilibrium) << rep.worst_violation;
    for (std::size_t e = 0; e < ce.game.size(); ++e) {
      const auto& id = ce.game.ground[e];
      if (id == "e" || id == "f" || id == "g") continue;
      for (std::size_t i = 0; i < 3; ++i) {
        const auto& c = ce.game.players[i].costs[e];
        if (c && c->value(0.0) >= 100.0) {
          EXPECT_EQ(prof->players[i].load[e], 0.0);
        }
      }
    }
  }
  EXPECT_NE(linf_distance(ce.on_x.aggregate(), ce.on_y.aggregate()), 0.0);
}

TEST(EmbedCounterexample, FourthPlayerHasZeroDemand) {
  SetFamily s{{"e"}, {"f", "g"}};
  SetFamily t{{"a", "b"}, {"c", "d"}};
  auto ce = embed_counterexample({s, s, s, t});
  ASSERT_EQ(ce.game.players.size(), 4u);
  EXPECT_EQ(ce.game.players[3].demand, 0.0);
  EXPECT_EQ(ce.embedding.tau[3].at("a"), "p4_a");
  auto rep = probe_multiplicity(ce.game, {ce.on_x, ce.on_y});
  EXPECT_EQ(rep.equilibria.size(), 2u);
}

TEST(EmbedCounterexample, EmbeddingsAreInjectiveAndMapSetsOnImages) {
  std::mt19937_64 rng(4);
  std::vector<SetFamily> pool;
  for (const auto& sets : all_antichains(4)) {
    auto f = to_family(sets, 4);
    if (!brute_base_family(f)) pool.push_back(f);
  }
  for (int t = 0; t < 30; ++t) {
    std::vector<SetFamily> systems;
    for (int k = 0; k < 3 + t % 2; ++k) systems.push_back(pool[rng() % pool.size()]);
    auto ce = embed_counterexample(systems);
    for (std::size_t i = 0; i < systems.size(); ++i) {
      std::set<std::string> targets;
      for (const auto& [from, to] : ce.embedding.tau[i]) targets.insert(to);
      EXPECT_EQ(targets.size(), ce.embedding.tau[i].size());
      for (std::size_t k = 0; k < systems[i].size(); ++k) {
        std::vector<std::string> img;
        for (const auto& el : systems[i][k]) img.push_back(ce.embedding.tau[i].at(el));
        EXPECT_EQ(ce.game.ground.names(ce.embedding.images[i][k]), sorted(img));
      }
    }
    EXPECT_TRUE(is_equilibrium(ce.game, ce.on_x, 1e-9).is_equilibrium) << "trial " << t;
    EXPECT_TRUE(is_equilibrium(ce.game, ce.on_y, 1e-9).is_equilibrium) << "trial " << t;
  }
}

TEST(EmbedCounterexample, RejectsMatroidSystemsAndTooFewSystems) {
  SetFamily s{{"e"}, {"f", "g"}};
  EXPECT_THROW(embed_counterexample({s, s}), InvalidSpec);
  EXPECT_THROW(embed_counterexample({s, s, {{"a"}, {"b"}}}), NotNonMatroid);
}

TEST(GraphUniquenessProperty, Examples) {
  MultiGraph tri{{"x", "y", "z"}, {{"a", "x", "y"}, {"b", "y", "z"}, {"c", "z", "x"}}};
  EXPECT_FALSE(graph_uniqueness_property(tri));
  std::mt19937_64 rng(5);
  EXPECT_TRUE(graph_uniqueness_property(random_parallel_tree(rng, 6)));
  MultiGraph bundle{{"s", "t"}, {}};
  for (int k = 0; k < 5; ++k) bundle.edges.push_back({"l" + std::to_string(k), "s", "t"});
  EXPECT_TRUE(graph_uniqueness_property(bundle));
}

TEST(GraphUniquenessProperty, MatchesForestTestOnSimpleQuotient) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 200; ++t) {
    auto g = random_graph(rng, 2 + t % 7);
    // keep one representative per vertex pair, drop loops
    MultiGraph q{g.vertices, {}};
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& e : g.edges) {
      auto key = std::minmax(e.u, e.v);
      if (e.u != e.v && seen.insert(key).second) q.edges.push_back(e);
    }
    EXPECT_EQ(graph_uniqueness_property(g), is_forest(q, full_mask(q.edges.size()))) << "trial " << t;
  }
}

TEST(GraphUniquenessProperty, CycleGraphsCarryTwoEquilibriaTreesOne) {
  for (int k : {3, 4, 5}) {
    MultiGraph c;
    for (int v = 1; v <= k; ++v) c.vertices.push_back("v" + std::to_string(v));
    for (int v = 1; v <= k; ++v) c.edges.push_back({"c" + std::to_string(v), c.vertices[v - 1], c.vertices[v % k]});
    ASSERT_FALSE(graph_uniqueness_property(c));
    auto g = cycle_game(k);
    auto rep = probe_multiplicity(g, {all_direct(g), all_indirect(g)});
    EXPECT_EQ(rep.equilibria.size(), 2u) << "k=" << k;
  }
  std::mt19937_64 rng(7);
  for (int t = 0; t < 6; ++t) {
    auto tree = random_parallel_tree(rng, 3 + t % 3);
    ASSERT_TRUE(graph_uniqueness_property(tree));
    auto g = random_routing_game(rng, tree, 2);
    auto rep = probe_multiplicity(g, random_starts(g, rng, 6));
    EXPECT_TRUE(rep.failures.empty());
    EXPECT_EQ(rep.equilibria.size(), 1u) << "trial " << t;
  }
}

TEST(SimplePaths, TreeBundlesMultiply) {
  MultiGraph g{{"a", "b", "c"}, {{"x1", "a", "b"}, {"x2", "a", "b"}, {"y1", "b", "c"}, {"y2", "b", "c"}, {"y3", "b", "c"}}};
  auto paths = simple_paths(g, "a", "c");
  EXPECT_EQ(paths.size(), 6u);
  for (const auto& p : paths) EXPECT_EQ(p.size(), 2u);
  EXPECT_THROW(simple_paths(g, "a", "a"), InvalidSpec);
  MultiGraph split{{"a", "b"}, {}};
  EXPECT_THROW(simple_paths(split, "a", "b"), InvalidSpec);
}

TEST(SimplePaths, CycleHasTwoRoutes) {
  auto paths = simple_paths(k4_graph(), "A", "B");
  // A-B directly, via C, via D, via C-D, via D-C
  EXPECT_EQ(paths.size(), 5u);
}
