#include <gtest/gtest.h>

#include <random>

#include "polygame/game.hpp"
#include "polygame/instances.hpp"
#include "polygame/solver.hpp"
#include "support/random_instances.hpp"

using namespace polygame;
using namespace testing_support;

namespace {

std::size_t index_of(const Game& g, const std::string& id) { return g.ground.index_of(id); }

// Same game with every cost function of player i multiplied by gamma.
Game scale_costs(Game g, std::size_t i, double gamma) {
  for (auto& c : g.players[i].costs) {
    if (!c) continue;
    switch (c->form()) {
      case CostFunction::Form::polynomial: {
        auto coef = c->coefficients();
        for (auto& a : coef) a *= gamma;
        c = CostFunction::polynomial(coef);
        break;
      }
      case CostFunction::Form::affine:
        c = CostFunction::affine(c->scale() * gamma, c->offset());
        break;
      case CostFunction::Form::queue:
        ADD_FAILURE() << "queue costs cannot be rescaled in closed form";
    }
  }
  return g;
}

}  // namespace

TEST(CostFunction, PolynomialValueAndDerivative) {
  auto c = CostFunction::polynomial({1.0, 2.0, 0.0, 3.0});
  EXPECT_DOUBLE_EQ(c.value(2.0), 1 + 4 + 24);
  EXPECT_DOUBLE_EQ(c.derivative(2.0), 2 + 36);
  EXPECT_TRUE(c.strictly_increasing());
  EXPECT_FALSE(CostFunction::zero().strictly_increasing());
  EXPECT_THROW(CostFunction::polynomial({1.0, -1.0}), InvalidSpec);
}

TEST(CostFunction, QueueDelayAndOverload) {
  auto c = CostFunction::queue(2.0);
  EXPECT_DOUBLE_EQ(c.value(1.0), 1.0);
  EXPECT_DOUBLE_EQ(c.derivative(1.5), 4.0);
  EXPECT_THROW(c.value(2.0), QueueOverload);
  EXPECT_THROW(CostFunction::queue(0.0), InvalidSpec);
  EXPECT_DOUBLE_EQ(c.domain_limit(), 2.0 - kQueueMargin);
}

TEST(CostFunction, AffineScaled) {
  auto c = CostFunction::affine(0.5, 1.0);
  EXPECT_DOUBLE_EQ(c.value(3.0), 2.0);
  EXPECT_DOUBLE_EQ(c.derivative(3.0), 0.5);
  EXPECT_THROW(CostFunction::affine(-1.0, 0.0), InvalidSpec);
}

TEST(CostFunction, ConvexIncreasingByFiniteDifferences) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    auto c = t % 3 == 0 ? CostFunction::queue(uniform_real(rng, 1.0, 4.0)) : random_poly(rng);
    double hi = std::min(3.0, c.domain_limit() - 0.1);
    for (double x = 0.0; x + 0.02 < hi; x += 0.05) {
      EXPECT_GE(c.value(x + 0.01), c.value(x) - 1e-12);
      EXPECT_GE(c.value(x + 0.02) - 2 * c.value(x + 0.01) + c.value(x), -1e-9);
      EXPECT_NEAR((c.value(x + 1e-6) - c.value(x - 1e-6 < 0 ? x : x - 1e-6)) / (x < 1e-6 ? 1e-6 : 2e-6),
                  c.derivative(x), 1e-4 * (1 + c.derivative(x)));
    }
  }
}

TEST(TotalCost, TriangleExamples) {
  auto g = triangle_game();
  EXPECT_DOUBLE_EQ(total_cost(g, all_direct(g), 0), 1.0);
  EXPECT_DOUBLE_EQ(total_cost(g, all_indirect(g), 0), 6.0);
}

TEST(TotalCost, ZeroDemandPlayerPaysNothing) {
  auto g = triangle_game();
  g.players[2].demand = 0.0;
  auto x = all_direct(g);
  x.players[2] = set_strategy(g, 2, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(total_cost(g, x, 2), 0.0);
}

TEST(MarginalCost, TriangleExamples) {
  auto g = triangle_game();
  auto d = all_direct(g);
  EXPECT_DOUBLE_EQ(marginal_cost(g, d, 0, index_of(g, "e")), 4.0);
  // player 1 does not use f in the direct profile
  EXPECT_DOUBLE_EQ(marginal_cost(g, d, 0, index_of(g, "f")), 2.0);
  auto ind = all_indirect(g);
  EXPECT_DOUBLE_EQ(marginal_cost(g, ind, 0, index_of(g, "f")), 4.0);
}

TEST(MarginalCost, QueueOverloadPropagates) {
  auto g = queueing_game({1.5}, {1.0}, {{0}});
  StrategyProfile x{{{LoadVector(g.ground, {1.0}), {}}}};
  x.players[0].load[0] = 1.6;
  EXPECT_THROW(marginal_cost(g, x, 0, 0), QueueOverload);
  EXPECT_THROW(total_cost(g, x, 0), QueueOverload);
}

TEST(IsEquilibrium, TrianglePureProfiles) {
  auto g = triangle_game();
  auto d = is_equilibrium(g, all_direct(g));
  EXPECT_TRUE(d.is_equilibrium);
  EXPECT_NEAR(d.worst_violation, 0.0, 1e-12);
  auto i = is_equilibrium(g, all_indirect(g));
  EXPECT_TRUE(i.is_equilibrium);
  EXPECT_NEAR(i.worst_violation, 0.0, 1e-12);
  EXPECT_EQ(i.aggregate.values(), (std::vector<double>{2, 2, 2}));
}

TEST(IsEquilibrium, TriangleHalfSplitIsNot) {
  auto g = triangle_game();
  auto x = all_direct(g);
  x.players[0] = set_strategy(g, 0, {0.5, 0.5});
  // loads e=0.5, f=1.5, g=1.5 ; player 1 own loads 0.5 on each
  // direct: 0.125 + 0.5*0.75 = 0.5 ; indirect: 2*(2.5 + 0.5) = 6
  auto r = is_equilibrium(g, x);
  EXPECT_FALSE(r.is_equilibrium);
  EXPECT_NEAR(r.residuals[0], 5.5, 1e-12);
  // player 2 on f: 1.5^3 + 3 * 1.5^2 = 10.125 against 1.5 + 2.5 via e, g
  ASSERT_TRUE(r.worst.has_value());
  EXPECT_EQ(r.worst->player, 1u);
  EXPECT_EQ(r.worst->from, "f");
  EXPECT_EQ(r.worst->to, "e,g");
  EXPECT_NEAR(r.worst_violation, 6.125, 1e-12);
}

TEST(IsEquilibrium, VerdictInvariantUnderCostScaling) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    auto g = random_matroid_game(rng, Family::partition, 4, 2);
    auto x = random_profile(g, rng);
    double gamma = uniform_real(rng, 0.1, 10.0);
    auto scaled = scale_costs(g, 0, gamma);
    auto a = is_equilibrium(g, x), b = is_equilibrium(scaled, x);
    EXPECT_NEAR(b.residuals[0], gamma * a.residuals[0], 1e-9 * (1 + gamma * a.residuals[0]));
    EXPECT_NEAR(b.residuals[1], a.residuals[1], 1e-12);
  }
  auto g = triangle_game();
  for (double gamma : {0.01, 3.0, 100.0}) {
    auto scaled = scale_costs(g, 1, gamma);
    EXPECT_TRUE(is_equilibrium(scaled, all_direct(scaled)).is_equilibrium);
    EXPECT_TRUE(is_equilibrium(scaled, all_indirect(scaled)).is_equilibrium);
  }
}

// A set system made of the bases of a matroid induces the same polytope as
// the scaled matroid, so both verification rules must agree.
TEST(IsEquilibrium, SetSystemAndPolymatroidRulesAgree) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 24; ++t) {
    const std::size_t m = 3 + t % 4;
    auto gm = random_matroid_game(rng, kBaseOrderableFamilies[t % 5], m, 2);
    Game gs{gm.ground, {}};
    for (const auto& p : gm.players) {
      SetSystemSpace space;
      for (Mask b : enumerate_bases(*p.polymatroid().matroid)) space.sets.push_back(b);
      gs.players.push_back({p.id, p.demand, space, p.costs});
    }
    gs.validate();
    StrategyProfile xm = t % 2 ? random_profile(gm, rng) : find_equilibrium(gm, random_profile(gm, rng)).profile;
    StrategyProfile xs;
    for (std::size_t i = 0; i < gm.players.size(); ++i) {
      const auto& p = gm.players[i];
      const auto& sets = gs.players[i].set_system().sets;
      std::vector<double> dist(sets.size(), 0.0);
      for (const auto& wv : decompose_into_vertices(p.polymatroid().oracle, xm.players[i].load)) {
        Mask b = 0;
        for (std::size_t e = 0; e < m; ++e) {
          if (wv.vertex[e] > 0.5 * p.demand) b |= bit(e);
        }
        auto it = std::find(sets.begin(), sets.end(), b);
        ASSERT_NE(it, sets.end());
        dist[static_cast<std::size_t>(it - sets.begin())] += wv.weight * p.demand;
      }
      xs.players.push_back(set_strategy(gs, i, dist));
      EXPECT_LE(linf_distance(xs.players[i].load, xm.players[i].load), 1e-8);
    }
    EXPECT_TRUE(check_feasibility(gs, xs, 1e-8).empty());
    auto rm = is_equilibrium(gm, xm, 1e-6), rs = is_equilibrium(gs, xs, 1e-6);
    EXPECT_EQ(rm.is_equilibrium, rs.is_equilibrium) << "trial " << t << " residuals " << rm.worst_violation
                                                     << " vs " << rs.worst_violation;
  }
}

TEST(CheckFeasibility, ReportsEveryKindOfProblem) {
  auto g = triangle_game();
  auto x = all_direct(g);
  EXPECT_TRUE(check_feasibility(g, x).empty());
  auto bad = x;
  bad.players[0].distribution = {0.7, 0.7};
  EXPECT_FALSE(check_feasibility(g, bad).empty());
  bad = x;
  bad.players[1].load[0] = 0.3;
  EXPECT_FALSE(check_feasibility(g, bad).empty());
  bad = x;
  bad.players.pop_back();
  EXPECT_THROW(require_feasible(g, bad), InfeasibleProfile);

  auto q = queueing_game({2, 2}, {1}, {{0, 1}});
  StrategyProfile off{{{LoadVector(q.ground, {0.7, 0.7}), {}}}};
  EXPECT_FALSE(check_feasibility(q, off).empty());
}

TEST(GameValidate, RejectsMalformedGames) {
  auto g = triangle_game();
  auto dup = g;
  dup.players[1].id = "1";
  EXPECT_THROW(dup.validate(), InvalidSpec);
  auto neg = g;
  neg.players[0].demand = -1;
  EXPECT_THROW(neg.validate(), InvalidSpec);
  auto missing = g;
  missing.players[0].costs[1].reset();
  EXPECT_THROW(missing.validate(), InvalidSpec);
  auto empty_set = g;
  empty_set.players[0].space = SetSystemSpace{{0}};
  EXPECT_THROW(empty_set.validate(), InvalidSpec);
}
