#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "polygame/cost.hpp"
#include "polygame/error.hpp"
#include "polygame/ground_set.hpp"
#include "polygame/matroid.hpp"
#include "polygame/polymatroid.hpp"

namespace polygame {

inline constexpr std::size_t kMaxSetSystem = 10000;

// Player distributes its demand over the allowable subsets.
struct SetSystemSpace {
  std::vector<Mask> sets;
};

// Player picks a load vector in the base polytope of `oracle`; for matroid
// players the oracle is scale * rank.
struct PolymatroidSpace {
  SubmodularOracle oracle;
  std::optional<Matroid> matroid;
  double scale = 1.0;
};

using StrategySpace = std::variant<SetSystemSpace, PolymatroidSpace>;

struct Player {
  std::string id;
  double demand = 0.0;
  StrategySpace space;
  std::vector<std::optional<CostFunction>> costs;  // indexed by ground position

  bool is_set_system() const { return std::holds_alternative<SetSystemSpace>(space); }
  const SetSystemSpace& set_system() const { return std::get<SetSystemSpace>(space); }
  const PolymatroidSpace& polymatroid() const { return std::get<PolymatroidSpace>(space); }

  const CostFunction& cost(std::size_t e) const {
    if (!costs.at(e)) throw InvalidSpec("player '" + id + "' has no cost on resource " + std::to_string(e));
    return *costs[e];
  }

  // Resources the player can ever load.
  Mask usable(std::size_t m) const {
    if (is_set_system()) {
      Mask u = 0;
      for (Mask s : set_system().sets) u |= s;
      return u;
    }
    const auto& rho = polymatroid().oracle;
    Mask u = 0;
    for (std::size_t e = 0; e < m; ++e) {
      if (rho(bit(e)) > kTol) u |= bit(e);
    }
    return u;
  }
};

struct Game {
  GroundSet ground;
  std::vector<Player> players;

  std::size_t size() const { return ground.size(); }

  void validate() const {
    const std::size_t m = ground.size();
    if (m == 0) throw InvalidSpec("game has an empty ground set");
    std::map<std::string, int> ids;
    for (const auto& p : players) {
      if (ids[p.id]++) throw InvalidSpec("duplicate player id '" + p.id + "'");
      if (!(p.demand >= 0.0) || !std::isfinite(p.demand)) {
        throw InvalidSpec("player '" + p.id + "' needs a finite demand >= 0");
      }
      if (p.costs.size() != m) throw InvalidSpec("player '" + p.id + "' cost table size mismatch");
      if (p.is_set_system()) {
        const auto& sets = p.set_system().sets;
        if (sets.empty()) throw InvalidSpec("player '" + p.id + "' has no allowable subsets");
        if (sets.size() > kMaxSetSystem) throw InvalidSpec("player '" + p.id + "' has too many subsets");
        for (Mask s : sets) {
          if (s == 0) throw InvalidSpec("player '" + p.id + "' has an empty allowable subset");
          if (s & ~ground.full()) throw InvalidSpec("player '" + p.id + "' subset outside ground");
        }
      } else {
        const auto& sp = p.polymatroid();
        if (!(sp.oracle.ground() == ground)) {
          throw InvalidSpec("player '" + p.id + "' strategy space uses a different ground set");
        }
      }
      for (auto e : members(p.usable(m))) {
        if (!p.costs[e]) {
          throw InvalidSpec("player '" + p.id + "' may use '" + ground[e] + "' but has no cost for it");
        }
      }
    }
  }
};

// Per-resource costs by identifier; resources not listed stay unset.
inline std::vector<std::optional<CostFunction>> cost_table(
    const GroundSet& ground, const std::map<std::string, CostFunction>& costs) {
  std::vector<std::optional<CostFunction>> out(ground.size());
  for (const auto& [id, c] : costs) out[ground.index_of(id)] = c;
  return out;
}

inline Player set_system_player(const GroundSet& ground, std::string id, double demand,
                                const std::vector<std::vector<std::string>>& sets,
                                const std::map<std::string, CostFunction>& costs) {
  SetSystemSpace space;
  for (const auto& s : sets) space.sets.push_back(ground.mask_of(std::span<const std::string>(s)));
  return {std::move(id), demand, std::move(space), cost_table(ground, costs)};
}

// Strategy space P_{d * rk}.
inline Player matroid_player(std::string id, double demand, const Matroid& mat,
                             const std::map<std::string, CostFunction>& costs) {
  PolymatroidSpace space{scale_oracle(mat.rank_oracle(), demand), mat, demand};
  return {std::move(id), demand, std::move(space), cost_table(mat.ground(), costs)};
}

// ---------------------------------------------------------------------------
// Profiles

struct PlayerStrategy {
  LoadVector load;
  std::vector<double> distribution;  // set-system players: weight per allowable subset
};

struct StrategyProfile {
  std::vector<PlayerStrategy> players;

  LoadVector aggregate() const {
    LoadVector agg(players.at(0).load.ground());
    for (const auto& p : players) agg += p.load;
    return agg;
  }

  // Full load matrix flattened player-major.
  std::vector<double> load_matrix() const {
    std::vector<double> out;
    for (const auto& p : players) out.insert(out.end(), p.load.values().begin(), p.load.values().end());
    return out;
  }
};

inline LoadVector induced_load(const GroundSet& ground, const SetSystemSpace& space,
                               const std::vector<double>& distribution) {
  LoadVector load(ground);
  for (std::size_t k = 0; k < space.sets.size(); ++k) {
    for (auto e : members(space.sets[k])) load[e] += distribution[k];
  }
  return load;
}

inline PlayerStrategy set_strategy(const Game& g, std::size_t i, std::vector<double> distribution) {
  const auto& space = g.players.at(i).set_system();
  if (distribution.size() != space.sets.size()) throw InvalidSpec("distribution size mismatch");
  auto load = induced_load(g.ground, space, distribution);
  return {std::move(load), std::move(distribution)};
}

// Puts the whole demand on one allowable subset.
inline PlayerStrategy pure_set_strategy(const Game& g, std::size_t i, std::size_t set_index) {
  const auto& p = g.players.at(i);
  std::vector<double> dist(p.set_system().sets.size(), 0.0);
  dist.at(set_index) = p.demand;
  return set_strategy(g, i, std::move(dist));
}

inline std::vector<std::string> check_feasibility(const Game& g, const StrategyProfile& x,
                                                  double tol = kTol) {
  std::vector<std::string> problems;
  if (x.players.size() != g.players.size()) {
    problems.push_back("profile has " + std::to_string(x.players.size()) + " players, game has " +
                       std::to_string(g.players.size()));
    return problems;
  }
  for (std::size_t i = 0; i < g.players.size(); ++i) {
    const auto& p = g.players[i];
    const auto& s = x.players[i];
    const std::string who = "player '" + p.id + "': ";
    if (!(s.load.ground() == g.ground)) {
      problems.push_back(who + "load vector on a different ground set");
      continue;
    }
    for (std::size_t e = 0; e < g.size(); ++e) {
      if (s.load[e] < -tol) problems.push_back(who + "negative load on '" + g.ground[e] + "'");
    }
    if (p.is_set_system()) {
      const auto& space = p.set_system();
      if (s.distribution.size() != space.sets.size()) {
        problems.push_back(who + "distribution has " + std::to_string(s.distribution.size()) +
                           " entries for " + std::to_string(space.sets.size()) + " subsets");
        continue;
      }
      double total = 0.0;
      for (double w : s.distribution) {
        if (w < -tol) problems.push_back(who + "negative subset weight");
        total += w;
      }
      if (std::abs(total - p.demand) > tol) {
        problems.push_back(who + "subset weights sum to " + std::to_string(total) + ", demand is " +
                           std::to_string(p.demand));
      }
      auto induced = induced_load(g.ground, space, s.distribution);
      if (linf_distance(induced, s.load) > tol) problems.push_back(who + "loads differ from the induced load");
    } else if (!in_base_polytope(p.polymatroid().oracle, s.load, tol)) {
      problems.push_back(who + "load vector is not in the base polytope");
    }
  }
  return problems;
}

inline void require_feasible(const Game& g, const StrategyProfile& x, double tol = kTol) {
  auto problems = check_feasibility(g, x, tol);
  if (!problems.empty()) throw InfeasibleProfile(problems.front());
}

// ---------------------------------------------------------------------------
// Costs

inline double total_cost(const Game& g, const StrategyProfile& x, std::size_t i) {
  auto agg = x.aggregate();
  const auto& p = g.players.at(i);
  double pi = 0.0;
  for (std::size_t e = 0; e < g.size(); ++e) {
    double xi = x.players[i].load[e];
    if (xi == 0.0 && !p.costs[e]) continue;
    pi += p.cost(e).value(agg[e]) * xi;
  }
  return pi;
}

// mu_{i,e} = c_{i,e}(x_e) + x_{i,e} c'_{i,e}(x_e)
inline double marginal_cost(const Game& g, const StrategyProfile& x, std::size_t i, std::size_t e) {
  auto agg = x.aggregate();
  const auto& c = g.players.at(i).cost(e);
  double xi = x.players[i].load[e];
  return c.value(agg[e]) + xi * c.derivative(agg[e]);
}

namespace detail {

// Marginals of player i over all resources; unset costs give +inf so they
// are never preferred (they are only unset on resources the player cannot use).
inline std::vector<double> marginals(const Game& g, const LoadVector& agg, const LoadVector& own,
                                     std::size_t i) {
  const auto& p = g.players[i];
  std::vector<double> mu(g.size());
  for (std::size_t e = 0; e < g.size(); ++e) {
    if (!p.costs[e]) {
      mu[e] = std::numeric_limits<double>::infinity();
      continue;
    }
    mu[e] = p.costs[e]->value(agg[e]) + own[e] * p.costs[e]->derivative(agg[e]);
  }
  return mu;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Equilibrium verification

struct Violation {
  std::size_t player = 0;
  std::string from;  // resource or subset key carrying load
  std::string to;    // cheaper alternative
  double amount = 0.0;
};

struct EquilibriumReport {
  bool is_equilibrium = true;
  double worst_violation = 0.0;
  std::vector<double> residuals;  // per player
  std::optional<Violation> worst;
  std::vector<double> load_matrix;
  LoadVector aggregate;
};

// First-order conditions. Polymatroid players: mu_e <= mu_e' + tol whenever
// x_{i,e} > tol and load can move from e to e'. Set-system players: every
// subset carrying weight has a minimal marginal sum over all subsets.
inline EquilibriumReport is_equilibrium(const Game& g, const StrategyProfile& x, double tol = kTol) {
  EquilibriumReport rep;
  rep.aggregate = x.aggregate();
  rep.load_matrix = x.load_matrix();
  rep.residuals.assign(g.players.size(), 0.0);
  for (std::size_t i = 0; i < g.players.size(); ++i) {
    const auto& p = g.players[i];
    const auto& own = x.players[i].load;
    auto mu = detail::marginals(g, rep.aggregate, own, i);
    double& res = rep.residuals[i];
    auto consider = [&](double v, std::string from, std::string to) {
      if (v > res) res = v;
      if (v > rep.worst_violation) {
        rep.worst_violation = v;
        rep.worst = Violation{i, std::move(from), std::move(to), v};
      }
    };
    if (p.is_set_system()) {
      const auto& sets = p.set_system().sets;
      std::vector<double> sums(sets.size(), 0.0);
      for (std::size_t k = 0; k < sets.size(); ++k) {
        for (auto e : members(sets[k])) sums[k] += mu[e];
      }
      auto best = static_cast<std::size_t>(std::min_element(sums.begin(), sums.end()) - sums.begin());
      for (std::size_t k = 0; k < sets.size(); ++k) {
        if (x.players[i].distribution.at(k) > tol) {
          consider(sums[k] - sums[best], g.ground.key(sets[k]), g.ground.key(sets[best]));
        }
      }
    } else {
      ExchangeTable cap(p.polymatroid().oracle, own, tol);
      for (std::size_t e = 0; e < g.size(); ++e) {
        if (own[e] <= tol) continue;
        for (std::size_t ep = 0; ep < g.size(); ++ep) {
          if (ep == e || cap(e, ep) <= tol) continue;
          consider(mu[e] - mu[ep], g.ground[e], g.ground[ep]);
        }
      }
    }
  }
  rep.is_equilibrium = rep.worst_violation <= tol;
  return rep;
}

}  // namespace polygame
