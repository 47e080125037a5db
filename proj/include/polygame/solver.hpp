#pragma once

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "polygame/error.hpp"
#include "polygame/exchange.hpp"
#include "polygame/game.hpp"
#include "polygame/parallel.hpp"
#include "polygame/polymatroid.hpp"

namespace polygame {

struct SolverParams {
  double damping = 0.5;
  double gap_tol = 1e-9;       // conditional-gradient duality gap
  double active_tol = 1e-8;    // pairwise gap: worst active atom against the linear minimizer
  double move_tol = 1e-8;      // max per-player load change per sweep
  std::size_t max_iters = 100000;  // conditional-gradient iterations per best response
  std::size_t max_sweeps = 20000;  // best-response sweeps in find_equilibrium
  std::size_t polish_sweeps = 50;  // undamped sweeps after convergence
  double eq_tol = 1e-7;        // residual accepted by find_equilibrium
  double tol_distinct = 1e-4;  // L-inf distance separating equilibria
  double tol = kTol;           // feasibility tolerance
  std::size_t jobs = 1;
};

struct BestResponse {
  PlayerStrategy strategy;
  double gap = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

struct Atom {
  std::vector<double> load;
  int set_index = -1;
  double weight = 0.0;
};

class ResponseObjective {
 public:
  ResponseObjective(const Game& g, std::size_t i, std::vector<double> others)
      : g_(g), p_(g.players[i]), others_(std::move(others)) {}

  // Gradient of sum_e c_e(o_e + z_e) z_e, i.e. the marginal costs.
  void gradient(const std::vector<double>& z, std::vector<double>& out) const {
    out.resize(z.size());
    for (std::size_t e = 0; e < z.size(); ++e) {
      if (!p_.costs[e]) {
        out[e] = 0.0;
        continue;
      }
      const auto& c = *p_.costs[e];
      double load = others_[e] + z[e];
      out[e] = c.value(load) + z[e] * c.derivative(load);
    }
  }

  double value(const std::vector<double>& z) const {
    double v = 0.0;
    for (std::size_t e = 0; e < z.size(); ++e) {
      if (p_.costs[e] && z[e] != 0.0) v += p_.costs[e]->value(others_[e] + z[e]) * z[e];
    }
    return v;
  }

  // Largest step t <= limit keeping z + t d inside every queue domain.
  double domain_step(const std::vector<double>& z, const std::vector<double>& d, double limit) const {
    for (std::size_t e = 0; e < z.size(); ++e) {
      if (!p_.costs[e] || d[e] <= 0.0) continue;
      double cap = p_.costs[e]->domain_limit();
      if (!std::isfinite(cap)) continue;
      limit = std::min(limit, std::max(0.0, (cap - others_[e] - z[e]) / d[e]));
    }
    return limit;
  }

  // d/dt of the objective along z + t d.
  double slope(const std::vector<double>& z, const std::vector<double>& d, double t) const {
    double s = 0.0;
    for (std::size_t e = 0; e < z.size(); ++e) {
      if (!p_.costs[e] || d[e] == 0.0) continue;
      const auto& c = *p_.costs[e];
      double ze = z[e] + t * d[e];
      double load = others_[e] + ze;
      s += (c.value(load) + ze * c.derivative(load)) * d[e];
    }
    return s;
  }

 private:
  const Game& g_;
  const Player& p_;
  std::vector<double> others_;
};

// Exact line search on [0, hi] for a convex 1-D restriction, by bisection
// on the slope.
inline double line_search(const ResponseObjective& f, const std::vector<double>& z,
                          const std::vector<double>& d, double hi) {
  if (hi <= 0.0) return 0.0;
  if (f.slope(z, d, hi) <= 0.0) return hi;
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1e-3, hi); ++it) {
    double mid = 0.5 * (lo + hi);
    (f.slope(z, d, mid) > 0.0 ? hi : lo) = mid;
  }
  return lo;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

// Player i's best response to the others' loads: pairwise conditional
// gradient on the player's polytope with exact line search, started from the
// current strategy. The linear oracle is the greedy vertex (polymatroid
// players) or the cheapest subset by marginal sums (set-system players).
inline BestResponse best_response(const Game& g, const StrategyProfile& x, std::size_t i,
                                  const SolverParams& params = {}) {
  const auto& p = g.players.at(i);
  const std::size_t m = g.size();
  auto agg = x.aggregate();
  std::vector<double> others(m);
  for (std::size_t e = 0; e < m; ++e) others[e] = agg[e] - x.players[i].load[e];
  detail::ResponseObjective f(g, i, others);

  std::vector<detail::Atom> atoms;
  if (p.is_set_system()) {
    const auto& sets = p.set_system().sets;
    for (std::size_t k = 0; k < sets.size(); ++k) {
      double w = x.players[i].distribution.at(k);
      if (w <= 0.0 || p.demand <= 0.0) continue;
      std::vector<double> v(m, 0.0);
      for (auto e : members(sets[k])) v[e] = p.demand;
      atoms.push_back({std::move(v), static_cast<int>(k), w / p.demand});
    }
    if (atoms.empty()) {
      std::vector<double> v(m, 0.0);
      for (auto e : members(sets.front())) v[e] = p.demand;
      atoms.push_back({std::move(v), 0, 1.0});
    }
  } else {
    for (auto& wv : decompose_into_vertices(p.polymatroid().oracle, x.players[i].load, params.tol)) {
      atoms.push_back({std::move(wv.vertex.values()), -1, wv.weight});
    }
  }

  auto current = [&] {
    std::vector<double> z(m, 0.0);
    for (const auto& a : atoms) {
      for (std::size_t e = 0; e < m; ++e) z[e] += a.weight * a.load[e];
    }
    return z;
  };

  auto lmo = [&](const std::vector<double>& grad) -> detail::Atom {
    if (p.is_set_system()) {
      const auto& sets = p.set_system().sets;
      std::size_t best = 0;
      double best_sum = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < sets.size(); ++k) {
        double s = 0.0;
        for (auto e : members(sets[k])) s += grad[e];
        if (s < best_sum) {
          best_sum = s;
          best = k;
        }
      }
      std::vector<double> v(m, 0.0);
      for (auto e : members(sets[best])) v[e] = p.demand;
      return {std::move(v), static_cast<int>(best), 0.0};
    }
    return {minimize_linear(p.polymatroid().oracle, grad).values(), -1, 0.0};
  };

  auto same_atom = [](const detail::Atom& a, const detail::Atom& b) {
    if (a.set_index >= 0 || b.set_index >= 0) return a.set_index == b.set_index;
    return linf_distance(a.load, b.load) <= 1e-12;
  };

  BestResponse out;
  std::vector<double> grad, d(m);
  std::size_t it = 0;
  for (;; ++it) {
    auto z = current();
    f.gradient(z, grad);
    auto s = lmo(grad);
    double toward = detail::dot(grad, s.load);
    double gap = detail::dot(grad, z) - toward;
    std::size_t away = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      double v = detail::dot(grad, atoms[k].load);
      if (v > worst) {
        worst = v;
        away = k;
      }
    }
    out.gap = gap;
    // The duality gap alone lets a badly priced atom of tiny weight survive,
    // which shows up as a first-order violation; the pairwise gap does not.
    if (gap <= params.gap_tol && worst - toward <= params.active_tol) break;
    if (it >= params.max_iters) {
      throw NoConvergence("best response of player '" + p.id + "' stalled at gap " + detail::sci(gap));
    }
    for (std::size_t e = 0; e < m; ++e) d[e] = s.load[e] - atoms[away].load[e];
    double hi = f.domain_step(z, d, atoms[away].weight);
    double step = detail::line_search(f, z, d, hi);
    if (step <= 0.0) {
      // slope is already nonnegative along the pairwise direction; fall back
      // to a plain conditional-gradient step toward s
      for (std::size_t e = 0; e < m; ++e) d[e] = s.load[e] - z[e];
      double t = detail::line_search(f, z, d, f.domain_step(z, d, 1.0));
      if (t <= 0.0) break;
      for (auto& a : atoms) a.weight *= (1.0 - t);
      s.weight = t;
    } else {
      atoms[away].weight = step >= atoms[away].weight ? 0.0 : atoms[away].weight - step;
      s.weight = step;
    }
    auto hit = std::find_if(atoms.begin(), atoms.end(), [&](const detail::Atom& a) { return same_atom(a, s); });
    if (hit != atoms.end()) {
      hit->weight += s.weight;
    } else {
      atoms.push_back(std::move(s));
    }
    std::erase_if(atoms, [](const detail::Atom& a) { return a.weight <= 1e-15; });
    double total = 0.0;
    for (const auto& a : atoms) total += a.weight;
    for (auto& a : atoms) a.weight /= total;
  }
  out.iterations = it;

  auto z = current();
  out.strategy.load = LoadVector(g.ground, z);
  if (p.is_set_system()) {
    out.strategy.distribution.assign(p.set_system().sets.size(), 0.0);
    for (const auto& a : atoms) out.strategy.distribution[static_cast<std::size_t>(a.set_index)] += a.weight * p.demand;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Equilibrium search

struct EquilibriumSearch {
  StrategyProfile profile;
  EquilibriumReport report;
  std::size_t sweeps = 0;
};

inline PlayerStrategy mix(const PlayerStrategy& a, const PlayerStrategy& b, double lambda) {
  PlayerStrategy out = a;
  for (std::size_t e = 0; e < a.load.size(); ++e) out.load[e] = (1.0 - lambda) * a.load[e] + lambda * b.load[e];
  for (std::size_t k = 0; k < a.distribution.size(); ++k) {
    out.distribution[k] = (1.0 - lambda) * a.distribution[k] + lambda * b.distribution[k];
  }
  return out;
}

// One round-robin sweep x_i <- (1 - lambda) x_i + lambda BR_i; returns the
// largest load change.
inline double best_response_sweep(const Game& g, StrategyProfile& x, double lambda,
                                  const SolverParams& params) {
  double move = 0.0;
  for (std::size_t i = 0; i < g.players.size(); ++i) {
    auto br = best_response(g, x, i, params);
    auto next = mix(x.players[i], br.strategy, lambda);
    move = std::max(move, linf_distance(next.load, x.players[i].load));
    x.players[i] = std::move(next);
  }
  return move;
}

using SweepObserver = std::function<void(std::size_t sweep, const StrategyProfile&)>;

// Damped best-response dynamics. Whenever a sweep moves no load by more than
// move_tol the profile is checked against eq_tol; a short run of undamped
// sweeps is tried first since it usually finishes the last digits faster.
inline EquilibriumSearch find_equilibrium(const Game& g, const StrategyProfile& start,
                                          const SolverParams& params = {},
                                          const SweepObserver& observer = {}) {
  require_feasible(g, start, params.tol);
  if (!(params.damping > 0.0 && params.damping <= 1.0)) throw InvalidSpec("damping must lie in (0, 1]");
  EquilibriumSearch out{start, {}, 0};
  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t sweep = 0; sweep < params.max_sweeps; ++sweep) {
    double move = best_response_sweep(g, out.profile, params.damping, params);
    out.sweeps = sweep + 1;
    if (observer) observer(sweep, out.profile);
    if (move > params.move_tol) continue;
    out.report = is_equilibrium(g, out.profile, params.eq_tol);
    residual = out.report.worst_violation;
    if (out.report.is_equilibrium) return out;
    if (params.damping < 1.0) {
      StrategyProfile polished = out.profile;
      for (std::size_t k = 0; k < params.polish_sweeps; ++k) {
        if (best_response_sweep(g, polished, 1.0, params) > params.move_tol) continue;
        auto rep = is_equilibrium(g, polished, params.eq_tol);
        if (rep.is_equilibrium) {
          out.profile = std::move(polished);
          out.report = std::move(rep);
          return out;
        }
      }
    }
  }
  throw NoConvergence("best-response dynamics did not reach residual " + detail::sci(params.eq_tol) +
                      " within " + std::to_string(params.max_sweeps) + " sweeps (last residual " +
                      detail::sci(residual) + ")");
}

// ---------------------------------------------------------------------------
// Random starts and multiplicity

inline StrategyProfile random_profile(const Game& g, std::mt19937_64& rng) {
  StrategyProfile x;
  for (std::size_t i = 0; i < g.players.size(); ++i) {
    const auto& p = g.players[i];
    if (p.is_set_system()) {
      auto w = detail::dirichlet(rng, p.set_system().sets.size());
      for (auto& v : w) v *= p.demand;
      x.players.push_back(set_strategy(g, i, std::move(w)));
    } else {
      const auto& rho = p.polymatroid().oracle;
      std::vector<std::size_t> order(g.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::size_t k = std::min<std::size_t>(4, g.size());
      auto w = detail::dirichlet(rng, k);
      LoadVector load(g.ground);
      for (std::size_t j = 0; j < k; ++j) {
        std::shuffle(order.begin(), order.end(), rng);
        load += w[j] * greedy_vertex(rho, std::span<const std::size_t>(order));
      }
      x.players.push_back({std::move(load), {}});
    }
  }
  return x;
}

struct StartFailure {
  std::size_t start = 0;
  std::string message;
};

struct DistinctEquilibrium {
  StrategyProfile profile;
  EquilibriumReport report;
  std::vector<std::size_t> starts;  // start indices that reached it
  std::size_t aggregate_class = 0;  // index into distinct aggregate loads
};

struct MultiplicityReport {
  std::vector<DistinctEquilibrium> equilibria;
  std::size_t distinct_aggregate = 0;
  std::vector<StartFailure> failures;
};

// Runs find_equilibrium from every start (in parallel when params.jobs > 1)
// and merges the results in start order. Two equilibria are distinct when
// their load matrices differ by more than tol_distinct in L-inf.
inline MultiplicityReport probe_multiplicity(const Game& g, const std::vector<StrategyProfile>& starts,
                                             const SolverParams& params = {}) {
  std::vector<std::optional<EquilibriumSearch>> results(starts.size());
  std::vector<std::string> errors(starts.size());
  parallel_for(starts.size(), params.jobs, [&](std::size_t k) {
    try {
      results[k] = find_equilibrium(g, starts[k], params);
    } catch (const NoConvergence& e) {
      errors[k] = e.what();
    } catch (const QueueOverload& e) {
      errors[k] = e.what();
    }
  });
  MultiplicityReport rep;
  std::vector<LoadVector> aggregates;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    if (!results[k]) {
      rep.failures.push_back({k, errors[k]});
      continue;
    }
    auto& r = *results[k];
    auto matrix = r.profile.load_matrix();
    auto it = std::find_if(rep.equilibria.begin(), rep.equilibria.end(), [&](const DistinctEquilibrium& d) {
      return linf_distance(d.profile.load_matrix(), matrix) <= params.tol_distinct;
    });
    if (it != rep.equilibria.end()) {
      it->starts.push_back(k);
      continue;
    }
    auto agg = r.profile.aggregate();
    auto cls = std::find_if(aggregates.begin(), aggregates.end(),
                            [&](const LoadVector& a) { return linf_distance(a, agg) <= params.tol_distinct; });
    std::size_t cls_index = static_cast<std::size_t>(cls - aggregates.begin());
    if (cls == aggregates.end()) aggregates.push_back(agg);
    rep.equilibria.push_back({std::move(r.profile), std::move(r.report), {k}, cls_index});
  }
  rep.distinct_aggregate = aggregates.size();
  return rep;
}

}  // namespace polygame
