#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "polygame/error.hpp"
#include "polygame/flow.hpp"
#include "polygame/ground_set.hpp"
#include "polygame/parallel.hpp"
#include "polygame/polymatroid.hpp"

namespace polygame {

// Capacities are scaled to integers before max-flow so feasibility verdicts
// do not depend on float drift.
inline constexpr double kFlowScale = 1e9;
inline constexpr double kConflictThreshold = 1e-6;

enum class ExchangeKind { directed, bidirectional };

struct ExchangeArc {
  std::size_t from = 0;
  std::size_t to = 0;
  double capacity = 0.0;
};

struct ExchangeGraph {
  ExchangeKind kind = ExchangeKind::directed;
  GroundSet ground;
  std::vector<ExchangeArc> arcs;  // sorted by (from, to)

  std::optional<double> capacity(std::size_t e, std::size_t ep) const {
    for (const auto& a : arcs) {
      if (a.from == e && a.to == ep) return a.capacity;
    }
    return std::nullopt;
  }
  bool has_arc(std::size_t e, std::size_t ep) const { return capacity(e, ep).has_value(); }
};

inline ExchangeGraph graph_from_table(ExchangeKind kind, const GroundSet& ground,
                                      const std::function<double(std::size_t, std::size_t)>& cap,
                                      double tol) {
  ExchangeGraph g{kind, ground, {}};
  for (std::size_t e = 0; e < ground.size(); ++e) {
    for (std::size_t ep = 0; ep < ground.size(); ++ep) {
      if (e == ep) continue;
      double c = cap(e, ep);
      if (c > tol) g.arcs.push_back({e, ep, c});
    }
  }
  return g;
}

// D(x): arc (e, e') iff some positive amount can move from e to e' at x.
inline ExchangeGraph build_directed(const SubmodularOracle& rho, const LoadVector& x,
                                    double tol = kTol) {
  ExchangeTable cx(rho, x, tol);
  return graph_from_table(ExchangeKind::directed, rho.ground(),
                          [&](std::size_t e, std::size_t ep) { return cx(e, ep); }, tol);
}

inline ExchangeGraph bidirectional_from_tables(const GroundSet& ground, const ExchangeTable& cx,
                                               const ExchangeTable& cy, double tol) {
  return graph_from_table(
      ExchangeKind::bidirectional, ground,
      [&](std::size_t e, std::size_t ep) { return std::min(cx(e, ep), cy(ep, e)); }, tol);
}

// D(x, y): capacity min(c_x(e, e'), c_y(e', e)), the largest amount that can
// move e -> e' at x while moving e' -> e at y.
inline ExchangeGraph build_bidirectional(const SubmodularOracle& rho, const LoadVector& x,
                                         const LoadVector& y, double tol = kTol) {
  ExchangeTable cx(rho, x, tol);
  ExchangeTable cy(rho, y, tol);
  return bidirectional_from_tables(rho.ground(), cx, cy, tol);
}

// ---------------------------------------------------------------------------
// Flows

struct ElementaryExchange {
  std::size_t from = 0;
  std::size_t to = 0;
  double amount = 0.0;
};

struct Flow {
  GroundSet ground;
  std::map<std::pair<std::size_t, std::size_t>, double> arc_flows;
  std::vector<ElementaryExchange> trace;

  double on(std::size_t e, std::size_t ep) const {
    auto it = arc_flows.find({e, ep});
    return it == arc_flows.end() ? 0.0 : it->second;
  }

  // outflow - inflow per resource; equals the supply x_e - y_e when the
  // flow meets all supplies and demands.
  std::vector<double> net_outflow() const {
    std::vector<double> net(ground.size(), 0.0);
    for (const auto& [arc, f] : arc_flows) {
      net[arc.first] += f;
      net[arc.second] -= f;
    }
    return net;
  }
};

inline std::vector<double> supplies(const LoadVector& x, const LoadVector& y) {
  std::vector<double> s(x.size());
  for (std::size_t e = 0; e < x.size(); ++e) s[e] = x[e] - y[e];
  return s;
}

// Transforms y into x by elementary exchanges found through the strong
// exchange property, recording each exchange as flow on an arc of D(x).
// Deterministic choices: smallest e with x_e > y_e, then smallest e'.
inline Flow directed_flow(const SubmodularOracle& rho, const LoadVector& x, const LoadVector& y,
                          double tol = kTol) {
  require_same_ground(x.ground(), y.ground());
  ExchangeTable cx(rho, x, tol);
  require_in_polytope(rho, y, tol, "y");
  const std::size_t m = rho.size();
  Flow flow{rho.ground(), {}, {}};
  LoadVector cur = y;
  const std::size_t guard = 4 * m * m + 16;

  while (true) {
    std::optional<std::size_t> e;
    for (std::size_t i = 0; i < m; ++i) {
      if (x[i] - cur[i] > tol) {
        e = i;
        break;
      }
    }
    if (!e) break;
    if (flow.trace.size() >= guard) {
      throw ExchangeNotFound("exchange loop did not terminate; oracle may not be submodular");
    }
    ExchangeTable cy(rho, cur, tol);
    std::optional<std::size_t> ep;
    for (std::size_t j = 0; j < m; ++j) {
      if (cur[j] - x[j] > tol && cx(*e, j) > tol && cy(j, *e) > tol) {
        ep = j;
        break;
      }
    }
    if (!ep) {
      throw ExchangeNotFound("no strong exchange partner for '" + rho.ground()[*e] +
                             "'; oracle violates submodularity");
    }
    double alpha = std::min({cx(*e, *ep), cy(*ep, *e), x[*e] - cur[*e], cur[*ep] - x[*ep]});
    cur[*e] += alpha;
    cur[*ep] -= alpha;
    if (std::abs(cur[*e] - x[*e]) <= tol) cur[*e] = x[*e];
    if (std::abs(cur[*ep] - x[*ep]) <= tol) cur[*ep] = x[*ep];
    flow.arc_flows[{*e, *ep}] += alpha;
    flow.trace.push_back({*e, *ep, alpha});
  }
  return flow;
}

// Hoffman-style infeasibility witness: resources on the source side of a
// minimum cut. Their net supply exceeds what the arcs leaving them can carry.
struct CutCertificate {
  std::vector<std::size_t> cut;
  std::vector<std::size_t> supply_nodes;
  std::vector<std::size_t> demand_nodes;
  double supply_in_cut = 0.0;
  double demand_in_cut = 0.0;
  double capacity_out = 0.0;
  double shortfall = 0.0;
};

struct TransshipmentResult {
  bool feasible = false;
  Flow flow;
  std::optional<CutCertificate> certificate;
  // Integer-scaled arc flows, kept for exact path decomposition.
  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> scaled_flows;
  std::vector<std::int64_t> scaled_supply;
};

inline std::int64_t to_scaled(double v) { return std::llround(v * kFlowScale); }

// Supplies (positive) and demands (negative) routed through `graph` by
// max-flow from a super-source to a super-sink.
inline TransshipmentResult solve_transshipment(const ExchangeGraph& graph,
                                               const std::vector<double>& supply) {
  const std::size_t m = graph.ground.size();
  MaxFlow net(m + 2);
  const std::size_t s = m, t = m + 1;
  TransshipmentResult res;
  res.scaled_supply.resize(m);
  std::int64_t total_demand = 0;
  for (std::size_t e = 0; e < m; ++e) {
    std::int64_t q = to_scaled(supply[e]);
    res.scaled_supply[e] = q;
    if (q > 0) net.add_arc(s, e, q);
    if (q < 0) {
      net.add_arc(e, t, -q);
      total_demand += -q;
    }
  }
  std::vector<std::size_t> handles;
  for (const auto& a : graph.arcs) handles.push_back(net.add_arc(a.from, a.to, to_scaled(a.capacity)));
  std::int64_t value = net.run(s, t);
  double deficit = static_cast<double>(total_demand - value) / kFlowScale;

  res.flow.ground = graph.ground;
  for (std::size_t i = 0; i < graph.arcs.size(); ++i) {
    std::int64_t f = net.flow_on(handles[i]);
    if (f > 0) {
      const auto& a = graph.arcs[i];
      res.scaled_flows[{a.from, a.to}] = f;
      res.flow.arc_flows[{a.from, a.to}] = static_cast<double>(f) / kFlowScale;
    }
  }
  res.feasible = deficit <= kConflictThreshold;
  if (!res.feasible) {
    auto side = net.source_side(s);
    CutCertificate c;
    for (std::size_t e = 0; e < m; ++e) {
      if (!side[e]) continue;
      c.cut.push_back(e);
      if (supply[e] > 0) {
        c.supply_nodes.push_back(e);
        c.supply_in_cut += supply[e];
      } else if (supply[e] < 0) {
        c.demand_nodes.push_back(e);
        c.demand_in_cut += -supply[e];
      }
    }
    for (const auto& a : graph.arcs) {
      if (side[a.from] && !side[a.to]) c.capacity_out += a.capacity;
    }
    c.shortfall = deficit;
    res.certificate = std::move(c);
  }
  return res;
}

struct BidirectionalResult {
  bool feasible = false;
  ExchangeGraph graph;
  std::vector<double> supply;
  Flow flow;
  std::optional<CutCertificate> certificate;
  explicit operator bool() const { return feasible; }
};

inline BidirectionalResult bidirectional_from_tables(const GroundSet& ground, const ExchangeTable& cx,
                                                     const ExchangeTable& cy,
                                                     std::vector<double> supply, double tol) {
  BidirectionalResult r;
  r.graph = bidirectional_from_tables(ground, cx, cy, tol);
  auto ts = solve_transshipment(r.graph, supply);
  r.feasible = ts.feasible;
  r.flow = std::move(ts.flow);
  r.certificate = std::move(ts.certificate);
  r.supply = std::move(supply);
  return r;
}

// Flow in D(x, y) meeting supplies x_e - y_e, or a cut proving that x and y
// are conflicting strategies.
inline BidirectionalResult bidirectional_flow(const SubmodularOracle& rho, const LoadVector& x,
                                              const LoadVector& y, double tol = kTol) {
  require_same_ground(x.ground(), y.ground());
  ExchangeTable cx(rho, x, tol);
  ExchangeTable cy(rho, y, tol);
  return bidirectional_from_tables(rho.ground(), cx, cy, supplies(x, y), tol);
}

// ---------------------------------------------------------------------------
// Diagnostic graph G(x_i, y_i)

struct DiagnosticPath {
  std::vector<std::size_t> resources;  // e_1 .. e_k between s_i and t_i
  double amount = 0.0;
};

struct DiagnosticGraph {
  ExchangeGraph inner;
  std::vector<std::pair<std::size_t, double>> source_arcs;  // s_i -> e, e in E^{i,+}
  std::vector<std::pair<std::size_t, double>> sink_arcs;    // e -> t_i, e in E^{i,-}
  Flow flow;                                                // inner part of f'
  std::vector<DiagnosticPath> paths;
};

inline DiagnosticGraph build_diagnostic(const SubmodularOracle& rho, const LoadVector& x,
                                        const LoadVector& y, double tol = kTol) {
  require_same_ground(x.ground(), y.ground());
  ExchangeTable cx(rho, x, tol);
  ExchangeTable cy(rho, y, tol);
  DiagnosticGraph d;
  d.inner = bidirectional_from_tables(rho.ground(), cx, cy, tol);
  auto supply = supplies(x, y);
  const std::size_t m = rho.size();
  for (std::size_t e = 0; e < m; ++e) {
    if (supply[e] > tol) d.source_arcs.emplace_back(e, supply[e]);
    if (supply[e] < -tol) d.sink_arcs.emplace_back(e, -supply[e]);
  }
  auto ts = solve_transshipment(d.inner, supply);
  if (!ts.feasible) {
    throw ConflictingStrategies("no bidirectional flow exists between the two strategies");
  }
  d.flow = ts.flow;

  // f' on G: s -> e and e -> t carry the scaled supply, inner arcs the flow.
  const std::size_t s = m, t = m + 1;
  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> rem = ts.scaled_flows;
  for (std::size_t e = 0; e < m; ++e) {
    std::int64_t out = 0, in = 0;
    for (const auto& [arc, f] : ts.scaled_flows) {
      if (arc.first == e) out += f;
      if (arc.second == e) in += f;
    }
    // supply actually routed through e (can differ from the rounded supply
    // by at most the feasibility threshold)
    std::int64_t through = out - in;
    if (through > 0) rem[{s, e}] = through;
    if (through < 0) rem[{e, t}] = -through;
  }
  auto next_arc = [&](std::size_t u) -> std::optional<std::size_t> {
    auto it = rem.lower_bound({u, 0});
    for (; it != rem.end() && it->first.first == u; ++it) {
      if (it->second > 0) return it->first.second;
    }
    return std::nullopt;
  };
  while (auto first = next_arc(s)) {
    std::vector<std::size_t> walk{s};
    std::vector<int> pos(m + 2, -1);
    pos[s] = 0;
    std::size_t u = s;
    while (u != t) {
      auto v = next_arc(u);
      if (!v) throw ConflictingStrategies("flow decomposition hit an unbalanced node");
      if (pos[*v] >= 0) {
        // cancel the cycle v -> ... -> u -> v
        std::vector<std::size_t> cyc(walk.begin() + pos[*v], walk.end());
        cyc.push_back(*v);
        std::int64_t b = std::numeric_limits<std::int64_t>::max();
        for (std::size_t k = 0; k + 1 < cyc.size(); ++k) b = std::min(b, rem[{cyc[k], cyc[k + 1]}]);
        for (std::size_t k = 0; k + 1 < cyc.size(); ++k) rem[{cyc[k], cyc[k + 1]}] -= b;
        for (std::size_t k = static_cast<std::size_t>(pos[*v]) + 1; k < walk.size(); ++k) pos[walk[k]] = -1;
        walk.resize(static_cast<std::size_t>(pos[*v]) + 1);
        u = *v;
        continue;
      }
      pos[*v] = static_cast<int>(walk.size());
      walk.push_back(*v);
      u = *v;
    }
    std::int64_t b = std::numeric_limits<std::int64_t>::max();
    for (std::size_t k = 0; k + 1 < walk.size(); ++k) b = std::min(b, rem[{walk[k], walk[k + 1]}]);
    for (std::size_t k = 0; k + 1 < walk.size(); ++k) rem[{walk[k], walk[k + 1]}] -= b;
    d.paths.push_back({std::vector<std::size_t>(walk.begin() + 1, walk.end() - 1),
                       static_cast<double>(b) / kFlowScale});
  }
  return d;
}

// ---------------------------------------------------------------------------
// Bidirectional-property probe

struct ConflictWitness {
  LoadVector x;
  LoadVector y;
  CutCertificate certificate;
  bool at_vertices = false;
};

struct BidirectionalProbeReport {
  std::size_t vertex_count = 0;
  std::size_t pairs_tested = 0;
  std::vector<ConflictWitness> conflicts;
};

namespace detail {

inline std::vector<std::int64_t> vertex_key(const LoadVector& v) {
  std::vector<std::int64_t> k;
  for (double x : v.values()) k.push_back(std::llround(x * 1e9));
  return k;
}

inline std::vector<double> dirichlet(std::mt19937_64& rng, std::size_t k) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<double> w(k);
  double s = 0.0;
  for (auto& v : w) s += (v = gamma(rng));
  for (auto& v : w) v /= s;
  return w;
}

}  // namespace detail

inline constexpr std::size_t kFullPermutationGround = 8;

// Greedy vertices for every permutation (m <= 8) or for sampled permutations,
// deduplicated, in first-seen order.
inline std::vector<LoadVector> collect_vertices(const SubmodularOracle& rho, std::mt19937_64& rng,
                                                std::size_t sampled_orders = 200) {
  const std::size_t m = rho.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::set<std::vector<std::int64_t>> seen;
  std::vector<LoadVector> out;
  auto add = [&] {
    auto v = greedy_vertex(rho, std::span<const std::size_t>(order));
    if (seen.insert(detail::vertex_key(v)).second) out.push_back(std::move(v));
  };
  if (m <= kFullPermutationGround) {
    do add();
    while (std::next_permutation(order.begin(), order.end()));
  } else {
    for (std::size_t i = 0; i < sampled_orders; ++i) {
      std::shuffle(order.begin(), order.end(), rng);
      add();
    }
  }
  return out;
}

// Tests every vertex pair and `samples` random interior pairs (Dirichlet
// combinations of 2..4 vertices) for a bidirectional flow. A clean report is
// evidence, not proof.
inline BidirectionalProbeReport probe_bidirectional_property(const SubmodularOracle& rho,
                                                             std::size_t samples,
                                                             std::uint64_t seed,
                                                             std::size_t jobs = 1,
                                                             double tol = kTol) {
  require_ground(rho.size(), kMaxEnumGround, "probe_bidirectional_property");
  std::mt19937_64 rng(seed);
  auto vertices = collect_vertices(rho, rng, std::max<std::size_t>(samples, 200));
  BidirectionalProbeReport report;
  report.vertex_count = vertices.size();

  std::vector<ExchangeTable> tables(vertices.size());
  parallel_for(vertices.size(), jobs, [&](std::size_t i) { tables[i] = ExchangeTable(rho, vertices[i], tol); });

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    for (std::size_t j = i + 1; j < vertices.size(); ++j) pairs.emplace_back(i, j);
  }

  std::vector<std::pair<LoadVector, LoadVector>> interior;
  if (!vertices.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, vertices.size() - 1);
    std::uniform_int_distribution<std::size_t> count(2, 4);
    auto sample_point = [&] {
      std::size_t k = count(rng);
      auto w = detail::dirichlet(rng, k);
      LoadVector p(rho.ground());
      for (std::size_t j = 0; j < k; ++j) p += w[j] * vertices[pick(rng)];
      return p;
    };
    for (std::size_t i = 0; i < samples; ++i) {
      auto a = sample_point();
      auto b = sample_point();
      interior.emplace_back(std::move(a), std::move(b));
    }
  }

  const std::size_t total = pairs.size() + interior.size();
  std::vector<std::optional<ConflictWitness>> found(total);
  parallel_for(total, jobs, [&](std::size_t k) {
    if (k < pairs.size()) {
      auto [i, j] = pairs[k];
      auto r = bidirectional_from_tables(rho.ground(), tables[i], tables[j],
                                         supplies(vertices[i], vertices[j]), tol);
      if (!r.feasible) found[k] = ConflictWitness{vertices[i], vertices[j], *r.certificate, true};
    } else {
      const auto& [x, y] = interior[k - pairs.size()];
      auto r = bidirectional_flow(rho, x, y, tol);
      if (!r.feasible) found[k] = ConflictWitness{x, y, *r.certificate, false};
    }
  });
  report.pairs_tested = total;
  for (auto& f : found) {
    if (f) report.conflicts.push_back(std::move(*f));
  }
  return report;
}

}  // namespace polygame
