#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "polygame/error.hpp"
#include "polygame/ground_set.hpp"

namespace polygame {

inline constexpr double kTol = 1e-9;
inline constexpr std::size_t kMaxAxiomGround = 16;
inline constexpr std::size_t kMaxEnumGround = 20;
inline constexpr std::size_t kMaxMemoGround = 16;

// Evaluation oracle for a set function rho: 2^E -> R. Values are memoized by
// subset mask for ground sets up to kMaxMemoGround; the cache is lock-free and
// shared between copies, so a const oracle may be used from several threads.
class SubmodularOracle {
 public:
  using Fn = std::function<double(Mask)>;

  SubmodularOracle() = default;
  SubmodularOracle(GroundSet ground, Fn fn)
      : state_(std::make_shared<State>(std::move(ground), std::move(fn))) {
    state_->total = (*this)(state_->ground.full());
  }

  const GroundSet& ground() const { return state_->ground; }
  std::size_t size() const { return state_->ground.size(); }
  double total() const { return state_->total; }

  double operator()(Mask u) const {
    auto& s = *state_;
    if (!s.memo) return s.fn(u);
    auto& slot = s.memo[u];
    std::uint64_t bits = slot.load(std::memory_order_relaxed);
    if (bits != kUnset) return std::bit_cast<double>(bits);
    double v = s.fn(u);
    slot.store(std::bit_cast<std::uint64_t>(v), std::memory_order_relaxed);
    return v;
  }

  double value(std::span<const std::string> ids) const {
    return (*this)(ground().mask_of(ids));
  }

 private:
  static constexpr std::uint64_t kUnset = ~std::uint64_t{0};

  struct State {
    State(GroundSet g, Fn f) : ground(std::move(g)), fn(std::move(f)) {
      if (!fn) throw InvalidSpec("oracle without evaluation function");
      if (ground.size() <= kMaxMemoGround) {
        std::size_t n = std::size_t{1} << ground.size();
        memo = std::make_unique<std::atomic<std::uint64_t>[]>(n);
        for (std::size_t i = 0; i < n; ++i) memo[i].store(kUnset, std::memory_order_relaxed);
      }
    }
    GroundSet ground;
    Fn fn;
    double total = 0.0;
    std::unique_ptr<std::atomic<std::uint64_t>[]> memo;
  };

  std::shared_ptr<State> state_;
};

inline void require_ground(std::size_t m, std::size_t limit, const char* what) {
  if (m > limit) {
    throw GroundTooLarge(std::string(what) + " enumerates all subsets; ground size " +
                         std::to_string(m) + " exceeds " + std::to_string(limit));
  }
}

inline void require_same_ground(const GroundSet& a, const GroundSet& b) {
  if (!(a == b)) throw InvalidSpec("vectors live on different ground sets");
}

// x(U) for every U, indexed by mask.
inline std::vector<double> subset_sums(std::span<const double> x) {
  std::size_t n = std::size_t{1} << x.size();
  std::vector<double> sums(n, 0.0);
  for (std::size_t u = 1; u < n; ++u) {
    auto low = static_cast<std::size_t>(std::countr_zero(u));
    sums[u] = sums[u & (u - 1)] + x[low];
  }
  return sums;
}

// ---------------------------------------------------------------------------
// Axiom certification

enum class AxiomKind { normalized, monotone, submodular };

inline const char* to_string(AxiomKind k) {
  switch (k) {
    case AxiomKind::normalized: return "normalized";
    case AxiomKind::monotone: return "monotone";
    case AxiomKind::submodular: return "submodular";
  }
  return "?";
}

struct PolymatroidCertificate {
  bool ok = true;
  Mask u = 0;
  Mask v = 0;
  AxiomKind kind = AxiomKind::normalized;
  explicit operator bool() const { return ok; }
};

// Monotonicity and submodularity are checked in their local forms
// (rho(U) <= rho(U+e), rho(U+a)+rho(U+b) >= rho(U+a+b)+rho(U)), which are
// equivalent to the global pairwise statements.
inline PolymatroidCertificate certify_polymatroid(const SubmodularOracle& rho,
                                                  double tol = kTol) {
  const std::size_t m = rho.size();
  require_ground(m, kMaxAxiomGround, "certify_polymatroid");
  if (std::abs(rho(0)) > tol) return {false, 0, 0, AxiomKind::normalized};
  const Mask n = Mask{1} << m;
  for (Mask u = 0; u < n; ++u) {
    for (std::size_t e = 0; e < m; ++e) {
      if (contains(u, e)) continue;
      if (rho(u) > rho(u | bit(e)) + tol) return {false, u, u | bit(e), AxiomKind::monotone};
    }
  }
  for (Mask u = 0; u < n; ++u) {
    for (std::size_t a = 0; a < m; ++a) {
      if (contains(u, a)) continue;
      for (std::size_t b = a + 1; b < m; ++b) {
        if (contains(u, b)) continue;
        Mask ua = u | bit(a), ub = u | bit(b);
        if (rho(ua) + rho(ub) + tol < rho(ua | ub) + rho(u)) {
          return {false, ua, ub, AxiomKind::submodular};
        }
      }
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Base polytope

inline bool in_base_polytope(const SubmodularOracle& rho, const LoadVector& x,
                             double tol = kTol) {
  require_same_ground(rho.ground(), x.ground());
  const std::size_t m = rho.size();
  require_ground(m, kMaxEnumGround, "in_base_polytope");
  for (double v : x.values()) {
    if (v < -tol) return false;
  }
  if (std::abs(x.total() - rho.total()) > tol) return false;
  auto sums = subset_sums(x.values());
  for (Mask u = 1; u < sums.size(); ++u) {
    if (sums[u] > rho(u) + tol) return false;
  }
  return true;
}

inline void require_in_polytope(const SubmodularOracle& rho, const LoadVector& x,
                                double tol, const char* name) {
  if (!in_base_polytope(rho, x, tol)) {
    throw NotInPolytope(std::string(name) + " is not in the base polytope");
  }
}

inline LoadVector greedy_vertex(const SubmodularOracle& rho, std::span<const std::size_t> order) {
  const std::size_t m = rho.size();
  if (order.size() != m) throw InvalidSpec("greedy order is not a permutation of the ground set");
  Mask seen = 0;
  for (auto e : order) {
    if (e >= m || contains(seen, e)) {
      throw InvalidSpec("greedy order is not a permutation of the ground set");
    }
    seen |= bit(e);
  }
  LoadVector x(rho.ground());
  Mask prefix = 0;
  double prev = rho(0);
  for (auto e : order) {
    prefix |= bit(e);
    double cur = rho(prefix);
    x[e] = cur - prev;
    prev = cur;
  }
  return x;
}

inline LoadVector greedy_vertex(const SubmodularOracle& rho, std::span<const std::string> order) {
  std::vector<std::size_t> idx;
  idx.reserve(order.size());
  for (const auto& id : order) idx.push_back(rho.ground().index_of(id));
  return greedy_vertex(rho, std::span<const std::size_t>(idx));
}

// Ascending weight, ties broken by element identifier.
inline std::vector<std::size_t> ascending_order(std::span<const double> weights) {
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] < weights[b]; });
  return order;
}

inline LoadVector minimize_linear(const SubmodularOracle& rho, std::span<const double> weights) {
  if (weights.size() != rho.size()) throw InvalidSpec("weight vector size mismatch");
  auto order = ascending_order(weights);
  return greedy_vertex(rho, std::span<const std::size_t>(order));
}

inline SubmodularOracle scale_oracle(const SubmodularOracle& rho, double d) {
  if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidSpec("scale factor must be a finite d >= 0");
  return SubmodularOracle(rho.ground(), [rho, d](Mask u) { return d * rho(u); });
}

// ---------------------------------------------------------------------------
// Exchange capacities

// c_x(e, e') = max{a : x + a(chi_e' - chi_e) in P} for every ordered pair,
// via min(x_e, min{rho(U) - x(U) : e' in U, e not in U}). Diagonal is zero.
class ExchangeTable {
 public:
  ExchangeTable() = default;
  ExchangeTable(const SubmodularOracle& rho, const LoadVector& x, double tol = kTol)
      : m_(rho.size()), cap_(m_ * m_, std::numeric_limits<double>::infinity()) {
    require_ground(m_, kMaxEnumGround, "exchange capacities");
    require_in_polytope(rho, x, tol, "x");
    auto sums = subset_sums(x.values());
    const Mask full = rho.ground().full();
    for (Mask u = 1; u < full; ++u) {
      double slack = rho(u) - sums[u];
      for (std::size_t ep = 0; ep < m_; ++ep) {
        if (!contains(u, ep)) continue;
        for (std::size_t e = 0; e < m_; ++e) {
          if (contains(u, e)) continue;
          double& c = cap_[e * m_ + ep];
          c = std::min(c, slack);
        }
      }
    }
    for (std::size_t e = 0; e < m_; ++e) {
      for (std::size_t ep = 0; ep < m_; ++ep) {
        double& c = cap_[e * m_ + ep];
        c = e == ep ? 0.0 : std::max(0.0, std::min(c, x[e]));
      }
    }
  }

  std::size_t size() const { return m_; }
  double operator()(std::size_t e, std::size_t ep) const { return cap_[e * m_ + ep]; }

 private:
  std::size_t m_ = 0;
  std::vector<double> cap_;
};

inline double exchange_capacity(const SubmodularOracle& rho, const LoadVector& x, std::size_t e,
                                std::size_t ep, double tol = kTol) {
  const std::size_t m = rho.size();
  require_ground(m, kMaxEnumGround, "exchange_capacity");
  if (e >= m || ep >= m) throw InvalidSpec("exchange element out of range");
  if (e == ep) throw InvalidSpec("exchange_capacity needs two distinct elements");
  require_in_polytope(rho, x, tol, "x");
  double cap = x[e];
  const Mask n = Mask{1} << m;
  for (Mask u = 0; u < n; ++u) {
    if (!contains(u, ep) || contains(u, e)) continue;
    cap = std::min(cap, rho(u) - x.sum(u));
  }
  return std::max(0.0, cap);
}

inline double exchange_capacity(const SubmodularOracle& rho, const LoadVector& x,
                                std::string_view e, std::string_view ep, double tol = kTol) {
  return exchange_capacity(rho, x, rho.ground().index_of(e), rho.ground().index_of(ep), tol);
}

// ---------------------------------------------------------------------------
// Vertex decomposition

struct WeightedVertex {
  LoadVector vertex;
  double weight = 0.0;
};

// Writes x as a convex combination of at most m+1 greedy vertices. Each round
// picks the greedy vertex v for an order that follows a maximal chain of
// x-tight sets (so v lies in the minimal face of x), then moves x away from v
// until a new set becomes tight.
inline std::vector<WeightedVertex> decompose_into_vertices(const SubmodularOracle& rho,
                                                           const LoadVector& x,
                                                           double tol = kTol) {
  const std::size_t m = rho.size();
  require_ground(m, kMaxEnumGround, "decompose_into_vertices");
  require_in_polytope(rho, x, tol, "x");
  std::vector<WeightedVertex> out;
  LoadVector cur = x;
  double remaining = 1.0;
  const Mask full = rho.ground().full();
  const Mask n = Mask{1} << m;
  const double tight_tol = 1e-10 * std::max(1.0, std::abs(rho.total()));

  for (std::size_t round = 0; round <= m + 1; ++round) {
    auto sums = subset_sums(cur.values());
    std::vector<double> slack(n);
    for (Mask u = 0; u < n; ++u) slack[u] = rho(u) - sums[u];

    std::vector<std::size_t> order;
    Mask chain = 0;
    while (chain != full) {
      Mask best = full;
      for (Mask u = 0; u < n; ++u) {
        if ((u & chain) != chain || u == chain || std::abs(slack[u]) > tight_tol) continue;
        if (popcount(u) < popcount(best)) best = u;
      }
      for (auto e : members(best & ~chain)) order.push_back(e);
      chain = best;
    }
    LoadVector v = greedy_vertex(rho, std::span<const std::size_t>(order));
    if (linf_distance(v, cur) <= tol || round == m + 1) {
      out.push_back({std::move(v), remaining});
      break;
    }
    double step = std::numeric_limits<double>::infinity();
    for (Mask u = 1; u < n; ++u) {
      if (slack[u] <= tight_tol) continue;
      double dir = sums[u] - v.sum(u);
      if (dir > 1e-15) step = std::min(step, slack[u] / dir);
    }
    if (!std::isfinite(step)) {
      out.push_back({std::move(v), remaining});
      break;
    }
    double w_vertex = remaining * step / (1.0 + step);
    out.push_back({v, w_vertex});
    remaining -= w_vertex;
    for (std::size_t e = 0; e < m; ++e) cur[e] = cur[e] + step * (cur[e] - v[e]);
  }
  std::erase_if(out, [](const WeightedVertex& w) { return w.weight <= 0.0; });
  return out;
}

}  // namespace polygame
