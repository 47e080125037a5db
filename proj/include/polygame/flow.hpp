#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

namespace polygame {

// Dinic's augmenting-path max-flow on integer capacities.
class MaxFlow {
 public:
  using Cap = std::int64_t;

  explicit MaxFlow(std::size_t n) : adj_(n), level_(n), iter_(n) {}

  std::size_t add_node() {
    adj_.emplace_back();
    level_.push_back(0);
    iter_.push_back(0);
    return adj_.size() - 1;
  }

  // Returns an arc handle usable with flow_on().
  std::size_t add_arc(std::size_t from, std::size_t to, Cap cap) {
    arcs_.push_back({to, cap, 0});
    arcs_.push_back({from, 0, 0});
    adj_[from].push_back(arcs_.size() - 2);
    adj_[to].push_back(arcs_.size() - 1);
    return arcs_.size() - 2;
  }

  Cap run(std::size_t s, std::size_t t) {
    Cap total = 0;
    while (bfs(s, t)) {
      std::fill(iter_.begin(), iter_.end(), 0);
      while (Cap f = dfs(s, t, std::numeric_limits<Cap>::max())) total += f;
    }
    return total;
  }

  Cap flow_on(std::size_t arc) const { return arcs_[arc].flow; }
  Cap capacity_of(std::size_t arc) const { return arcs_[arc].cap; }
  std::size_t node_count() const { return adj_.size(); }

  // Nodes reachable from s in the residual graph after run(); the source
  // side of the minimum cut closest to s.
  std::vector<bool> source_side(std::size_t s) const {
    std::vector<bool> seen(adj_.size(), false);
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (auto id : adj_[u]) {
        const auto& a = arcs_[id];
        if (a.cap - a.flow > 0 && !seen[a.to]) {
          seen[a.to] = true;
          stack.push_back(a.to);
        }
      }
    }
    return seen;
  }

 private:
  struct Arc {
    std::size_t to;
    Cap cap;
    Cap flow;
  };

  bool bfs(std::size_t s, std::size_t t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<std::size_t> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto id : adj_[u]) {
        const auto& a = arcs_[id];
        if (a.cap - a.flow > 0 && level_[a.to] < 0) {
          level_[a.to] = level_[u] + 1;
          q.push(a.to);
        }
      }
    }
    return level_[t] >= 0;
  }

  Cap dfs(std::size_t u, std::size_t t, Cap pushed) {
    if (u == t) return pushed;
    for (auto& i = iter_[u]; i < adj_[u].size(); ++i) {
      auto id = adj_[u][i];
      auto& a = arcs_[id];
      if (a.cap - a.flow <= 0 || level_[a.to] != level_[u] + 1) continue;
      if (Cap f = dfs(a.to, t, std::min(pushed, a.cap - a.flow))) {
        a.flow += f;
        arcs_[id ^ 1].flow -= f;
        return f;
      }
    }
    return 0;
  }

  std::vector<Arc> arcs_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> iter_;
};

// Maximum bipartite matching by augmenting paths. adj[l] lists right
// vertices adjacent to left vertex l. Returns match_left (or -1 entries).
inline std::vector<int> max_bipartite_matching(const std::vector<std::vector<int>>& adj,
                                               std::size_t right_size) {
  std::vector<int> match_left(adj.size(), -1), match_right(right_size, -1);
  std::vector<char> visited;
  auto augment = [&](auto&& self, int l) -> bool {
    for (int r : adj[l]) {
      if (visited[r]) continue;
      visited[r] = 1;
      if (match_right[r] < 0 || self(self, match_right[r])) {
        match_left[l] = r;
        match_right[r] = l;
        return true;
      }
    }
    return false;
  };
  for (std::size_t l = 0; l < adj.size(); ++l) {
    visited.assign(right_size, 0);
    augment(augment, static_cast<int>(l));
  }
  return match_left;
}

inline std::size_t matching_size(const std::vector<int>& match_left) {
  return static_cast<std::size_t>(
      std::count_if(match_left.begin(), match_left.end(), [](int r) { return r >= 0; }));
}

}  // namespace polygame
