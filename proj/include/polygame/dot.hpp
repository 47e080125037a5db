#pragma once

#include <cstdio>
#include <sstream>
#include <string>

#include "polygame/exchange.hpp"
#include "polygame/matroid.hpp"

namespace polygame::dot {

namespace detail {

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

// Arcs labelled with capacities; when a flow is given, arcs carrying flow are
// drawn bold with "flow/capacity" labels.
inline std::string exchange_graph(const ExchangeGraph& g, const Flow* flow = nullptr) {
  std::ostringstream os;
  os << "digraph " << (g.kind == ExchangeKind::directed ? "D_x" : "D_xy") << " {\n";
  os << "  node [shape=circle];\n";
  for (const auto& v : g.ground) os << "  " << detail::quote(v) << ";\n";
  for (const auto& a : g.arcs) {
    os << "  " << detail::quote(g.ground[a.from]) << " -> " << detail::quote(g.ground[a.to]);
    double f = flow ? flow->on(a.from, a.to) : 0.0;
    if (f > 0.0) {
      os << " [label=" << detail::quote(detail::num(f) + "/" + detail::num(a.capacity)) << ", style=bold]";
    } else {
      os << " [label=" << detail::quote(detail::num(a.capacity)) << "]";
    }
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

// G(x_i, y_i): source s and sink t around the bidirectional exchange graph.
inline std::string diagnostic_graph(const DiagnosticGraph& d) {
  const auto& g = d.inner.ground;
  std::ostringstream os;
  os << "digraph G_xy {\n  rankdir=LR;\n  s [shape=box];\n  t [shape=box];\n";
  for (const auto& v : g) os << "  " << detail::quote(v) << " [shape=circle];\n";
  for (auto [e, c] : d.source_arcs) {
    os << "  s -> " << detail::quote(g[e]) << " [label=" << detail::quote(detail::num(c)) << "];\n";
  }
  for (const auto& a : d.inner.arcs) {
    os << "  " << detail::quote(g[a.from]) << " -> " << detail::quote(g[a.to]) << " [label="
       << detail::quote(detail::num(d.flow.on(a.from, a.to)) + "/" + detail::num(a.capacity)) << "];\n";
  }
  for (auto [e, c] : d.sink_arcs) {
    os << "  " << detail::quote(g[e]) << " -> t [label=" << detail::quote(detail::num(c)) << "];\n";
  }
  os << "}\n";
  return os.str();
}

inline std::string gammoid(const GammoidSpec& s) {
  std::ostringstream os;
  os << "digraph gammoid {\n";
  std::set<std::string> ground(s.ground.begin(), s.ground.end()), targets(s.targets.begin(), s.targets.end());
  for (const auto& v : s.vertices) {
    os << "  " << detail::quote(v);
    if (targets.count(v)) {
      os << " [shape=doublecircle]";
    } else if (ground.count(v)) {
      os << " [shape=circle]";
    } else {
      os << " [shape=point]";
    }
    os << ";\n";
  }
  for (const auto& [a, b] : s.arcs) os << "  " << detail::quote(a) << " -> " << detail::quote(b) << ";\n";
  os << "}\n";
  return os.str();
}

}  // namespace polygame::dot
