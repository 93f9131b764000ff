#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "qprop/generators.hpp"
#include "qprop/runner.hpp"

namespace qprop::support {

inline std::string scenario_path(const std::string& file) { return std::string(QPROP_SCENARIO_DIR) + "/" + file; }

inline Scenario bundled(const std::string& file) { return load_scenario(scenario_path(file)); }

inline std::vector<const TraceEvent*> events(const Trace& t, EventKind kind, const std::string& node = {}) {
  std::vector<const TraceEvent*> out;
  for (const auto& e : t.events()) {
    if (e.kind == kind && (node.empty() || e.node.str() == node)) out.push_back(&e);
  }
  return out;
}

inline PropagationValue pv(const std::string& from, Payload value, std::map<std::string, LogicalTime> clocks,
                           LogicalTime fclock) {
  PropagationValue v;
  v.from = NodeId(from);
  v.value = value;
  for (const auto& [s, c] : clocks) v.sclocks[NodeId(s)] = c;
  v.fclock = fclock;
  return v;
}

// Transitive closure by repeated squaring of the boolean edge matrix.
// Kept free of any graph-model traversal so it can judge one.
inline std::map<NodeId, std::set<NodeId>> closure(const Topology& t) {
  std::vector<NodeId> ids(t.nodes().begin(), t.nodes().end());
  const std::size_t n = ids.size();
  std::vector<std::vector<bool>> m(n, std::vector<bool>(n, false));
  for (const auto& e : t.edges()) {
    auto i = std::lower_bound(ids.begin(), ids.end(), e.from) - ids.begin();
    auto j = std::lower_bound(ids.begin(), ids.end(), e.to) - ids.begin();
    m[i][j] = true;
  }
  for (std::size_t len = 1; len < n; len *= 2) {
    auto next = m;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        if (m[i][k])
          for (std::size_t j = 0; j < n; ++j)
            if (m[k][j]) next[i][j] = true;
    m = std::move(next);
  }
  std::map<NodeId, std::set<NodeId>> out;
  for (std::size_t i = 0; i < n; ++i) {
    out[ids[i]];
    for (std::size_t j = 0; j < n; ++j)
      if (m[i][j]) out[ids[i]].insert(ids[j]);
  }
  return out;
}

// Expected routing table per node: source s maps to every direct predecessor
// that s reaches or is.
inline std::map<NodeId, RoutingTable> expected_tables(const Topology& t) {
  auto reach = closure(t);
  std::map<NodeId, RoutingTable> out;
  for (const auto& n : t.nodes()) {
    auto& table = out[n];
    for (const auto& s : t.sources()) {
      for (const auto& p : t.predecessors(n)) {
        if (s == p || reach[s].count(p)) table[s].insert(p);
      }
    }
  }
  return out;
}

inline TopologyOp op_of(const std::string& text) {
  std::vector<std::string> w;
  std::string cur;
  for (char c : text) {
    if (c == ' ') {
      if (!cur.empty()) w.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) w.push_back(cur);
  return parse_op(w, 0, 0);
}

// DAG of 5..10 nodes with 2..4 sources, each emitting 5..20 times at random
// ticks, under seeded random scheduling with small random delays.
inline Scenario random_scenario(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::uint64_t lo, std::uint64_t hi) { return lo + rng() % (hi - lo + 1); };
  const std::size_t n = pick(5, 10);
  const std::size_t sources = std::min<std::size_t>(pick(2, 4), n - 1);
  const double density = 0.25 + 0.05 * static_cast<double>(pick(0, 5));
  auto g = random_dag(n, density, seed, sources);
  Scenario s;
  s.name = "random-" + std::to_string(seed);
  s.topology = g.topology;
  s.specs = g.specs;
  s.delay = pick(0, 3);
  s.latency = pick(0, 3);
  s.scheduler = SchedulerMode::SeededRandom;
  s.seed = seed;
  for (const auto& src : s.topology.sources()) {
    const auto count = pick(5, 20);
    for (std::uint64_t i = 0; i < count; ++i) {
      s.emissions.push_back(ScheduledEmission{pick(0, 200), src, static_cast<Payload>(pick(0, 99))});
    }
  }
  return s;
}

struct Variant {
  std::string name;
  Topology topology;
};

// Every small graph with a join reachable from one source along two paths.
inline std::vector<Variant> diamond_variants() {
  auto g = [](std::vector<std::string> nodes, std::vector<std::pair<std::string, std::string>> edges) {
    std::vector<NodeId> ns;
    for (auto& n : nodes) ns.emplace_back(n);
    std::vector<Edge> es;
    for (auto& [a, b] : edges) es.push_back(Edge{NodeId(a), NodeId(b)});
    return Topology::validate(ns, es);
  };
  return {
      {"triangle", g({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}, {"A", "C"}})},
      {"diamond4", g({"A", "B", "C", "D"}, {{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}})},
      {"diamond4-skew", g({"A", "B", "C", "D"}, {{"A", "B"}, {"B", "C"}, {"C", "D"}, {"A", "D"}})},
      {"diamond4-two-sources", g({"A", "B", "C", "D"}, {{"A", "C"}, {"B", "C"}, {"A", "D"}, {"C", "D"}})},
      {"diamond5-two-sources", diamond5().topology},
      {"diamond5-tail", g({"A", "B", "C", "D", "E"}, {{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}, {"D", "E"}})},
      {"fan3", g({"A", "B", "C", "D", "E"}, {{"A", "B"}, {"A", "C"}, {"A", "D"}, {"B", "E"}, {"C", "E"}, {"D", "E"}})},
      {"shared-one-source",
       g({"A", "B", "C", "D", "E"}, {{"A", "C"}, {"B", "C"}, {"B", "D"}, {"C", "E"}, {"D", "E"}})},
      {"nested", g({"A", "B", "C", "D", "E"}, {{"A", "B"}, {"A", "C"}, {"B", "C"}, {"B", "D"}, {"C", "E"}, {"D", "E"}})},
  };
}

}  // namespace qprop::support
