#include "qprop/oracles.hpp"

#include <algorithm>
#include <deque>
#include <tuple>

namespace qprop {

nlohmann::json to_json(const Verdict& v) {
  auto witness = nlohmann::json::array();
  for (const auto& e : v.witness) witness.push_back(to_json(e));
  nlohmann::json j{{"property", v.property}, {"holds", v.holds}, {"witness", witness}};
  if (!v.detail.empty()) j["detail"] = v.detail;
  return j;
}

nlohmann::json to_json(const StallReport& r) {
  auto suspects = nlohmann::json::array();
  for (const auto& n : r.suspects) suspects.push_back(n.str());
  auto idle = nlohmann::json::object();
  for (const auto& [n, c] : r.idle_deliveries) idle[n.str()] = c;
  return {{"window", r.window}, {"suspects", suspects}, {"idleDeliveries", idle}};
}

// ---------------------------------------------------------------------------

TopologyTimeline::TopologyTimeline(const Topology& initial) : nodes_(initial.nodes()) {
  for (const auto& e : initial.edges()) edges_.emplace(e.from, e.to);
}

void TopologyTimeline::add_edge(const NodeId& from, const NodeId& to) { edges_.emplace(from, to); }

void TopologyTimeline::apply(const TraceEvent& e) {
  if (e.kind != EventKind::TopologyOp) return;
  try {
    const auto& p = e.payload;
    const std::string op = p.at("op").get<std::string>();
    const std::string phase = p.value("phase", std::string("done"));
    if (op == "init") {
      nodes_.clear();
      edges_.clear();
      for (const auto& n : p.at("nodes")) nodes_.insert(NodeId(n.get<std::string>()));
      for (const auto& ed : p.at("edges")) edges_.emplace(NodeId(ed.at(0).get<std::string>()), NodeId(ed.at(1).get<std::string>()));
      return;
    }
    NodeId node(p.at("node").get<std::string>());
    if (phase == "begin") {
      auto& added = pending_edges_[node];
      added.clear();
      pending_node_[node] = false;
      if (op == "add-dependency") {
        NodeId pred(p.at("pred").get<std::string>());
        if (!edges_.count({pred, node})) {
          add_edge(pred, node);
          added.emplace_back(pred, node);
        }
      } else if (op == "add-node") {
        if (nodes_.insert(node).second) pending_node_[node] = true;
        for (const auto& x : p.at("preds")) {
          NodeId pred(x.get<std::string>());
          add_edge(pred, node);
          added.emplace_back(pred, node);
        }
        for (const auto& x : p.at("succs")) {
          NodeId succ(x.get<std::string>());
          add_edge(node, succ);
          added.emplace_back(node, succ);
        }
      }
    } else if (phase == "done") {
      if (op == "remove-dependency") {
        edges_.erase({NodeId(p.at("pred").get<std::string>()), node});
      } else if (op == "remove-node") {
        nodes_.erase(node);
        std::erase_if(edges_, [&](const auto& ed) { return ed.first == node || ed.second == node; });
      }
      pending_edges_.erase(node);
      pending_node_.erase(node);
    } else if (phase == "aborted") {
      for (const auto& ed : pending_edges_[node]) edges_.erase(ed);
      if (pending_node_[node]) nodes_.erase(node);
      pending_edges_.erase(node);
      pending_node_.erase(node);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw OracleError(OracleError::Kind::MalformedTrace,
                      "topology event #" + std::to_string(e.seq) + " is malformed: " + ex.what());
  }
}

bool TopologyTimeline::reaches_or_is(const NodeId& x, const NodeId& y) const {
  if (x == y) return true;
  std::set<NodeId> seen{x};
  std::deque<NodeId> todo{x};
  while (!todo.empty()) {
    NodeId cur = todo.front();
    todo.pop_front();
    for (auto it = edges_.lower_bound({cur, NodeId()}); it != edges_.end() && it->first == cur; ++it) {
      if (it->second == y) return true;
      if (seen.insert(it->second).second) todo.push_back(it->second);
    }
  }
  return false;
}

std::set<NodeId> TopologyTimeline::successors(const NodeId& n) const {
  std::set<NodeId> out;
  for (auto it = edges_.lower_bound({n, NodeId()}); it != edges_.end() && it->first == n; ++it) out.insert(it->second);
  return out;
}

std::set<NodeId> TopologyTimeline::sinks() const {
  std::set<NodeId> has_out;
  std::set<NodeId> has_in;
  for (const auto& [a, b] : edges_) {
    has_out.insert(a);
    has_in.insert(b);
  }
  std::set<NodeId> out;
  for (const auto& n : nodes_) {
    if (!has_out.count(n) && has_in.count(n)) out.insert(n);
  }
  return out;
}

// ---------------------------------------------------------------------------

PropagationValue event_value(const TraceEvent& e) {
  try {
    return e.payload.at("value").get<PropagationValue>();
  } catch (const nlohmann::json::exception& ex) {
    throw OracleError(OracleError::Kind::MalformedTrace,
                      "event #" + std::to_string(e.seq) + " has no readable value: " + ex.what());
  }
}

std::vector<PropagationValue> update_args(const TraceEvent& e) {
  if (!e.payload.contains("args")) {
    throw OracleError(OracleError::Kind::MalformedTrace,
                      "update #" + std::to_string(e.seq) + " at " + e.node.str() + " records no arguments");
  }
  try {
    return e.payload.at("args").get<std::vector<PropagationValue>>();
  } catch (const nlohmann::json::exception& ex) {
    throw OracleError(OracleError::Kind::MalformedTrace,
                      "update #" + std::to_string(e.seq) + " has unreadable arguments: " + ex.what());
  }
}

namespace {

TraceEvent snapshot_event(const NodeId& node, nlohmann::json payload) {
  TraceEvent e;
  e.kind = EventKind::Update;
  e.node = node;
  e.payload = std::move(payload);
  return e;
}

}  // namespace

Verdict check_glitch_freedom(const Trace& trace, const Topology& topology) {
  Verdict v{"glitchFreedom", true, {}, {}};
  TopologyTimeline graph(topology);
  for (const auto& e : trace.events()) {
    if (e.kind == EventKind::TopologyOp) {
      graph.apply(e);
      continue;
    }
    if (e.kind != EventKind::Update) continue;
    auto args = update_args(e);
    for (std::size_t i = 0; i < args.size(); ++i) {
      for (std::size_t j = i + 1; j < args.size(); ++j) {
        for (const auto& [s, ci] : args[i].sclocks) {
          auto cj = args[j].sclocks.find(s);
          if (cj == args[j].sclocks.end() || cj->second == ci) continue;
          if (!graph.reaches_or_is(s, args[i].from) || !graph.reaches_or_is(s, args[j].from)) continue;
          v.holds = false;
          v.witness = {e};
          v.detail = e.node.str() + " combined " + to_string(args[i]) + " with " + to_string(args[j]) +
                     ": unequal clocks for common source " + s.str();
          return v;
        }
      }
    }
  }
  return v;
}

Verdict check_monotonicity(const Trace& trace) {
  Verdict v{"monotonicity", true, {}, {}};
  struct Seen {
    LogicalTime clock;
    const TraceEvent* event;
  };
  // (node, predecessor, source) -> last clock used
  std::map<std::tuple<NodeId, NodeId, NodeId>, Seen> last;
  for (const auto& e : trace.events()) {
    if (e.kind != EventKind::Update) continue;
    for (const auto& arg : update_args(e)) {
      for (const auto& [s, c] : arg.sclocks) {
        auto key = std::make_tuple(e.node, arg.from, s);
        auto it = last.find(key);
        if (it != last.end() && c < it->second.clock) {
          v.holds = false;
          v.witness = {*it->second.event, e};
          v.detail = e.node.str() + " used " + s.str() + "=" + std::to_string(c) + " from " + arg.from.str() +
                     " after having used " + std::to_string(it->second.clock);
          return v;
        }
        last[key] = Seen{c, &e};
      }
    }
  }
  return v;
}

Verdict check_consistency(const std::map<NodeId, PropagationValue>& last_props,
                          const std::map<NodeId, LogicalTime>& source_clocks, const Topology& topology,
                          bool quiescent) {
  if (!quiescent) throw OracleError(OracleError::Kind::NotQuiescent, "consistency is only defined once the run quiesced");
  Verdict v{"consistency", true, {}, {}};
  for (const auto& s : topology.sources()) {
    auto final_it = source_clocks.find(s);
    LogicalTime final_clock = final_it == source_clocks.end() ? 0 : final_it->second;
    for (const auto& n : topology.nodes()) {
      if (!reaches(topology, s, n)) continue;
      auto lp = last_props.find(n);
      if (lp == last_props.end()) {
        v.holds = false;
        v.witness = {snapshot_event(n, {{"source", s.str()}, {"expected", final_clock}})};
        v.detail = n.str() + " has no value";
        return v;
      }
      LogicalTime seen = clock_of(lp->second, s).value_or(0);
      if (seen != final_clock) {
        v.holds = false;
        v.witness = {snapshot_event(n, {{"value", lp->second}, {"source", s.str()}, {"expected", final_clock}})};
        v.detail = n.str() + " reflects " + s.str() + "=" + std::to_string(seen) + " but the source's final clock is " +
                   std::to_string(final_clock);
        return v;
      }
    }
  }
  return v;
}

Verdict check_exploration(const Topology& topology,
                          const std::map<NodeId, std::map<NodeId, std::set<NodeId>>>& tables) {
  Verdict v{"exploration", true, {}, {}};
  auto render = [](const std::map<NodeId, std::set<NodeId>>& t) {
    auto j = nlohmann::json::object();
    for (const auto& [s, preds] : t) j[s.str()] = ids_to_json(preds);
    return j;
  };
  for (const auto& n : topology.nodes()) {
    std::map<NodeId, std::set<NodeId>> expected;
    for (const auto& dp : topology.predecessors(n)) {
      for (const auto& s : topology.sources()) {
        if (s == dp || reaches(topology, s, dp)) expected[s].insert(dp);
      }
    }
    auto it = tables.find(n);
    std::map<NodeId, std::set<NodeId>> actual = it == tables.end() ? std::map<NodeId, std::set<NodeId>>{} : it->second;
    if (actual != expected) {
      v.holds = false;
      v.witness = {snapshot_event(n, {{"expected", render(expected)}, {"actual", render(actual)}})};
      v.detail = n.str() + " routing table " + render(actual).dump() + " differs from " + render(expected).dump();
      return v;
    }
  }
  return v;
}

std::int64_t count_concurrent_interactions(const Trace& trace, const Topology& topology) {
  TopologyTimeline graph(topology);
  std::vector<NodeId> emits;
  std::map<NodeId, std::int64_t> sink_updates;
  for (const auto& e : trace.events()) {
    if (e.kind == EventKind::TopologyOp) {
      graph.apply(e);
    } else if (e.kind == EventKind::SourceEmit) {
      emits.push_back(e.node);
    } else if (e.kind == EventKind::Update) {
      ++sink_updates[e.node];
    }
  }
  std::int64_t generated = 0;
  std::int64_t processed = 0;
  for (const auto& k : graph.sinks()) {
    processed += sink_updates[k];
    for (const auto& s : emits) {
      if (s != k && graph.reaches_or_is(s, k)) ++generated;
    }
  }
  return generated - processed;
}

StallReport detect_stall(const Trace& trace, std::size_t window) {
  StallReport r;
  r.window = window;
  std::map<NodeId, std::size_t> idle;
  std::map<NodeId, bool> stocked;
  for (const auto& e : trace.events()) {
    if (e.kind == EventKind::Update) {
      idle[e.node] = 0;
    } else if (e.kind == EventKind::Deliver) {
      ++idle[e.node];
      bool all = false;
      if (auto in = e.payload.find("inputs"); in != e.payload.end() && in->is_object() && !in->empty()) {
        all = std::all_of(in->begin(), in->end(), [](const nlohmann::json& c) { return c.get<std::size_t>() > 0; });
      }
      stocked[e.node] = all;
    }
  }
  for (const auto& [n, count] : idle) {
    if (window > 0 && count >= window && stocked[n]) {
      r.suspects.push_back(n);
      r.idle_deliveries[n] = count;
    }
  }
  return r;
}

}  // namespace qprop
