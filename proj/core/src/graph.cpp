#include "qprop/graph.hpp"

#include <algorithm>
#include <ostream>
#include <queue>
#include <utility>

namespace qprop {

std::ostream& operator<<(std::ostream& os, const NodeId& id) { return os << id.str(); }

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Source:
      return "Source";
    case NodeKind::Intermediate:
      return "Intermediate";
    case NodeKind::Sink:
      return "Sink";
  }
  return "?";
}

namespace {

const std::set<NodeId> kEmpty;

std::string join_path(const std::vector<NodeId>& path) {
  std::string out;
  for (const auto& n : path) {
    if (!out.empty()) out += " -> ";
    out += n.str();
  }
  return out;
}

// Iterative DFS; returns one cycle (first node repeated last) or empty.
std::vector<NodeId> find_cycle(const std::set<NodeId>& nodes, const std::map<NodeId, std::set<NodeId>>& succs) {
  enum class Color { White, Grey, Black };
  std::map<NodeId, Color> color;
  for (const auto& n : nodes) color[n] = Color::White;

  struct Frame {
    NodeId node;
    std::set<NodeId>::const_iterator next;
    std::set<NodeId>::const_iterator end;
  };

  for (const auto& root : nodes) {
    if (color[root] != Color::White) continue;
    std::vector<Frame> stack;
    const auto& rs = succs.at(root);
    stack.push_back({root, rs.begin(), rs.end()});
    color[root] = Color::Grey;
    while (!stack.empty()) {
      auto& top = stack.back();
      if (top.next == top.end) {
        color[top.node] = Color::Black;
        stack.pop_back();
        continue;
      }
      NodeId child = *top.next++;
      if (color[child] == Color::Grey) {
        std::vector<NodeId> cycle;
        auto it = std::find_if(stack.begin(), stack.end(), [&](const Frame& f) { return f.node == child; });
        for (; it != stack.end(); ++it) cycle.push_back(it->node);
        cycle.push_back(child);
        return cycle;
      }
      if (color[child] == Color::White) {
        color[child] = Color::Grey;
        const auto& cs = succs.at(child);
        stack.push_back({child, cs.begin(), cs.end()});
      }
    }
  }
  return {};
}

void require_node(const Topology& t, const NodeId& n) {
  if (!t.contains(n)) throw GraphError(GraphError::Kind::UnknownNode, "unknown node '" + n.str() + "'");
}

}  // namespace

Topology Topology::validate(const std::vector<NodeId>& nodes, const std::vector<Edge>& edges) {
  Topology t;
  for (const auto& n : nodes) {
    if (n.empty()) throw GraphError(GraphError::Kind::DanglingEdge, "empty node id");
    if (!t.nodes_.insert(n).second) {
      throw GraphError(GraphError::Kind::DuplicateNode, "duplicate node '" + n.str() + "'");
    }
    t.preds_[n];
    t.succs_[n];
  }
  for (const auto& e : edges) {
    if (!t.contains(e.from) || !t.contains(e.to)) {
      throw GraphError(GraphError::Kind::DanglingEdge,
                       "edge " + e.from.str() + " -> " + e.to.str() + " names a node outside the node set");
    }
    if (e.from == e.to) {
      throw GraphError(GraphError::Kind::CycleDetected, "self edge on '" + e.from.str() + "'", {e.from, e.to});
    }
    if (!t.edges_.insert(e).second) {
      throw GraphError(GraphError::Kind::DuplicateEdge, "duplicate edge " + e.from.str() + " -> " + e.to.str());
    }
    t.succs_[e.from].insert(e.to);
    t.preds_[e.to].insert(e.from);
  }
  auto cycle = find_cycle(t.nodes_, t.succs_);
  if (!cycle.empty()) {
    throw GraphError(GraphError::Kind::CycleDetected, "cycle detected: " + join_path(cycle), cycle);
  }
  return t;
}

const std::set<NodeId>& Topology::predecessors(const NodeId& n) const {
  require_node(*this, n);
  auto it = preds_.find(n);
  return it == preds_.end() ? kEmpty : it->second;
}

const std::set<NodeId>& Topology::successors(const NodeId& n) const {
  require_node(*this, n);
  auto it = succs_.find(n);
  return it == succs_.end() ? kEmpty : it->second;
}

std::vector<NodeId> Topology::sources() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (preds_.at(n).empty()) out.push_back(n);
  }
  return out;
}

std::vector<NodeId> Topology::sinks() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (succs_.at(n).empty()) out.push_back(n);
  }
  return out;
}

std::vector<NodeId> Topology::topological_order() const {
  std::map<NodeId, std::size_t> indeg;
  std::set<NodeId> ready;
  for (const auto& n : nodes_) {
    indeg[n] = preds_.at(n).size();
    if (indeg[n] == 0) ready.insert(n);
  }
  std::vector<NodeId> order;
  while (!ready.empty()) {
    NodeId n = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(n);
    for (const auto& s : succs_.at(n)) {
      if (--indeg[s] == 0) ready.insert(s);
    }
  }
  return order;
}

Topology Topology::with_edge(const NodeId& from, const NodeId& to) const {
  std::vector<NodeId> ns(nodes_.begin(), nodes_.end());
  std::vector<Edge> es(edges_.begin(), edges_.end());
  es.push_back({from, to});
  return validate(ns, es);
}

Topology Topology::without_edge(const NodeId& from, const NodeId& to) const {
  Topology t = *this;
  if (t.edges_.erase(Edge{from, to}) == 0) {
    throw GraphError(GraphError::Kind::DanglingEdge, "no edge " + from.str() + " -> " + to.str());
  }
  t.succs_[from].erase(to);
  t.preds_[to].erase(from);
  return t;
}

Topology Topology::with_node(const NodeId& n) const {
  std::vector<NodeId> ns(nodes_.begin(), nodes_.end());
  ns.push_back(n);
  std::vector<Edge> es(edges_.begin(), edges_.end());
  return validate(ns, es);
}

Topology Topology::without_node(const NodeId& n) const {
  require_node(*this, n);
  std::vector<NodeId> ns;
  for (const auto& m : nodes_) {
    if (m != n) ns.push_back(m);
  }
  std::vector<Edge> es;
  for (const auto& e : edges_) {
    if (e.from != n && e.to != n) es.push_back(e);
  }
  return validate(ns, es);
}

NodeKind classify(const Topology& topology, const NodeId& node) {
  const auto& p = topology.predecessors(node);
  const auto& s = topology.successors(node);
  if (p.empty()) return NodeKind::Source;
  if (s.empty()) return NodeKind::Sink;
  return NodeKind::Intermediate;
}

bool reaches(const Topology& topology, const NodeId& x, const NodeId& y) {
  require_node(topology, x);
  require_node(topology, y);
  std::set<NodeId> seen;
  std::vector<NodeId> stack(topology.successors(x).begin(), topology.successors(x).end());
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    if (n == y) return true;
    if (!seen.insert(n).second) continue;
    for (const auto& s : topology.successors(n)) stack.push_back(s);
  }
  return false;
}

Reachability::Reachability(const Topology& topology) {
  auto order = topology.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto& d = desc_[*it];
    for (const auto& s : topology.successors(*it)) {
      d.insert(s);
      const auto& ds = desc_[s];
      d.insert(ds.begin(), ds.end());
    }
  }
}

bool Reachability::reaches(const NodeId& x, const NodeId& y) const {
  auto it = desc_.find(x);
  return it != desc_.end() && it->second.count(y) != 0;
}

const std::set<NodeId>& Reachability::descendants(const NodeId& x) const {
  auto it = desc_.find(x);
  return it == desc_.end() ? kEmpty : it->second;
}

PropagationPath::PropagationPath(NodeId source, std::vector<NodeId> members, std::map<NodeId, std::set<NodeId>> below)
    : source_(std::move(source)), members_(std::move(members)), below_(std::move(below)) {}

bool PropagationPath::contains(const NodeId& n) const {
  return std::find(members_.begin(), members_.end(), n) != members_.end();
}

bool PropagationPath::precedes(const NodeId& a, const NodeId& b) const {
  auto it = below_.find(a);
  return it != below_.end() && it->second.count(b) != 0;
}

PropagationPath propagation_path(const Topology& topology, const NodeId& source) {
  if (classify(topology, source) != NodeKind::Source) {
    throw GraphError(GraphError::Kind::NotASource, "'" + source.str() + "' is not a source");
  }
  Reachability r(topology);
  std::set<NodeId> member_set = r.descendants(source);
  member_set.insert(source);
  std::vector<NodeId> members;
  std::map<NodeId, std::set<NodeId>> below;
  for (const auto& n : topology.topological_order()) {
    if (!member_set.count(n)) continue;
    members.push_back(n);
    below[n] = r.descendants(n);
  }
  return PropagationPath(source, std::move(members), std::move(below));
}

std::size_t depth(const Topology& topology) {
  std::map<NodeId, std::size_t> longest;
  std::size_t best = 0;
  for (const auto& n : topology.topological_order()) {
    std::size_t d = 1;
    for (const auto& p : topology.predecessors(n)) d = std::max(d, longest[p] + 1);
    longest[n] = d;
    best = std::max(best, d);
  }
  return best;
}

}  // namespace qprop
