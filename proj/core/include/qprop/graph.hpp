#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace qprop {

// Opaque node identifier. The lexical order of the token is the canonical
// order used for predecessor ordering and tie-breaking.
class NodeId {
 public:
  NodeId() = default;
  explicit NodeId(std::string token) : token_(std::move(token)) {}

  const std::string& str() const noexcept { return token_; }
  bool empty() const noexcept { return token_.empty(); }

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
  friend bool operator==(const NodeId&, const NodeId&) = default;

 private:
  std::string token_;
};

std::ostream& operator<<(std::ostream& os, const NodeId& id);

namespace literals {
inline NodeId operator""_id(const char* s, std::size_t n) { return NodeId(std::string(s, n)); }
}  // namespace literals

struct Edge {
  NodeId from;
  NodeId to;

  friend auto operator<=>(const Edge&, const Edge&) = default;
  friend bool operator==(const Edge&, const Edge&) = default;
};

enum class NodeKind { Source, Intermediate, Sink };

const char* to_string(NodeKind kind);

class GraphError : public std::runtime_error {
 public:
  enum class Kind { CycleDetected, DanglingEdge, DuplicateNode, DuplicateEdge, UnknownNode, NotASource };

  GraphError(Kind kind, const std::string& what, std::vector<NodeId> cycle = {})
      : std::runtime_error(what), kind_(kind), cycle_(std::move(cycle)) {}

  Kind kind() const noexcept { return kind_; }
  // For CycleDetected: the nodes of one offending cycle, first node repeated at the end.
  const std::vector<NodeId>& cycle() const noexcept { return cycle_; }

 private:
  Kind kind_;
  std::vector<NodeId> cycle_;
};

// A validated, immutable directed acyclic graph.
class Topology {
 public:
  Topology() = default;

  // Throws GraphError. Rejection is total: no partially built object escapes.
  static Topology validate(const std::vector<NodeId>& nodes, const std::vector<Edge>& edges);

  const std::set<NodeId>& nodes() const noexcept { return nodes_; }
  const std::set<Edge>& edges() const noexcept { return edges_; }
  bool contains(const NodeId& n) const { return nodes_.count(n) != 0; }
  bool has_edge(const NodeId& from, const NodeId& to) const { return edges_.count(Edge{from, to}) != 0; }

  const std::set<NodeId>& predecessors(const NodeId& n) const;
  const std::set<NodeId>& successors(const NodeId& n) const;

  std::vector<NodeId> sources() const;
  std::vector<NodeId> sinks() const;
  // Kahn's algorithm with canonical tie-breaking.
  std::vector<NodeId> topological_order() const;

  Topology with_edge(const NodeId& from, const NodeId& to) const;
  Topology without_edge(const NodeId& from, const NodeId& to) const;
  Topology with_node(const NodeId& n) const;
  Topology without_node(const NodeId& n) const;

 private:
  std::set<NodeId> nodes_;
  std::set<Edge> edges_;
  std::map<NodeId, std::set<NodeId>> preds_;
  std::map<NodeId, std::set<NodeId>> succs_;
};

NodeKind classify(const Topology& topology, const NodeId& node);

// Exhaustive traversal; deliberately uncached because verification uses it as ground truth.
bool reaches(const Topology& topology, const NodeId& x, const NodeId& y);

// Descendant sets for every node, computed once. Same answers as reaches().
class Reachability {
 public:
  explicit Reachability(const Topology& topology);
  bool reaches(const NodeId& x, const NodeId& y) const;
  const std::set<NodeId>& descendants(const NodeId& x) const;

 private:
  std::map<NodeId, std::set<NodeId>> desc_;
};

class PropagationPath {
 public:
  PropagationPath(NodeId source, std::vector<NodeId> members, std::map<NodeId, std::set<NodeId>> below);

  const NodeId& source() const noexcept { return source_; }
  // Members in a topological order compatible with precedes().
  const std::vector<NodeId>& members() const noexcept { return members_; }
  bool contains(const NodeId& n) const;
  // True iff a precedes b in the path's partial order (a reaches b).
  bool precedes(const NodeId& a, const NodeId& b) const;

 private:
  NodeId source_;
  std::vector<NodeId> members_;
  std::map<NodeId, std::set<NodeId>> below_;
};

PropagationPath propagation_path(const Topology& topology, const NodeId& source);

// Number of nodes on the longest directed path.
std::size_t depth(const Topology& topology);

}  // namespace qprop

template <>
struct std::hash<qprop::NodeId> {
  std::size_t operator()(const qprop::NodeId& id) const noexcept { return std::hash<std::string>{}(id.str()); }
};
