#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qprop/graph.hpp"
#include "qprop/trace.hpp"
#include "qprop/value.hpp"

namespace qprop {

// Brute-force checkers over recorded traces. They read only the trace and the
// graph; nothing here consults engine state such as routing tables.

class OracleError : public std::runtime_error {
 public:
  enum class Kind { MalformedTrace, NotQuiescent };

  OracleError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct Verdict {
  std::string property;
  bool holds = true;
  // Smallest event subsequence exhibiting the violation. Snapshot checks
  // (consistency, exploration) describe the offending node in one synthetic event.
  std::vector<TraceEvent> witness;
  std::string detail;
};

nlohmann::json to_json(const Verdict& v);

// Graph as the trace describes it over time. Additions take effect when an
// operation begins and removals when it completes, so while an operation is
// in flight the graph is the union of the old and new shapes.
class TopologyTimeline {
 public:
  explicit TopologyTimeline(const Topology& initial);

  // Folds in a TopologyOp event; other kinds are ignored.
  void apply(const TraceEvent& e);

  const std::set<NodeId>& nodes() const noexcept { return nodes_; }
  bool reaches_or_is(const NodeId& x, const NodeId& y) const;
  std::set<NodeId> sinks() const;
  std::set<NodeId> successors(const NodeId& n) const;

 private:
  void add_edge(const NodeId& from, const NodeId& to);

  std::set<NodeId> nodes_;
  std::set<std::pair<NodeId, NodeId>> edges_;
  // Edges and nodes added by the operation currently in flight, per initiator.
  std::map<NodeId, std::vector<std::pair<NodeId, NodeId>>> pending_edges_;
  std::map<NodeId, bool> pending_node_;
};

// Arguments of an Update event, canonical predecessor order. Throws MalformedTrace.
std::vector<PropagationValue> update_args(const TraceEvent& e);
PropagationValue event_value(const TraceEvent& e);

// An init TopologyOp event in the trace overrides `topology`.
Verdict check_glitch_freedom(const Trace& trace, const Topology& topology);
Verdict check_monotonicity(const Trace& trace);
// A missing clock for a source counts as 0. Throws NotQuiescent when quiescent is false.
Verdict check_consistency(const std::map<NodeId, PropagationValue>& last_props,
                          const std::map<NodeId, LogicalTime>& source_clocks, const Topology& topology,
                          bool quiescent = true);
Verdict check_exploration(const Topology& topology, const std::map<NodeId, std::map<NodeId, std::set<NodeId>>>& tables);

// Source emissions that an ancestor sink should have absorbed minus sink
// updates, summed over sinks. Sinks and ancestry follow the trace's timeline.
std::int64_t count_concurrent_interactions(const Trace& trace, const Topology& topology);

struct StallReport {
  std::size_t window = 0;
  std::vector<NodeId> suspects;
  // Deliveries since each suspect's last update.
  std::map<NodeId, std::size_t> idle_deliveries;
};

nlohmann::json to_json(const StallReport& r);

// Nodes whose trailing run of deliveries without an update is at least
// `window` long while every predecessor store is non-empty. A suspect, not a proof.
StallReport detect_stall(const Trace& trace, std::size_t window);

}  // namespace qprop
