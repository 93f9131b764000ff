#pragma once

#include <set>

#include "qprop/engine.hpp"

namespace qprop {

// Brittleness predicates. A predecessor is never its own sibling.
bool is_brittle(const NodeState& st, const NodeId& pred);
bool has_brittle_sibling(const NodeState& st, const NodeId& pred);
bool is_brittle_sibling(const NodeState& st, const NodeId& pred_brittle, const NodeId& pred);
// False (rather than an error) when B_r.pred_brittle or a required I entry is
// empty: deferring is safe, guessing true could admit a glitch.
bool synchronised(const NodeState& st, const NodeId& pred_brittle);

Effects move_to_i(NodeState& st, const NodeId& pred_brittle, const EngineOptions& opts = {});

// Runs before the change handler for every delivered value.
Effects pre_propagate(NodeState& st, const PropagationValue& v_new, const EngineOptions& opts = {});

msg::NewSuccReply handle_new_succ(NodeState& st, const NodeId& succ);
msg::SourcesReply handle_rem_succ(NodeState& st, const NodeId& succ);

// Local part of the addSources handler; the runtime forwards to successors.
Effects apply_add_sources(NodeState& st, const NodeId& from, const std::set<NodeId>& sources,
                          const EngineOptions& opts = {});

struct RemSourcesOutcome {
  std::set<NodeId> removed;
  Effects effects;
};
// Local part of the remSources handler; only `removed` travels downstream.
RemSourcesOutcome apply_rem_sources(NodeState& st, const NodeId& from, const std::set<NodeId>& sources,
                                    const EngineOptions& opts = {});

void apply_add_source(NodeState& st, const NodeId& from, const NodeId& source);

// Initiator steps between the awaited request and the self-addressed table repair.
void begin_add_dependency(NodeState& st, const NodeId& pred, const msg::NewSuccReply& reply);
void begin_remove_dependency(NodeState& st, const NodeId& pred);

// A node joining a running graph: explored, barrier passed, nothing stored.
NodeState make_fresh_node(const NodeId& self, Payload init, UpdateFunction fn);

}  // namespace qprop
