#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qprop/messages.hpp"
#include "qprop/trace.hpp"
#include "qprop/value.hpp"

namespace qprop {

// Closed catalog of update functions. Arguments arrive in canonical predecessor order.
struct UpdateFunction {
  enum class Kind { Sum, Difference, Identity, Busywork };

  Kind kind = Kind::Sum;
  // Processing cost in ticks; only meaningful for Busywork.
  Tick cost = 0;

  static UpdateFunction sum() { return {Kind::Sum, 0}; }
  static UpdateFunction difference() { return {Kind::Difference, 0}; }
  static UpdateFunction identity() { return {Kind::Identity, 0}; }
  static UpdateFunction busywork(Tick ticks) { return {Kind::Busywork, ticks}; }

  Payload apply(const std::vector<Payload>& args) const;
  std::string name() const;

  friend bool operator==(const UpdateFunction&, const UpdateFunction&) = default;
};

class EngineError : public std::runtime_error {
 public:
  enum class Kind {
    AlreadyInitialized,
    UnknownPredecessor,
    BarrierNotPassed,
    NotASource,
    EmptyMatches,
    InconsistentOverlap,
    CombinationLimit,
    StallSuspected,
    NotBrittle,
    NotAPredecessor,
  };

  EngineError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct EngineOptions {
  // Hard cap on argument combinations visited per delivery.
  std::size_t max_combinations = 1'000'000;
  // Stored values per predecessor; 0 means unlimited. Exceeding it raises StallSuspected.
  std::size_t store_limit = 0;
  // Record Update arguments and Prune/Brittle/MoveToI events.
  bool detailed = true;
};

using RoutingTable = std::map<NodeId, std::set<NodeId>>;

struct NodeState {
  NodeId self;
  std::set<NodeId> dp;
  std::set<NodeId> ds;
  std::map<NodeId, ValueSeq> inputs;   // I
  RoutingTable routes;                 // S
  std::map<NodeId, ValueSeq> brittle;  // B_r
  UpdateFunction fn;
  Payload init_value = 0;
  PropagationValue last_prop;
  LogicalTime clock = 0;
  std::size_t sources_received = 0;
  std::size_t starts_received = 0;
  bool initialized = false;
  bool explored = false;
  bool may_emit = false;
  // Arguments of the most recent update, canonical order.
  std::vector<PropagationValue> last_match;

  bool is_source() const noexcept { return dp.empty(); }
  // |I| + |B_r| counted in values.
  std::size_t stored() const;
};

NodeState make_node(const NodeId& self, std::set<NodeId> dp, std::set<NodeId> ds, Payload init, UpdateFunction fn);

struct Outbound {
  NodeId to;
  WireMessage message;
};

// Engine-level observations the runtime turns into trace events at this node.
struct Note {
  EventKind kind;
  nlohmann::json payload;
};

struct Effects {
  std::vector<Outbound> sends;
  std::vector<Note> notes;

  void merge(Effects&& other);
  bool updated() const;
};

// One value per argument-supplying predecessor, canonical predecessor order.
using Combination = std::vector<PropagationValue>;

Effects init_exploration(NodeState& st);
Effects handle_sources(NodeState& st, const msg::Sources& m);
Effects init_barrier(const NodeState& st);
Effects handle_start(NodeState& st);
Effects source_emit(NodeState& st, Payload payload, Tick requested_at = 0);

// Reference implementations: exhaustive cross product, filter and maximum.
std::vector<Combination> candidate_combinations(const NodeState& st, const PropagationValue& v_new,
                                                std::size_t limit = 1'000'000);
std::vector<Combination> glitch_free_filter(const std::vector<Combination>& combos, const RoutingTable& routes);
bool glitch_free(const Combination& combo, const RoutingTable& routes);
const Combination& select_last_match(const std::vector<Combination>& matches);
SourceClockMap merge_sclocks(const Combination& combo);

// Fused search used by the change handler: descends each coordinate in
// fclock order and returns the first glitch-free completion, which is the
// lexicographic maximum. Empty when no match exists.
std::optional<Combination> find_last_match(const NodeState& st, const PropagationValue& v_new,
                                           std::size_t limit = 1'000'000);

Effects handle_change(NodeState& st, const PropagationValue& v_new, const EngineOptions& opts = {});
Effects prune_stale(NodeState& st, const Combination& last_match, const EngineOptions& opts = {});

nlohmann::json routes_to_json(const RoutingTable& routes);

}  // namespace qprop
