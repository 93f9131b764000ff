#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <variant>

#include "qprop/simulation.hpp"

namespace qprop {

namespace central {

struct Admit {
  NodeId source;
  Payload payload = 0;
  Tick requested_at = 0;
};
struct Release {
  Payload payload = 0;
  Tick requested_at = 0;
};
struct Pulse {
  NodeId source;
  PropagationValue value;
};
struct Done {
  NodeId source;
};

using Message = std::variant<Admit, Release, Pulse, Done>;

}  // namespace central

// Serializes propagation through an extra admitter endpoint: one request at a
// time traverses the graph, every affected node updates exactly once, and the
// next request is released once every affected sink reported back.
// Processing cost is charged per update, so a saturated run on a graph of
// depth k with per-node delay d admits exactly one request every k*d ticks.
class CentralSimulation : public Simulation {
 public:
  explicit CentralSimulation(SimulationConfig config);

  std::string engine_name() const override { return "central"; }
  void bootstrap() override;

  void script_emit(const NodeId& source, std::optional<Payload> payload) override;
  void script_deliver(const NodeId& from, const NodeId& to) override;

  Tick now() const override { return net_.now(); }
  Topology topology() const override { return config_.topology; }
  std::map<NodeId, PropagationValue> last_props() const override;
  std::map<NodeId, LogicalTime> source_clocks() const override;
  std::size_t in_flight() const override { return net_.in_flight(); }

  std::size_t admitted() const noexcept { return admitted_; }
  std::size_t pending() const noexcept { return pending_.size(); }

 protected:
  bool deliver_one() override;
  std::optional<Tick> next_ready() const override { return net_.next_ready(); }
  void advance_to(Tick t) override { net_.advance_to(t); }
  void client_emit(const NodeId& source, Payload payload, Tick at) override;
  void crash(const NodeId& n) override;
  void recover(const NodeId& n) override;

 private:
  struct Node {
    NodeSpec spec;
    std::map<NodeId, PropagationValue> last_in;
    PropagationValue last;
    LogicalTime clock = 0;
    std::size_t pulses = 0;
  };

  Tick cost(const NodeId& n) const;
  void deliver(const ChannelKey& key);
  void send(const NodeId& from, const NodeId& to, central::Message m, Tick at);
  void try_release();
  void sample();

  SimulationConfig config_;
  Network<central::Message> net_;
  Reachability reach_;
  std::map<NodeId, Node> nodes_;
  std::deque<central::Admit> pending_;
  std::optional<NodeId> in_flight_source_;
  std::set<NodeId> awaiting_sinks_;
  std::size_t admitted_ = 0;
};

namespace quarp {

struct Publish {
  PropagationValue value;
};

using Message = std::variant<msg::Emit, Publish>;

}  // namespace quarp

// Overwrite-buffer propagation: one slot per predecessor, a new arrival
// replaces the old value, and a node publishes only when every slot is filled
// and all slots agree on the counters of the sources they share.
class QuarpSimulation : public Simulation {
 public:
  explicit QuarpSimulation(SimulationConfig config);

  std::string engine_name() const override { return "quarp"; }
  void bootstrap() override;

  void script_emit(const NodeId& source, std::optional<Payload> payload) override;
  void script_deliver(const NodeId& from, const NodeId& to) override;

  Tick now() const override { return net_.now(); }
  Topology topology() const override { return config_.topology; }
  std::map<NodeId, PropagationValue> last_props() const override;
  std::map<NodeId, LogicalTime> source_clocks() const override;
  std::size_t in_flight() const override { return net_.in_flight(); }

 protected:
  bool deliver_one() override;
  std::optional<Tick> next_ready() const override { return net_.next_ready(); }
  void advance_to(Tick t) override { net_.advance_to(t); }
  void client_emit(const NodeId& source, Payload payload, Tick at) override;
  void crash(const NodeId& n) override;
  void recover(const NodeId& n) override;

 private:
  struct Node {
    NodeSpec spec;
    std::map<NodeId, std::optional<PropagationValue>> slots;
    PropagationValue out;
    LogicalTime clock = 0;
  };

  Tick cost(const NodeId& n) const;
  void deliver(const ChannelKey& key);
  void publish(const NodeId& n, Tick stamp);
  void emit(const NodeId& n, Payload payload, Tick requested, Tick stamp);
  void sample();

  SimulationConfig config_;
  Network<quarp::Message> net_;
  std::map<NodeId, Node> nodes_;
};

}  // namespace qprop
