#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "qprop/dynamic.hpp"
#include "qprop/engine.hpp"
#include "qprop/graph.hpp"
#include "qprop/messages.hpp"
#include "qprop/trace.hpp"
#include "qprop/transport.hpp"

namespace qprop {

inline const NodeId kClient{"$client"};
inline const NodeId kAdmitter{"$admitter"};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NodeSpec {
  Payload init = 0;
  UpdateFunction fn;
};

enum class TopologyOpKind { AddDependency, RemoveDependency, AddNode, RemoveNode };
const char* to_string(TopologyOpKind kind);

struct TopologyOp {
  TopologyOpKind kind = TopologyOpKind::AddDependency;
  NodeId node;
  NodeId pred;  // dependency ops
  // AddNode only.
  NodeSpec spec;
  std::vector<NodeId> preds;
  std::vector<NodeId> succs;

  std::string describe() const;
};

struct SimulationConfig {
  Topology topology;
  std::map<NodeId, NodeSpec> specs;  // nodes without an entry use defaults
  Tick delay = 0;                    // per-message processing cost unless busywork says otherwise
  SchedulerPolicy policy = SchedulerPolicy::round_robin();
  EngineOptions engine;
  TraceDetail detail = TraceDetail::Full;
};

enum class StepOutcome { Delivered, Advanced, Quiescent };

struct StoredStats {
  std::map<NodeId, std::size_t> max;
  std::map<NodeId, double> sum;
  std::size_t samples = 0;

  void sample(const NodeId& n, std::size_t stored);
  void tick() { ++samples; }
  double mean(const NodeId& n) const;
  std::size_t overall_max() const;
};

// Shared driver: a timed agenda of external events (client emissions,
// topology operations, faults) on top of an engine-specific network.
class Simulation {
 public:
  virtual ~Simulation() = default;

  virtual std::string engine_name() const = 0;

  // Exploration and barrier (if any), run to quiescence.
  virtual void bootstrap() = 0;

  void schedule_emit(const NodeId& source, Payload payload, Tick at);
  void schedule_op(const TopologyOp& op, Tick at);
  void schedule_fault(const NodeId& node, bool crash, Tick at);
  std::size_t agenda_size() const { return agenda_.size(); }
  // Client emissions still to be handed to the network.
  std::size_t pending_emissions() const;

  // One delivery, or a clock advance to the next event, or quiescence.
  StepOutcome step();

  // Scripted control, bypassing readiness and the scheduler.
  virtual void script_emit(const NodeId& source, std::optional<Payload> payload) = 0;
  virtual void script_deliver(const NodeId& from, const NodeId& to) = 0;
  virtual void script_op(const TopologyOp& op);
  void script_crash(const NodeId& n) { crash(n); }
  void script_recover(const NodeId& n) { recover(n); }

  virtual Tick now() const = 0;
  const Trace& trace() const noexcept { return trace_; }
  Trace& trace() noexcept { return trace_; }
  virtual Topology topology() const = 0;
  virtual std::map<NodeId, PropagationValue> last_props() const = 0;
  // Final clock per current source, read from its own last value.
  virtual std::map<NodeId, LogicalTime> source_clocks() const = 0;
  // Engine routing tables where the engine keeps them.
  virtual std::map<NodeId, RoutingTable> routing_tables() const { return {}; }
  const StoredStats& stored_stats() const noexcept { return stored_; }
  virtual bool op_in_progress() const { return false; }
  virtual std::size_t in_flight() const = 0;
  std::uint64_t deliveries() const noexcept { return deliveries_; }

 protected:
  explicit Simulation(TraceDetail detail) : trace_(detail) {}
  Simulation(const Simulation&) = default;
  Simulation& operator=(const Simulation&) = default;

  virtual bool deliver_one() = 0;
  virtual std::optional<Tick> next_ready() const = 0;
  virtual void advance_to(Tick t) = 0;
  virtual void client_emit(const NodeId& source, Payload payload, Tick at) = 0;
  // Returns false when the op cannot start yet.
  virtual bool start_op(const TopologyOp& op);
  virtual void crash(const NodeId& n) = 0;
  virtual void recover(const NodeId& n) = 0;

  void record_init(const Topology& t);

  Trace trace_;
  StoredStats stored_;
  std::uint64_t deliveries_ = 0;

 private:
  struct AgendaItem {
    enum class Kind { Emit, Op, Crash, Recover } kind;
    NodeId node;
    Payload payload = 0;
    TopologyOp op;
  };
  bool fire_due();

  std::map<std::pair<Tick, std::uint64_t>, AgendaItem> agenda_;
  std::uint64_t agenda_seq_ = 0;
};

class QpropSimulation : public Simulation {
 public:
  // dynamic enables the pre-propagation layer and topology operations.
  QpropSimulation(SimulationConfig config, bool dynamic);
  QpropSimulation(const QpropSimulation&) = default;
  QpropSimulation& operator=(const QpropSimulation&) = default;

  std::string engine_name() const override { return dynamic_ ? "qprop_d" : "qprop"; }
  void bootstrap() override;

  void script_emit(const NodeId& source, std::optional<Payload> payload) override;
  void script_deliver(const NodeId& from, const NodeId& to) override;
  void script_op(const TopologyOp& op) override;

  Tick now() const override { return net_.now(); }
  Topology topology() const override { return topo_; }
  std::map<NodeId, PropagationValue> last_props() const override;
  std::map<NodeId, LogicalTime> source_clocks() const override;
  std::map<NodeId, RoutingTable> routing_tables() const override;
  bool op_in_progress() const override { return op_.has_value(); }
  std::size_t in_flight() const override { return net_.in_flight(); }

  const NodeState& node(const NodeId& n) const;
  bool retired(const NodeId& n) const;
  bool crashed(const NodeId& n) const { return net_.crashed(n); }
  const Network<WireMessage>& network() const noexcept { return net_; }

  // Channels with a pending message, for exhaustive exploration.
  std::vector<ChannelKey> nonempty_channels() const;
  // Canonical rendering of node states and channel contents.
  std::string fingerprint() const;

 protected:
  bool deliver_one() override;
  std::optional<Tick> next_ready() const override { return net_.next_ready(); }
  void advance_to(Tick t) override { net_.advance_to(t); }
  void client_emit(const NodeId& source, Payload payload, Tick at) override;
  bool start_op(const TopologyOp& op) override;
  void crash(const NodeId& n) override;
  void recover(const NodeId& n) override;

 private:
  using Continuation = std::function<void(QpropSimulation&, const WireMessage&)>;
  using Done = std::function<void(QpropSimulation&)>;

  struct Actor {
    NodeState state;
    bool retired = false;
    std::deque<PropagationValue> deferred;
    std::optional<Continuation> cont;
    std::deque<msg::Emit> pending_emits;
  };

  struct Primitive {
    enum class Kind { AddDependency, RemoveDependency, Retire } kind;
    NodeId node;
    NodeId pred;
  };

  struct OpRun {
    TopologyOp op;
    std::deque<Primitive> steps;
    bool running = false;
  };

  Actor& actor(const NodeId& n);
  const Actor& actor(const NodeId& n) const;
  Tick cost(const NodeId& n) const;

  void deliver(const ChannelKey& key);
  void handle(const NodeId& n, const NodeId& from, const Network<WireMessage>::Envelope& env);
  void on_change(const NodeId& n, const PropagationValue& v, nlohmann::json& deliver_payload);
  void process_change(const NodeId& n, const PropagationValue& v);
  void flush_deferred(const NodeId& n);
  void flush_emits(const NodeId& n);
  void emit_now(const NodeId& n, Payload payload, Tick requested);
  void apply(const NodeId& n, Effects&& fx);
  void note(const NodeId& n, EventKind kind, nlohmann::json payload);
  void send_request(const NodeId& from, const NodeId& to, WireMessage m, Continuation cont, bool fail_fast = false);
  void reply(const NodeId& from, const NodeId& to, RequestId id, WireMessage m);
  void chain(const NodeId& n, std::vector<NodeId> targets, WireMessage m, std::size_t idx, Done done);
  void sample();

  void run_next_primitive();
  void finish_primitive();
  void abort_op(const std::string& reason);
  void record_op(const char* phase, const std::string& reason = {});

  SimulationConfig config_;
  bool dynamic_;
  Network<WireMessage> net_;
  Topology topo_;
  std::map<NodeId, Actor> actors_;
  std::optional<OpRun> op_;
  // Send stamp of the handler currently running.
  Tick stamp_ = 0;
  Payload auto_payload_ = 0;
};

}  // namespace qprop
