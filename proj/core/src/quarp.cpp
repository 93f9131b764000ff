#include <algorithm>

#include "overloaded.hpp"
#include "qprop/baselines.hpp"

namespace qprop {

using detail::overloaded;

namespace {

nlohmann::json quarp_to_json(const quarp::Message& m) {
  return std::visit(overloaded{
                        [](const msg::Emit& x) -> nlohmann::json {
                          return {{"type", "Emit"}, {"payload", x.payload}, {"requestedAt", x.requested_at}};
                        },
                        [](const quarp::Publish& x) -> nlohmann::json {
                          return {{"type", "Publish"}, {"value", x.value}};
                        },
                    },
                    m);
}

// Every pair of slots must agree on the counters of the sources both carry.
bool coherent(const std::vector<const PropagationValue*>& vals) {
  for (std::size_t i = 0; i < vals.size(); ++i) {
    for (std::size_t j = i + 1; j < vals.size(); ++j) {
      for (const auto& [s, c] : vals[i]->sclocks) {
        auto other = vals[j]->sclocks.find(s);
        if (other != vals[j]->sclocks.end() && other->second != c) return false;
      }
    }
  }
  return true;
}

}  // namespace

QuarpSimulation::QuarpSimulation(SimulationConfig config)
    : Simulation(config.detail), config_(std::move(config)), net_(config_.policy) {
  net_.add_endpoint(kClient);
  for (const auto& n : config_.topology.nodes()) {
    Node node;
    if (auto it = config_.specs.find(n); it != config_.specs.end()) node.spec = it->second;
    for (const auto& p : config_.topology.predecessors(n)) node.slots[p];
    node.out = PropagationValue{n, node.spec.init, {}, 0};
    if (node.slots.empty()) node.out.sclocks[n] = 0;
    nodes_.emplace(n, std::move(node));
    net_.add_endpoint(n);
  }
}

void QuarpSimulation::bootstrap() { record_init(config_.topology); }

Tick QuarpSimulation::cost(const NodeId& n) const {
  auto it = nodes_.find(n);
  if (it == nodes_.end()) return 0;
  const auto& fn = it->second.spec.fn;
  return fn.kind == UpdateFunction::Kind::Busywork ? fn.cost : config_.delay;
}

void QuarpSimulation::client_emit(const NodeId& source, Payload payload, Tick at) {
  const auto& env = net_.send(kClient, source, msg::Emit{payload, at}, now());
  if (trace_.full()) {
    trace_.append(EventKind::Send, kClient, now(), {{"to", source.str()}, {"msgId", env.id}, {"msg", quarp_to_json(env.message)}});
  }
}

void QuarpSimulation::emit(const NodeId& n, Payload payload, Tick requested, Tick stamp) {
  Node& node = nodes_.at(n);
  if (!node.slots.empty()) throw SimulationError("'" + n.str() + "' is not a source");
  ++node.clock;
  node.out = PropagationValue{n, payload, {{n, node.clock}}, node.clock};
  trace_.append(EventKind::SourceEmit, n, stamp, {{"value", node.out}, {"requested", requested}});
  for (const auto& s : config_.topology.successors(n)) {
    const auto& env = net_.send(n, s, quarp::Publish{node.out}, stamp);
    if (trace_.full()) trace_.append(EventKind::Send, n, stamp, {{"to", s.str()}, {"msgId", env.id}, {"msg", quarp_to_json(env.message)}});
  }
}

void QuarpSimulation::publish(const NodeId& n, Tick stamp) {
  Node& node = nodes_.at(n);
  std::vector<const PropagationValue*> vals;
  for (const auto& [p, slot] : node.slots) {
    if (!slot) return;
    vals.push_back(&*slot);
  }
  if (!coherent(vals)) return;
  std::vector<Payload> args;
  SourceClockMap clocks;
  auto used = nlohmann::json::array();
  for (const auto* v : vals) {
    args.push_back(v->value);
    clocks.insert(v->sclocks.begin(), v->sclocks.end());
    if (trace_.full()) used.push_back(*v);
  }
  ++node.clock;
  node.out = PropagationValue{n, node.spec.fn.apply(args), clocks, node.clock};
  nlohmann::json payload{{"value", node.out}};
  if (trace_.full()) payload["args"] = std::move(used);
  trace_.append(EventKind::Update, n, stamp, std::move(payload));
  for (const auto& s : config_.topology.successors(n)) {
    const auto& env = net_.send(n, s, quarp::Publish{node.out}, stamp);
    if (trace_.full()) trace_.append(EventKind::Send, n, stamp, {{"to", s.str()}, {"msgId", env.id}, {"msg", quarp_to_json(env.message)}});
  }
}

bool QuarpSimulation::deliver_one() {
  auto key = net_.choose();
  if (!key) return false;
  deliver(*key);
  return true;
}

void QuarpSimulation::deliver(const ChannelKey& key) {
  auto env = net_.pop(key);
  const NodeId& n = key.to;
  if (trace_.full()) {
    trace_.append(EventKind::Deliver, n, now(), {{"from", key.from.str()}, {"msgId", env.id}, {"msg", quarp_to_json(env.message)}});
  }
  Tick stamp = now() + cost(n);
  net_.set_busy_until(n, stamp);
  std::visit(overloaded{
                 [&](const msg::Emit& m) { emit(n, m.payload, m.requested_at, stamp); },
                 [&](const quarp::Publish& m) {
                   nodes_.at(n).slots[key.from] = m.value;
                   publish(n, stamp);
                 },
             },
             env.message);
  sample();
}

void QuarpSimulation::sample() {
  stored_.tick();
  for (const auto& [id, node] : nodes_) {
    stored_.sample(id, static_cast<std::size_t>(std::count_if(node.slots.begin(), node.slots.end(),
                                                              [](const auto& e) { return e.second.has_value(); })));
  }
}

void QuarpSimulation::crash(const NodeId& n) {
  net_.crash(n);
  trace_.append(EventKind::Crash, n, now(), nlohmann::json::object());
}

void QuarpSimulation::recover(const NodeId& n) {
  net_.recover(n);
  trace_.append(EventKind::Recover, n, now(), nlohmann::json::object());
}

void QuarpSimulation::script_emit(const NodeId& source, std::optional<Payload> payload) {
  auto it = nodes_.find(source);
  if (it == nodes_.end()) throw SimulationError("unknown node '" + source.str() + "'");
  Tick stamp = std::max(now(), net_.busy_until(source));
  emit(source, payload.value_or(static_cast<Payload>(it->second.clock + 1)), now(), stamp);
  sample();
}

void QuarpSimulation::script_deliver(const NodeId& from, const NodeId& to) {
  ChannelKey key{from, to};
  const auto* q = net_.queue(key);
  if (!q || q->empty()) throw SimulationError("nothing to deliver on " + from.str() + " -> " + to.str());
  if (net_.crashed(to)) throw SimulationError("cannot deliver to crashed node '" + to.str() + "'");
  advance_to(std::max(q->front().ready_at, net_.busy_until(to)));
  deliver(key);
  ++deliveries_;
}

std::map<NodeId, PropagationValue> QuarpSimulation::last_props() const {
  std::map<NodeId, PropagationValue> out;
  for (const auto& [id, node] : nodes_) out.emplace(id, node.out);
  return out;
}

std::map<NodeId, LogicalTime> QuarpSimulation::source_clocks() const {
  std::map<NodeId, LogicalTime> out;
  for (const auto& [id, node] : nodes_) {
    if (node.slots.empty()) out[id] = node.clock;
  }
  return out;
}

}  // namespace qprop
