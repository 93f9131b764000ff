#include <algorithm>

#include "overloaded.hpp"
#include "qprop/baselines.hpp"

namespace qprop {

using detail::overloaded;

namespace {

nlohmann::json central_to_json(const central::Message& m) {
  return std::visit(overloaded{
                        [](const central::Admit& x) -> nlohmann::json {
                          return {{"type", "Admit"}, {"source", x.source.str()}, {"payload", x.payload}};
                        },
                        [](const central::Release& x) -> nlohmann::json {
                          return {{"type", "Release"}, {"payload", x.payload}};
                        },
                        [](const central::Pulse& x) -> nlohmann::json {
                          return {{"type", "Pulse"}, {"source", x.source.str()}, {"value", x.value}};
                        },
                        [](const central::Done& x) -> nlohmann::json {
                          return {{"type", "Done"}, {"source", x.source.str()}};
                        },
                    },
                    m);
}

}  // namespace

CentralSimulation::CentralSimulation(SimulationConfig config)
    : Simulation(config.detail), config_(std::move(config)), net_(config_.policy), reach_(config_.topology) {
  net_.add_endpoint(kClient);
  net_.add_endpoint(kAdmitter);
  const Topology& t = config_.topology;
  for (const auto& n : t.topological_order()) {
    Node node;
    if (auto it = config_.specs.find(n); it != config_.specs.end()) node.spec = it->second;
    SourceClockMap clocks;
    if (t.predecessors(n).empty()) clocks[n] = 0;
    for (const auto& p : t.predecessors(n)) {
      const auto& pv = nodes_.at(p).last;
      node.last_in[p] = pv;
      clocks.insert(pv.sclocks.begin(), pv.sclocks.end());
    }
    node.last = PropagationValue{n, node.spec.init, clocks, 0};
    nodes_.emplace(n, std::move(node));
    net_.add_endpoint(n);
  }
}

void CentralSimulation::bootstrap() { record_init(config_.topology); }

Tick CentralSimulation::cost(const NodeId& n) const {
  auto it = nodes_.find(n);
  if (it == nodes_.end()) return 0;
  const auto& fn = it->second.spec.fn;
  return fn.kind == UpdateFunction::Kind::Busywork ? fn.cost : config_.delay;
}

void CentralSimulation::send(const NodeId& from, const NodeId& to, central::Message m, Tick at) {
  const auto& env = net_.send(from, to, std::move(m), at);
  if (trace_.full()) {
    trace_.append(EventKind::Send, from, at, {{"to", to.str()}, {"msgId", env.id}, {"msg", central_to_json(env.message)}});
  }
}

void CentralSimulation::client_emit(const NodeId& source, Payload payload, Tick at) {
  send(kClient, kAdmitter, central::Admit{source, payload, at}, now());
}

void CentralSimulation::try_release() {
  if (in_flight_source_ || pending_.empty()) return;
  central::Admit next = pending_.front();
  pending_.pop_front();
  const Topology& t = config_.topology;
  awaiting_sinks_.clear();
  if (t.successors(next.source).empty()) awaiting_sinks_.insert(next.source);
  for (const auto& d : reach_.descendants(next.source)) {
    if (t.successors(d).empty()) awaiting_sinks_.insert(d);
  }
  in_flight_source_ = next.source;
  ++admitted_;
  send(kAdmitter, next.source, central::Release{next.payload, next.requested_at}, now());
}

bool CentralSimulation::deliver_one() {
  auto key = net_.choose();
  if (!key) return false;
  deliver(*key);
  return true;
}

void CentralSimulation::deliver(const ChannelKey& key) {
  auto env = net_.pop(key);
  const NodeId& n = key.to;
  if (trace_.full()) {
    trace_.append(EventKind::Deliver, n, now(),
                  {{"from", key.from.str()}, {"msgId", env.id}, {"msg", central_to_json(env.message)}});
  }
  const Topology& t = config_.topology;

  // Propagates n's fresh value on behalf of source s; sinks report to the admitter.
  auto forward = [&](const NodeId& s, const PropagationValue& v, Tick stamp) {
    if (t.successors(n).empty()) {
      send(n, kAdmitter, central::Done{s}, stamp);
      return;
    }
    for (const auto& succ : t.successors(n)) send(n, succ, central::Pulse{s, v}, stamp);
  };

  std::visit(overloaded{
                 [&](const central::Admit& m) {
                   pending_.push_back(m);
                   try_release();
                 },
                 [&](const central::Release& m) {
                   Node& node = nodes_.at(n);
                   Tick stamp = now() + cost(n);
                   net_.set_busy_until(n, stamp);
                   ++node.clock;
                   node.last = PropagationValue{n, m.payload, {{n, node.clock}}, node.clock};
                   trace_.append(EventKind::SourceEmit, n, stamp, {{"value", node.last}, {"requested", m.requested_at}});
                   forward(n, node.last, stamp);
                 },
                 [&](const central::Pulse& m) {
                   Node& node = nodes_.at(n);
                   node.last_in[key.from] = m.value;
                   ++node.pulses;
                   // Only predecessors on the source's propagation path send a pulse.
                   std::size_t expected = 0;
                   for (const auto& p : t.predecessors(n)) {
                     if (p == m.source || reach_.reaches(m.source, p)) ++expected;
                   }
                   if (node.pulses < expected) return;
                   node.pulses = 0;
                   Tick stamp = now() + cost(n);
                   net_.set_busy_until(n, stamp);
                   std::vector<Payload> args;
                   std::vector<PropagationValue> used;
                   SourceClockMap clocks;
                   for (const auto& p : t.predecessors(n)) {
                     const auto& v = node.last_in.at(p);
                     args.push_back(v.value);
                     used.push_back(v);
                     for (const auto& [s, c] : v.sclocks) clocks[s] = std::max(clocks[s], c);
                   }
                   ++node.clock;
                   node.last = PropagationValue{n, node.spec.fn.apply(args), clocks, node.clock};
                   nlohmann::json payload{{"value", node.last}};
                   if (trace_.full()) payload["args"] = used;
                   trace_.append(EventKind::Update, n, stamp, std::move(payload));
                   forward(m.source, node.last, stamp);
                 },
                 [&](const central::Done&) {
                   awaiting_sinks_.erase(key.from);
                   if (awaiting_sinks_.empty()) {
                     in_flight_source_.reset();
                     try_release();
                   }
                 },
             },
             env.message);
  sample();
}

void CentralSimulation::sample() {
  stored_.tick();
  for (const auto& [id, node] : nodes_) stored_.sample(id, node.last_in.size());
  stored_.sample(kAdmitter, pending_.size());
}

void CentralSimulation::crash(const NodeId& n) {
  net_.crash(n);
  trace_.append(EventKind::Crash, n, now(), nlohmann::json::object());
}

void CentralSimulation::recover(const NodeId& n) {
  net_.recover(n);
  trace_.append(EventKind::Recover, n, now(), nlohmann::json::object());
}

void CentralSimulation::script_emit(const NodeId& source, std::optional<Payload> payload) {
  auto it = nodes_.find(source);
  if (it == nodes_.end() || !config_.topology.predecessors(source).empty()) {
    throw SimulationError("'" + source.str() + "' is not a source");
  }
  pending_.push_back(central::Admit{source, payload.value_or(static_cast<Payload>(it->second.clock + 1)), now()});
  try_release();
  sample();
}

void CentralSimulation::script_deliver(const NodeId& from, const NodeId& to) {
  ChannelKey key{from, to};
  const auto* q = net_.queue(key);
  if (!q || q->empty()) throw SimulationError("nothing to deliver on " + from.str() + " -> " + to.str());
  if (net_.crashed(to)) throw SimulationError("cannot deliver to crashed node '" + to.str() + "'");
  advance_to(std::max(q->front().ready_at, net_.busy_until(to)));
  deliver(key);
  ++deliveries_;
}

std::map<NodeId, PropagationValue> CentralSimulation::last_props() const {
  std::map<NodeId, PropagationValue> out;
  for (const auto& [id, node] : nodes_) out.emplace(id, node.last);
  return out;
}

std::map<NodeId, LogicalTime> CentralSimulation::source_clocks() const {
  std::map<NodeId, LogicalTime> out;
  for (const auto& [id, node] : nodes_) {
    if (config_.topology.predecessors(id).empty()) out[id] = node.clock;
  }
  return out;
}

}  // namespace qprop
