#include "qprop/simulation.hpp"

#include <algorithm>
#include <utility>

#include "overloaded.hpp"

namespace qprop {

using detail::overloaded;

const char* to_string(TopologyOpKind kind) {
  switch (kind) {
    case TopologyOpKind::AddDependency:
      return "add-dependency";
    case TopologyOpKind::RemoveDependency:
      return "remove-dependency";
    case TopologyOpKind::AddNode:
      return "add-node";
    case TopologyOpKind::RemoveNode:
      return "remove-node";
  }
  return "?";
}

std::string TopologyOp::describe() const {
  std::string out = std::string(to_string(kind)) + " " + node.str();
  if (kind == TopologyOpKind::AddDependency || kind == TopologyOpKind::RemoveDependency) out += " " + pred.str();
  return out;
}

void StoredStats::sample(const NodeId& n, std::size_t stored) {
  auto& m = max[n];
  m = std::max(m, stored);
  sum[n] += static_cast<double>(stored);
}

double StoredStats::mean(const NodeId& n) const {
  auto it = sum.find(n);
  if (it == sum.end() || samples == 0) return 0.0;
  return it->second / static_cast<double>(samples);
}

std::size_t StoredStats::overall_max() const {
  std::size_t out = 0;
  for (const auto& [n, m] : max) out = std::max(out, m);
  return out;
}

// ---------------------------------------------------------------------------
// Simulation

void Simulation::schedule_emit(const NodeId& source, Payload payload, Tick at) {
  agenda_.emplace(std::make_pair(at, agenda_seq_++), AgendaItem{AgendaItem::Kind::Emit, source, payload, {}});
}

void Simulation::schedule_op(const TopologyOp& op, Tick at) {
  agenda_.emplace(std::make_pair(at, agenda_seq_++), AgendaItem{AgendaItem::Kind::Op, op.node, 0, op});
}

void Simulation::schedule_fault(const NodeId& node, bool crash, Tick at) {
  auto kind = crash ? AgendaItem::Kind::Crash : AgendaItem::Kind::Recover;
  agenda_.emplace(std::make_pair(at, agenda_seq_++), AgendaItem{kind, node, 0, {}});
}

std::size_t Simulation::pending_emissions() const {
  return static_cast<std::size_t>(std::count_if(agenda_.begin(), agenda_.end(), [](const auto& e) {
    return e.second.kind == AgendaItem::Kind::Emit;
  }));
}

bool Simulation::fire_due() {
  bool fired = false;
  bool op_blocked = false;
  for (auto it = agenda_.begin(); it != agenda_.end() && it->first.first <= now();) {
    const auto& item = it->second;
    bool consumed = true;
    switch (item.kind) {
      case AgendaItem::Kind::Emit:
        client_emit(item.node, item.payload, it->first.first);
        break;
      case AgendaItem::Kind::Crash:
        crash(item.node);
        break;
      case AgendaItem::Kind::Recover:
        recover(item.node);
        break;
      case AgendaItem::Kind::Op:
        // Operations are serialized in agenda order.
        consumed = !op_blocked && start_op(item.op);
        if (!consumed) op_blocked = true;
        break;
    }
    if (consumed) {
      it = agenda_.erase(it);
      fired = true;
    } else {
      ++it;
    }
  }
  return fired;
}

StepOutcome Simulation::step() {
  fire_due();
  if (deliver_one()) {
    ++deliveries_;
    return StepOutcome::Delivered;
  }
  std::optional<Tick> next = next_ready();
  for (const auto& [key, item] : agenda_) {
    if (item.kind == AgendaItem::Kind::Op && op_in_progress()) continue;
    if (!next || key.first < *next) next = key.first;
    break;
  }
  if (next && *next > now()) {
    advance_to(*next);
    return StepOutcome::Advanced;
  }
  if (next && fire_due()) return StepOutcome::Advanced;
  return StepOutcome::Quiescent;
}

void Simulation::script_op(const TopologyOp&) {
  throw SimulationError(engine_name() + " does not support topology operations");
}

bool Simulation::start_op(const TopologyOp&) {
  throw SimulationError(engine_name() + " does not support topology operations");
}

void Simulation::record_init(const Topology& t) {
  auto edges = nlohmann::json::array();
  for (const auto& e : t.edges()) edges.push_back({e.from.str(), e.to.str()});
  std::set<NodeId> nodes(t.nodes().begin(), t.nodes().end());
  trace_.append(EventKind::TopologyOp, NodeId("$graph"), now(),
                {{"op", "init"}, {"phase", "done"}, {"nodes", ids_to_json(nodes)}, {"edges", edges}});
}

// ---------------------------------------------------------------------------
// QpropSimulation

QpropSimulation::QpropSimulation(SimulationConfig config, bool dynamic)
    : Simulation(config.detail), config_(std::move(config)), dynamic_(dynamic), net_(config_.policy),
      topo_(config_.topology) {
  config_.engine.detailed = config_.detail == TraceDetail::Full;
  net_.add_endpoint(kClient);
  for (const auto& n : topo_.nodes()) {
    NodeSpec spec;
    if (auto it = config_.specs.find(n); it != config_.specs.end()) spec = it->second;
    Actor a;
    a.state = make_node(n, topo_.predecessors(n), topo_.successors(n), spec.init, spec.fn);
    actors_.emplace(n, std::move(a));
    net_.add_endpoint(n);
  }
}

QpropSimulation::Actor& QpropSimulation::actor(const NodeId& n) {
  auto it = actors_.find(n);
  if (it == actors_.end()) throw SimulationError("unknown node '" + n.str() + "'");
  return it->second;
}

const QpropSimulation::Actor& QpropSimulation::actor(const NodeId& n) const {
  auto it = actors_.find(n);
  if (it == actors_.end()) throw SimulationError("unknown node '" + n.str() + "'");
  return it->second;
}

const NodeState& QpropSimulation::node(const NodeId& n) const { return actor(n).state; }
bool QpropSimulation::retired(const NodeId& n) const { return actor(n).retired; }

Tick QpropSimulation::cost(const NodeId& n) const {
  auto it = actors_.find(n);
  if (it == actors_.end()) return 0;
  const auto& fn = it->second.state.fn;
  return fn.kind == UpdateFunction::Kind::Busywork ? fn.cost : config_.delay;
}

void QpropSimulation::bootstrap() {
  record_init(topo_);
  stamp_ = now();
  for (auto& [id, a] : actors_) apply(id, init_exploration(a.state));
  while (step() != StepOutcome::Quiescent) {
  }
  for (const auto& [id, a] : actors_) {
    if (!a.state.explored || (a.state.is_source() && !a.state.may_emit)) {
      throw SimulationError("bootstrap did not complete at '" + id.str() + "'");
    }
  }
}

void QpropSimulation::note(const NodeId& n, EventKind kind, nlohmann::json payload) {
  bool always = kind == EventKind::Update || kind == EventKind::SourceEmit || kind == EventKind::TopologyOp ||
                kind == EventKind::Crash || kind == EventKind::Recover;
  if (always || trace_.full()) trace_.append(kind, n, stamp_, std::move(payload));
}

void QpropSimulation::apply(const NodeId& n, Effects&& fx) {
  for (auto& nt : fx.notes) note(n, nt.kind, std::move(nt.payload));
  for (auto& out : fx.sends) {
    const auto& env = net_.send(n, out.to, std::move(out.message), stamp_);
    if (trace_.full()) trace_.append(EventKind::Send, n, stamp_, {{"to", out.to.str()}, {"msgId", env.id}, {"msg", message_to_json(env.message)}});
  }
}

void QpropSimulation::send_request(const NodeId& from, const NodeId& to, WireMessage m, Continuation cont,
                                   bool fail_fast) {
  auto [id, env] = net_.request(from, to, std::move(m), stamp_, fail_fast);
  actor(from).cont = std::move(cont);
  if (trace_.full()) {
    trace_.append(EventKind::Send, from, stamp_,
                  {{"to", to.str()}, {"msgId", env->id}, {"msg", message_to_json(env->message)}, {"request", id}});
  }
}

void QpropSimulation::reply(const NodeId& from, const NodeId& to, RequestId id, WireMessage m) {
  const auto& env = net_.reply(from, to, id, std::move(m), stamp_);
  if (trace_.full()) {
    trace_.append(EventKind::Send, from, stamp_,
                  {{"to", to.str()}, {"msgId", env.id}, {"msg", message_to_json(env.message)}, {"reply", id}});
  }
}

void QpropSimulation::chain(const NodeId& n, std::vector<NodeId> targets, WireMessage m, std::size_t idx, Done done) {
  if (idx >= targets.size()) {
    done(*this);
    return;
  }
  NodeId target = targets[idx];
  send_request(n, target, m, [n, targets, m, idx, done](QpropSimulation& sim, const WireMessage&) {
    sim.chain(n, targets, m, idx + 1, done);
  });
}

bool QpropSimulation::deliver_one() {
  auto key = net_.choose();
  if (!key) return false;
  deliver(*key);
  return true;
}

void QpropSimulation::deliver(const ChannelKey& key) {
  auto env = net_.pop(key);
  const NodeId& n = key.to;
  stamp_ = now() + cost(n);
  net_.set_busy_until(n, stamp_);
  handle(n, key.from, env);
  sample();
}

void QpropSimulation::sample() {
  stored_.tick();
  for (const auto& [id, a] : actors_) {
    if (!a.retired) stored_.sample(id, a.state.stored());
  }
}

void QpropSimulation::handle(const NodeId& n, const NodeId& from, const Network<WireMessage>::Envelope& env) {
  Actor& a = actor(n);
  NodeState& st = a.state;
  std::optional<std::size_t> deliver_index;
  if (trace_.full()) {
    trace_.append(EventKind::Deliver, n, now(), {{"from", from.str()}, {"msgId", env.id}, {"msg", message_to_json(env.message)}});
    deliver_index = trace_.size() - 1;
  }
  nlohmann::json extra = nlohmann::json::object();

  if (a.retired) {
    if (const auto* c = std::get_if<msg::Change>(&env.message)) {
      note(n, EventKind::Prune,
           {{"pred", from.str()}, {"removed", nlohmann::json::array({c->value.fclock})}, {"reason", "notPredecessor"}});
    }
  } else if (is_request(env.message) && net_.awaiting(n)) {
    throw SimulationError("request delivered to '" + n.str() + "' while it awaits a reply");
  } else {
    const EngineOptions& opts = config_.engine;
    std::visit(
        overloaded{
            [&](const msg::Sources& m) { apply(n, handle_sources(st, m)); },
            [&](const msg::Start&) {
              apply(n, handle_start(st));
              flush_emits(n);
            },
            [&](const msg::Change& m) { on_change(n, m.value, extra); },
            [&](const msg::Emit& m) {
              if (!st.is_source()) {
                note(n, EventKind::Prune, {{"pred", from.str()}, {"reason", "notSource"}});
                return;
              }
              a.pending_emits.push_back(m);
              if (!st.may_emit || net_.awaiting(n)) extra["deferred"] = true;
              flush_emits(n);
            },
            [&](const msg::NewSucc& m) { reply(n, from, *env.request, handle_new_succ(st, m.succ)); },
            [&](const msg::RemSucc& m) { reply(n, from, *env.request, handle_rem_succ(st, m.succ)); },
            [&](const msg::AddSources& m) {
              apply(n, apply_add_sources(st, m.from, m.sources, opts));
              RequestId id = *env.request;
              chain(n, {st.ds.begin(), st.ds.end()}, msg::AddSources{n, m.sources}, 0,
                    [n, from, id](QpropSimulation& sim) { sim.reply(n, from, id, msg::Ack{}); });
            },
            [&](const msg::RemSources& m) {
              auto out = apply_rem_sources(st, m.from, m.sources, opts);
              apply(n, std::move(out.effects));
              RequestId id = *env.request;
              chain(n, {st.ds.begin(), st.ds.end()}, msg::RemSources{n, out.removed}, 0,
                    [n, from, id](QpropSimulation& sim) { sim.reply(n, from, id, msg::Ack{}); });
            },
            [&](const msg::AddSource& m) {
              apply_add_source(st, m.from, m.source);
              RequestId id = *env.request;
              chain(n, {st.ds.begin(), st.ds.end()}, msg::AddSource{n, m.source}, 0,
                    [n, from, id](QpropSimulation& sim) { sim.reply(n, from, id, msg::Ack{}); });
            },
            [&](const auto& replyMsg) {
              // NewSuccReply, SourcesReply, Ack
              if (!a.cont || net_.awaited(n) != env.request) {
                throw SimulationError("unexpected reply at '" + n.str() + "'");
              }
              net_.clear_awaiting(n);
              Continuation cont = std::move(*a.cont);
              a.cont.reset();
              cont(*this, WireMessage{replyMsg});
              flush_deferred(n);
              flush_emits(n);
            },
        },
        env.message);
  }

  if (deliver_index) {
    auto& payload = trace_.mutable_event(*deliver_index).payload;
    for (auto it = extra.begin(); it != extra.end(); ++it) payload[it.key()] = it.value();
    auto inputs = nlohmann::json::object();
    for (const auto& [p, seq] : st.inputs) inputs[p.str()] = seq.size();
    payload["inputs"] = std::move(inputs);
  }
}

void QpropSimulation::on_change(const NodeId& n, const PropagationValue& v, nlohmann::json& extra) {
  Actor& a = actor(n);
  if (!a.state.dp.count(v.from) && !a.state.brittle.count(v.from)) {
    note(n, EventKind::Prune, {{"pred", v.from.str()}, {"removed", nlohmann::json::array({v.fclock})}, {"reason", "notPredecessor"}});
    return;
  }
  if (net_.awaiting(n)) {
    a.deferred.push_back(v);
    extra["deferred"] = true;
    return;
  }
  process_change(n, v);
}

void QpropSimulation::process_change(const NodeId& n, const PropagationValue& v) {
  NodeState& st = actor(n).state;
  apply(n, dynamic_ ? pre_propagate(st, v, config_.engine) : handle_change(st, v, config_.engine));
}

void QpropSimulation::flush_deferred(const NodeId& n) {
  Actor& a = actor(n);
  while (!net_.awaiting(n) && !a.deferred.empty()) {
    PropagationValue v = std::move(a.deferred.front());
    a.deferred.pop_front();
    if (!a.state.dp.count(v.from) && !a.state.brittle.count(v.from)) {
      note(n, EventKind::Prune, {{"pred", v.from.str()}, {"removed", nlohmann::json::array({v.fclock})}, {"reason", "notPredecessor"}});
      continue;
    }
    process_change(n, v);
  }
}

void QpropSimulation::flush_emits(const NodeId& n) {
  Actor& a = actor(n);
  while (a.state.is_source() && a.state.may_emit && !net_.awaiting(n) && !a.pending_emits.empty()) {
    msg::Emit e = a.pending_emits.front();
    a.pending_emits.pop_front();
    emit_now(n, e.payload, e.requested_at);
  }
}

void QpropSimulation::emit_now(const NodeId& n, Payload payload, Tick requested) {
  apply(n, source_emit(actor(n).state, payload, requested));
}

void QpropSimulation::client_emit(const NodeId& source, Payload payload, Tick at) {
  const auto& env = net_.send(kClient, source, msg::Emit{payload, at}, now());
  if (trace_.full()) {
    trace_.append(EventKind::Send, kClient, now(), {{"to", source.str()}, {"msgId", env.id}, {"msg", message_to_json(env.message)}});
  }
}

void QpropSimulation::crash(const NodeId& n) {
  net_.crash(n);
  trace_.append(EventKind::Crash, n, now(), nlohmann::json::object());
}

void QpropSimulation::recover(const NodeId& n) {
  net_.recover(n);
  trace_.append(EventKind::Recover, n, now(), nlohmann::json::object());
}

void QpropSimulation::script_emit(const NodeId& source, std::optional<Payload> payload) {
  const NodeState& st = actor(source).state;
  stamp_ = std::max(now(), net_.busy_until(source));
  emit_now(source, payload.value_or(static_cast<Payload>(st.clock + 1)), now());
  sample();
}

void QpropSimulation::script_deliver(const NodeId& from, const NodeId& to) {
  ChannelKey key{from, to};
  const auto* q = net_.queue(key);
  if (!q || q->empty()) throw SimulationError("nothing to deliver on " + from.str() + " -> " + to.str());
  if (net_.crashed(to)) throw SimulationError("cannot deliver to crashed node '" + to.str() + "'");
  advance_to(std::max(q->front().ready_at, net_.busy_until(to)));
  deliver(key);
  ++deliveries_;
}

void QpropSimulation::script_op(const TopologyOp& op) {
  if (!start_op(op)) throw SimulationError("another topology operation is still running");
  // Complete the operation touching control traffic only, so scripted changes stay put.
  while (op_) {
    std::optional<ChannelKey> pick;
    for (const auto& [key, q] : net_.channels()) {
      if (!q.empty() && q.front().control() && !net_.crashed(key.to)) {
        pick = key;
        break;
      }
    }
    if (!pick) {
      for (const auto& [key, q] : net_.channels()) {
        bool carries = std::any_of(q.begin(), q.end(), [](const auto& e) { return e.control(); });
        if (carries && !net_.crashed(key.to)) {
          pick = key;
          break;
        }
      }
    }
    if (!pick) throw SimulationError("topology operation '" + op.describe() + "' cannot complete");
    const auto& head = net_.queue(*pick)->front();
    advance_to(std::max(head.ready_at, net_.busy_until(pick->to)));
    deliver(*pick);
    ++deliveries_;
  }
}

bool QpropSimulation::start_op(const TopologyOp& op) {
  if (op_) return false;
  if (!dynamic_) throw SimulationError("topology operations require the qprop_d engine");

  auto live = [&](const NodeId& n) { return actors_.count(n) && !actors_.at(n).retired; };
  OpRun run{op, {}, false};
  std::string problem;
  try {
    switch (op.kind) {
      case TopologyOpKind::AddDependency:
        if (!live(op.node) || !live(op.pred)) {
          problem = "UnknownNode";
        } else if (actor(op.node).state.dp.count(op.pred)) {
          problem = "AlreadyAPredecessor";
        } else {
          (void)topo_.with_edge(op.pred, op.node);
          run.steps.push_back({Primitive::Kind::AddDependency, op.node, op.pred});
        }
        break;
      case TopologyOpKind::RemoveDependency:
        if (!live(op.node) || !actor(op.node).state.dp.count(op.pred)) {
          problem = "NotAPredecessor";
        } else {
          run.steps.push_back({Primitive::Kind::RemoveDependency, op.node, op.pred});
        }
        break;
      case TopologyOpKind::AddNode: {
        if (actors_.count(op.node)) {
          problem = "DuplicateNode";
          break;
        }
        Topology t = topo_.with_node(op.node);
        for (const auto& p : op.preds) {
          if (!live(p)) problem = "UnknownNode";
        }
        for (const auto& s : op.succs) {
          if (!live(s)) problem = "UnknownNode";
        }
        if (!problem.empty()) break;
        for (const auto& p : op.preds) t = t.with_edge(p, op.node);
        for (const auto& s : op.succs) t = t.with_edge(op.node, s);
        for (const auto& p : op.preds) run.steps.push_back({Primitive::Kind::AddDependency, op.node, p});
        for (const auto& s : op.succs) run.steps.push_back({Primitive::Kind::AddDependency, s, op.node});
        break;
      }
      case TopologyOpKind::RemoveNode:
        if (!live(op.node)) {
          problem = "UnknownNode";
          break;
        }
        for (const auto& p : actor(op.node).state.dp) {
          run.steps.push_back({Primitive::Kind::RemoveDependency, op.node, p});
        }
        for (const auto& s : actor(op.node).state.ds) {
          run.steps.push_back({Primitive::Kind::RemoveDependency, s, op.node});
        }
        run.steps.push_back({Primitive::Kind::Retire, op.node, {}});
        break;
    }
  } catch (const GraphError& e) {
    problem = e.kind() == GraphError::Kind::CycleDetected ? "WouldCreateCycle" : e.what();
  }

  op_ = std::move(run);
  if (!problem.empty()) {
    abort_op(problem);
    return true;
  }
  record_op("begin");
  if (op.kind == TopologyOpKind::AddNode) {
    Actor a;
    a.state = make_fresh_node(op.node, op.spec.init, op.spec.fn);
    if (op.preds.empty()) a.state.last_prop.sclocks = {{op.node, 0}};
    actors_.emplace(op.node, std::move(a));
    net_.add_endpoint(op.node);
    topo_ = topo_.with_node(op.node);
  }
  run_next_primitive();
  return true;
}

void QpropSimulation::record_op(const char* phase, const std::string& reason) {
  const TopologyOp& op = op_->op;
  nlohmann::json payload{{"op", to_string(op.kind)}, {"node", op.node.str()}, {"phase", phase}};
  if (!op.pred.empty()) payload["pred"] = op.pred.str();
  if (op.kind == TopologyOpKind::AddNode) {
    payload["preds"] = ids_to_json({op.preds.begin(), op.preds.end()});
    payload["succs"] = ids_to_json({op.succs.begin(), op.succs.end()});
  }
  if (!reason.empty()) payload["reason"] = reason;
  trace_.append(EventKind::TopologyOp, op.node, now(), std::move(payload));
}

void QpropSimulation::abort_op(const std::string& reason) {
  record_op("aborted", reason);
  op_.reset();
}

void QpropSimulation::run_next_primitive() {
  if (op_->steps.empty()) {
    record_op("done");
    op_.reset();
    return;
  }
  const Primitive p = op_->steps.front();
  const NodeId n = p.node;
  const NodeId pred = p.pred;
  const EngineOptions opts = config_.engine;

  if (p.kind == Primitive::Kind::Retire) {
    actor(n).retired = true;
    finish_primitive();
    return;
  }
  if (net_.crashed(n)) {
    abort_op("InitiatorCrashed");
    return;
  }
  stamp_ = std::max(now(), net_.busy_until(n)) + cost(n);
  net_.set_busy_until(n, stamp_);

  try {
    if (p.kind == Primitive::Kind::AddDependency) {
      send_request(
          n, pred, msg::NewSucc{n},
          [n, pred, opts](QpropSimulation& sim, const WireMessage& r) {
            NodeState& st = sim.actor(n).state;
            const auto& rep = std::get<msg::NewSuccReply>(r);
            begin_add_dependency(st, pred, rep);
            sim.apply(n, apply_add_sources(st, pred, rep.sources, opts));
            sim.chain(n, {st.ds.begin(), st.ds.end()}, msg::AddSources{n, rep.sources}, 0,
                      [](QpropSimulation& s) { s.finish_primitive(); });
          },
          true);
    } else {
      send_request(
          n, pred, msg::RemSucc{n},
          [n, pred, opts](QpropSimulation& sim, const WireMessage& r) {
            NodeState& st = sim.actor(n).state;
            const auto& rep = std::get<msg::SourcesReply>(r);
            begin_remove_dependency(st, pred);
            auto out = apply_rem_sources(st, pred, rep.sources, opts);
            sim.apply(n, std::move(out.effects));
            sim.chain(n, {st.ds.begin(), st.ds.end()}, msg::RemSources{n, out.removed}, 0, [n](QpropSimulation& s) {
              NodeState& self = s.actor(n).state;
              if (!self.dp.empty()) {
                s.finish_primitive();
                return;
              }
              // The initiator became a source.
              self.may_emit = true;
              s.chain(n, {self.ds.begin(), self.ds.end()}, msg::AddSource{n, n}, 0,
                      [](QpropSimulation& s2) { s2.finish_primitive(); });
            });
          },
          true);
    }
  } catch (const TransportError& e) {
    if (e.kind() != TransportError::Kind::ReceiverCrashed) throw;
    abort_op("PredecessorCrashed");
  }
}

void QpropSimulation::finish_primitive() {
  const Primitive p = op_->steps.front();
  op_->steps.pop_front();
  switch (p.kind) {
    case Primitive::Kind::AddDependency:
      topo_ = topo_.with_edge(p.pred, p.node);
      break;
    case Primitive::Kind::RemoveDependency:
      topo_ = topo_.without_edge(p.pred, p.node);
      break;
    case Primitive::Kind::Retire:
      topo_ = topo_.without_node(p.node);
      break;
  }
  run_next_primitive();
}

std::map<NodeId, PropagationValue> QpropSimulation::last_props() const {
  std::map<NodeId, PropagationValue> out;
  for (const auto& [id, a] : actors_) {
    if (!a.retired) out.emplace(id, a.state.last_prop);
  }
  return out;
}

std::map<NodeId, LogicalTime> QpropSimulation::source_clocks() const {
  std::map<NodeId, LogicalTime> out;
  for (const auto& [id, a] : actors_) {
    if (!a.retired && a.state.is_source()) out[id] = clock_of(a.state.last_prop, id).value_or(0);
  }
  return out;
}

std::map<NodeId, RoutingTable> QpropSimulation::routing_tables() const {
  std::map<NodeId, RoutingTable> out;
  for (const auto& [id, a] : actors_) {
    if (!a.retired) out.emplace(id, a.state.routes);
  }
  return out;
}

std::vector<ChannelKey> QpropSimulation::nonempty_channels() const {
  std::vector<ChannelKey> out;
  for (const auto& [key, q] : net_.channels()) {
    if (!q.empty() && !net_.crashed(key.to)) out.push_back(key);
  }
  return out;
}

std::string QpropSimulation::fingerprint() const {
  std::string out;
  auto seq = [&](const ValueSeq& s) {
    for (const auto& v : s) out += to_string(v);
    out += ';';
  };
  for (const auto& [id, a] : actors_) {
    const NodeState& st = a.state;
    out += id.str() + '{';
    for (const auto& [p, s] : st.inputs) {
      out += p.str() + ':';
      seq(s);
    }
    out += '|';
    for (const auto& [p, s] : st.brittle) {
      out += p.str() + ':';
      seq(s);
    }
    out += '|' + to_string(st.last_prop) + '|' + std::to_string(st.clock) + (st.may_emit ? "e" : "") + '|';
    for (const auto& v : st.last_match) out += to_string(v);
    out += '|';
    for (const auto& v : a.deferred) out += to_string(v);
    out += '}';
  }
  for (const auto& [key, q] : net_.channels()) {
    if (q.empty()) continue;
    out += key.from.str() + '>' + key.to.str() + '[';
    for (const auto& e : q) {
      if (const auto* c = std::get_if<msg::Change>(&e.message)) {
        out += to_string(c->value);
      } else {
        out += message_name(e.message);
      }
    }
    out += ']';
  }
  return out;
}

}  // namespace qprop
