#include "qprop/engine.hpp"

#include <algorithm>
#include <utility>

namespace qprop {

Payload UpdateFunction::apply(const std::vector<Payload>& args) const {
  switch (kind) {
    case Kind::Sum:
    case Kind::Busywork: {
      Payload total = 0;
      for (auto a : args) total += a;
      return total;
    }
    case Kind::Difference: {
      if (args.empty()) return 0;
      Payload out = args.front();
      for (std::size_t i = 1; i < args.size(); ++i) out -= args[i];
      return out;
    }
    case Kind::Identity:
      return args.empty() ? 0 : args.front();
  }
  return 0;
}

std::string UpdateFunction::name() const {
  switch (kind) {
    case Kind::Sum:
      return "sum";
    case Kind::Difference:
      return "difference";
    case Kind::Identity:
      return "identity";
    case Kind::Busywork:
      return "busywork " + std::to_string(cost);
  }
  return "?";
}

std::size_t NodeState::stored() const {
  std::size_t n = 0;
  for (const auto& [p, seq] : inputs) n += seq.size();
  for (const auto& [p, seq] : brittle) n += seq.size();
  return n;
}

NodeState make_node(const NodeId& self, std::set<NodeId> dp, std::set<NodeId> ds, Payload init, UpdateFunction fn) {
  NodeState st;
  st.self = self;
  st.dp = std::move(dp);
  st.ds = std::move(ds);
  st.init_value = init;
  st.fn = fn;
  return st;
}

void Effects::merge(Effects&& other) {
  for (auto& s : other.sends) sends.push_back(std::move(s));
  for (auto& n : other.notes) notes.push_back(std::move(n));
}

bool Effects::updated() const {
  return std::any_of(notes.begin(), notes.end(), [](const Note& n) { return n.kind == EventKind::Update; });
}

namespace {

void broadcast(Effects& fx, const std::set<NodeId>& to, const WireMessage& m) {
  for (const auto& n : to) fx.sends.push_back(Outbound{n, m});
}

}  // namespace

Effects init_exploration(NodeState& st) {
  if (st.initialized) throw EngineError(EngineError::Kind::AlreadyInitialized, st.self.str() + " already initialized");
  st.initialized = true;
  st.sources_received = 0;
  for (const auto& p : st.dp) st.inputs[p];
  Effects fx;
  if (st.is_source()) {
    st.last_prop = PropagationValue{st.self, st.init_value, {{st.self, 0}}, 0};
    st.explored = true;
    broadcast(fx, st.ds, msg::Sources{{st.self}, st.last_prop});
    // Nobody will ever send start to a source without successors.
    if (st.ds.empty()) st.may_emit = true;
  }
  return fx;
}

Effects handle_sources(NodeState& st, const msg::Sources& m) {
  const NodeId& from = m.init.from;
  if (!st.dp.count(from)) {
    throw EngineError(EngineError::Kind::UnknownPredecessor, from.str() + " is not a predecessor of " + st.self.str());
  }
  insert_ordered(st.inputs[from], m.init);
  ++st.sources_received;
  for (const auto& s : m.sources) st.routes[s].insert(from);

  Effects fx;
  if (st.sources_received == st.dp.size()) {
    st.explored = true;
    std::set<NodeId> all;
    SourceClockMap clocks;
    for (const auto& [s, preds] : st.routes) {
      all.insert(s);
      clocks[s] = 0;
    }
    st.last_prop = PropagationValue{st.self, st.init_value, clocks, 0};
    broadcast(fx, st.ds, msg::Sources{all, st.last_prop});
    fx.merge(init_barrier(st));
  }
  return fx;
}

Effects init_barrier(const NodeState& st) {
  Effects fx;
  if (st.ds.empty() && st.sources_received == st.dp.size()) broadcast(fx, st.dp, msg::Start{});
  return fx;
}

Effects handle_start(NodeState& st) {
  ++st.starts_received;
  Effects fx;
  if (st.starts_received == st.ds.size()) {
    if (st.is_source()) {
      st.may_emit = true;
    } else {
      broadcast(fx, st.dp, msg::Start{});
    }
  }
  return fx;
}

Effects source_emit(NodeState& st, Payload payload, Tick requested_at) {
  if (!st.is_source()) throw EngineError(EngineError::Kind::NotASource, st.self.str() + " is not a source");
  if (!st.may_emit) throw EngineError(EngineError::Kind::BarrierNotPassed, st.self.str() + " may not emit yet");
  ++st.clock;
  st.last_prop = PropagationValue{st.self, payload, {{st.self, st.clock}}, st.clock};
  Effects fx;
  broadcast(fx, st.ds, msg::Change{st.last_prop});
  fx.notes.push_back(Note{EventKind::SourceEmit, {{"value", st.last_prop}, {"requested", requested_at}}});
  return fx;
}

std::vector<Combination> candidate_combinations(const NodeState& st, const PropagationValue& v_new,
                                                std::size_t limit) {
  std::vector<Combination> out{Combination{}};
  for (const auto& [pred, seq] : st.inputs) {
    std::vector<Combination> next;
    if (pred == v_new.from) {
      for (auto& c : out) {
        c.push_back(v_new);
        next.push_back(std::move(c));
      }
    } else {
      for (const auto& c : out) {
        for (const auto& v : seq) {
          if (next.size() >= limit) {
            throw EngineError(EngineError::Kind::CombinationLimit,
                              st.self.str() + ": more than " + std::to_string(limit) + " argument combinations");
          }
          auto extended = c;
          extended.push_back(v);
          next.push_back(std::move(extended));
        }
      }
    }
    out = std::move(next);
  }
  return out;
}

bool glitch_free(const Combination& combo, const RoutingTable& routes) {
  for (const auto& [s, preds] : routes) {
    std::optional<LogicalTime> seen;
    for (const auto& arg : combo) {
      if (!preds.count(arg.from)) continue;
      auto c = clock_of(arg, s);
      if (!c) continue;
      if (seen && *seen != *c) return false;
      seen = c;
    }
  }
  return true;
}

std::vector<Combination> glitch_free_filter(const std::vector<Combination>& combos, const RoutingTable& routes) {
  std::vector<Combination> out;
  for (const auto& c : combos) {
    if (glitch_free(c, routes)) out.push_back(c);
  }
  return out;
}

const Combination& select_last_match(const std::vector<Combination>& matches) {
  if (matches.empty()) throw EngineError(EngineError::Kind::EmptyMatches, "no matches to choose from");
  auto key = [](const Combination& c) {
    std::vector<LogicalTime> k;
    k.reserve(c.size());
    for (const auto& v : c) k.push_back(v.fclock);
    return k;
  };
  const Combination* best = &matches.front();
  auto best_key = key(*best);
  for (const auto& m : matches) {
    auto k = key(m);
    if (k > best_key) {
      best = &m;
      best_key = std::move(k);
    }
  }
  return *best;
}

SourceClockMap merge_sclocks(const Combination& combo) {
  SourceClockMap out;
  for (const auto& arg : combo) {
    for (const auto& [s, c] : arg.sclocks) {
      auto [it, inserted] = out.emplace(s, c);
      if (!inserted && it->second != c) {
        throw EngineError(EngineError::Kind::InconsistentOverlap,
                          "arguments disagree on " + s.str() + ": " + std::to_string(it->second) + " vs " +
                              std::to_string(c));
      }
    }
  }
  return out;
}

namespace {

class MatchSearch {
 public:
  MatchSearch(const NodeState& st, const PropagationValue& v_new, std::size_t limit)
      : st_(st), v_new_(v_new), limit_(limit) {
    for (const auto& [pred, seq] : st.inputs) coords_.push_back(&pred);
  }

  std::optional<Combination> run() {
    if (descend(0)) return chosen_;
    return std::nullopt;
  }

 private:
  bool descend(std::size_t i) {
    if (i == coords_.size()) return true;
    const NodeId& pred = *coords_[i];
    if (pred == v_new_.from) return attempt(i, v_new_);
    const auto& seq = st_.inputs.at(pred);
    for (auto it = seq.rbegin(); it != seq.rend(); ++it) {
      if (attempt(i, *it)) return true;
    }
    return false;
  }

  bool attempt(std::size_t i, const PropagationValue& v) {
    if (++visited_ > limit_) {
      throw EngineError(EngineError::Kind::CombinationLimit,
                        st_.self.str() + ": more than " + std::to_string(limit_) + " argument combinations");
    }
    const NodeId& pred = *coords_[i];
    std::vector<NodeId> bound_here;
    for (const auto& [s, c] : v.sclocks) {
      auto r = st_.routes.find(s);
      if (r == st_.routes.end() || !r->second.count(pred)) continue;
      auto b = bound_.find(s);
      if (b == bound_.end()) {
        bound_.emplace(s, c);
        bound_here.push_back(s);
      } else if (b->second != c) {
        for (const auto& u : bound_here) bound_.erase(u);
        return false;
      }
    }
    chosen_.push_back(v);
    if (descend(i + 1)) return true;
    chosen_.pop_back();
    for (const auto& u : bound_here) bound_.erase(u);
    return false;
  }

  const NodeState& st_;
  const PropagationValue& v_new_;
  std::size_t limit_;
  std::size_t visited_ = 0;
  std::vector<const NodeId*> coords_;
  std::map<NodeId, LogicalTime> bound_;
  Combination chosen_;
};

}  // namespace

std::optional<Combination> find_last_match(const NodeState& st, const PropagationValue& v_new, std::size_t limit) {
  return MatchSearch(st, v_new, limit).run();
}

Effects handle_change(NodeState& st, const PropagationValue& v_new, const EngineOptions& opts) {
  const NodeId& from = v_new.from;
  if (!st.dp.count(from)) {
    throw EngineError(EngineError::Kind::UnknownPredecessor, from.str() + " is not a predecessor of " + st.self.str());
  }
  if (!st.explored) {
    throw EngineError(EngineError::Kind::BarrierNotPassed,
                      st.self.str() + " received a change before exploring its predecessors");
  }
  auto& seq = st.inputs[from];
  insert_ordered(seq, v_new);
  if (opts.store_limit && seq.size() > opts.store_limit) {
    throw EngineError(EngineError::Kind::StallSuspected, st.self.str() + " holds more than " +
                                                              std::to_string(opts.store_limit) + " values from " +
                                                              from.str());
  }

  Effects fx;
  auto match = find_last_match(st, v_new, opts.max_combinations);
  if (!match) return fx;

  std::vector<Payload> args;
  args.reserve(match->size());
  for (const auto& v : *match) args.push_back(v.value);
  ++st.clock;
  st.last_prop = PropagationValue{st.self, st.fn.apply(args), merge_sclocks(*match), st.clock};
  st.last_match = *match;
  broadcast(fx, st.ds, msg::Change{st.last_prop});

  nlohmann::json payload{{"value", st.last_prop}};
  if (opts.detailed) payload["args"] = *match;
  fx.notes.push_back(Note{EventKind::Update, std::move(payload)});
  fx.merge(prune_stale(st, *match, opts));
  return fx;
}

Effects prune_stale(NodeState& st, const Combination& last_match, const EngineOptions& opts) {
  Effects fx;
  for (const auto& arg : last_match) {
    auto it = st.inputs.find(arg.from);
    if (it == st.inputs.end()) continue;
    auto& seq = it->second;
    auto cut = std::find_if(seq.begin(), seq.end(), [&](const PropagationValue& v) { return v.fclock >= arg.fclock; });
    if (opts.detailed) {
      auto removed = nlohmann::json::array();
      for (auto r = seq.begin(); r != cut; ++r) removed.push_back(r->fclock);
      fx.notes.push_back(
          Note{EventKind::Prune, {{"pred", arg.from.str()}, {"below", arg.fclock}, {"removed", std::move(removed)}}});
    }
    seq.erase(seq.begin(), cut);
  }
  return fx;
}

nlohmann::json routes_to_json(const RoutingTable& routes) {
  auto j = nlohmann::json::object();
  for (const auto& [s, preds] : routes) j[s.str()] = ids_to_json(preds);
  return j;
}

}  // namespace qprop
