#include "qprop/dynamic.hpp"

#include <algorithm>
#include <cstdint>

namespace qprop {

bool is_brittle(const NodeState& st, const NodeId& pred) { return st.brittle.count(pred) != 0; }

bool has_brittle_sibling(const NodeState& st, const NodeId& pred) {
  for (const auto& [s, dps] : st.routes) {
    if (!dps.count(pred)) continue;
    for (const auto& b : dps) {
      if (b != pred && is_brittle(st, b)) return true;
    }
  }
  return false;
}

bool is_brittle_sibling(const NodeState& st, const NodeId& pred_brittle, const NodeId& pred) {
  if (pred_brittle == pred || !is_brittle(st, pred_brittle)) return false;
  return std::any_of(st.routes.begin(), st.routes.end(),
                     [&](const auto& e) { return e.second.count(pred_brittle) && e.second.count(pred); });
}

bool synchronised(const NodeState& st, const NodeId& pred_brittle) {
  auto b = st.brittle.find(pred_brittle);
  if (b == st.brittle.end() || b->second.empty()) return false;
  const PropagationValue& head = b->second.front();
  for (const auto& pred : st.dp) {
    if (pred == pred_brittle) continue;
    for (const auto& [s, dps] : st.routes) {
      if (!dps.count(pred) || !dps.count(pred_brittle)) continue;
      auto in = st.inputs.find(pred);
      if (in == st.inputs.end() || in->second.empty()) return false;
      auto bc = clock_of(head, s);
      auto ic = clock_of(in->second.front(), s);
      // A value older than the key's introduction is unconstrained for it.
      if (!bc || !ic) continue;
      if (static_cast<std::int64_t>(*bc) - static_cast<std::int64_t>(*ic) > 1) return false;
    }
  }
  return true;
}

Effects move_to_i(NodeState& st, const NodeId& pred_brittle, const EngineOptions& opts) {
  auto b = st.brittle.find(pred_brittle);
  if (b == st.brittle.end()) {
    throw EngineError(EngineError::Kind::NotBrittle, pred_brittle.str() + " is not brittle for " + st.self.str());
  }
  auto& seq = st.inputs[pred_brittle];
  auto moved = nlohmann::json::array();
  for (const auto& v : b->second) {
    insert_ordered(seq, v);
    moved.push_back(v.fclock);
  }
  st.brittle.erase(b);
  Effects fx;
  if (opts.detailed) fx.notes.push_back(Note{EventKind::MoveToI, {{"pred", pred_brittle.str()}, {"moved", moved}}});
  return fx;
}

Effects pre_propagate(NodeState& st, const PropagationValue& v_new, const EngineOptions& opts) {
  const NodeId& from = v_new.from;
  if (!st.dp.count(from) && !is_brittle(st, from)) {
    throw EngineError(EngineError::Kind::UnknownPredecessor, from.str() + " is not a predecessor of " + st.self.str());
  }

  if (!is_brittle(st, from)) {
    if (!has_brittle_sibling(st, from)) return handle_change(st, v_new, opts);

    insert_ordered(st.inputs[from], v_new);
    Effects fx;
    for (const auto& pred : st.dp) {
      if (is_brittle_sibling(st, pred, from) && st.brittle.at(pred).empty()) return fx;
    }
    fx.merge(handle_change(st, v_new, opts));
    for (const auto& pred : st.dp) {
      if (is_brittle_sibling(st, pred, from) && synchronised(st, pred)) fx.merge(move_to_i(st, pred, opts));
    }
    return fx;
  }

  auto& held = st.brittle.at(from);
  insert_ordered(held, v_new);
  Effects fx;
  if (held.size() != 1) return fx;
  if (synchronised(st, from)) {
    fx.merge(move_to_i(st, from, opts));
    fx.merge(handle_change(st, v_new, opts));
    return fx;
  }
  // Values stored by non-brittle siblings while B_r.from was empty were never processed.
  for (const auto& pred : std::set<NodeId>(st.dp)) {
    if (!is_brittle_sibling(st, from, pred)) continue;
    auto it = st.inputs.find(pred);
    if (it == st.inputs.end() || it->second.size() < 2) continue;
    ValueSeq pending(it->second.begin() + 1, it->second.end());
    for (const auto& val : pending) {
      const auto& now = st.inputs[pred];
      bool still_held = std::any_of(now.begin(), now.end(), [&](const PropagationValue& v) { return v == val; });
      if (!still_held) continue;
      fx.merge(pre_propagate(st, val, opts));
    }
  }
  return fx;
}

msg::NewSuccReply handle_new_succ(NodeState& st, const NodeId& succ) {
  st.ds.insert(succ);
  if (st.is_source()) return {st.last_prop, {st.self}};
  std::set<NodeId> all;
  for (const auto& [s, preds] : st.routes) all.insert(s);
  return {st.last_prop, all};
}

msg::SourcesReply handle_rem_succ(NodeState& st, const NodeId& succ) {
  st.ds.erase(succ);
  if (st.is_source()) return {{st.self}};
  std::set<NodeId> all;
  for (const auto& [s, preds] : st.routes) all.insert(s);
  return {all};
}

Effects apply_add_sources(NodeState& st, const NodeId& from, const std::set<NodeId>& sources,
                          const EngineOptions& opts) {
  Effects fx;
  for (const auto& source : sources) {
    auto it = st.routes.find(source);
    if (it == st.routes.end()) {
      st.routes[source] = {from};
      continue;
    }
    // Only a genuinely new route makes `from` brittle; re-announcing a known one must not.
    if (it->second.insert(from).second && !st.brittle.count(from)) {
      st.brittle[from];
      if (opts.detailed) fx.notes.push_back(Note{EventKind::Brittle, {{"pred", from.str()}, {"source", source.str()}}});
    }
  }
  return fx;
}

RemSourcesOutcome apply_rem_sources(NodeState& st, const NodeId& from, const std::set<NodeId>& sources,
                                    const EngineOptions& opts) {
  RemSourcesOutcome out;
  for (const auto& source : sources) {
    auto it = st.routes.find(source);
    if (it == st.routes.end()) continue;
    it->second.erase(from);
    if (it->second.empty()) {
      st.routes.erase(it);
      out.removed.insert(source);
    } else if (auto in = st.inputs.find(from); in != st.inputs.end()) {
      if (opts.detailed) {
        auto removed = nlohmann::json::array();
        for (const auto& v : in->second) removed.push_back(v.fclock);
        out.effects.notes.push_back(
            Note{EventKind::Prune, {{"pred", from.str()}, {"removed", removed}, {"reason", "remSources"}}});
      }
      in->second.clear();
    }
  }
  return out;
}

void apply_add_source(NodeState& st, const NodeId& from, const NodeId& source) { st.routes[source].insert(from); }

void begin_add_dependency(NodeState& st, const NodeId& pred, const msg::NewSuccReply& reply) {
  st.dp.insert(pred);
  bool overlap = std::any_of(reply.sources.begin(), reply.sources.end(),
                             [&](const NodeId& s) { return st.routes.count(s) != 0; });
  if (!overlap) st.inputs[pred] = {reply.last_prop};
}

void begin_remove_dependency(NodeState& st, const NodeId& pred) {
  if (!st.dp.count(pred)) {
    throw EngineError(EngineError::Kind::NotAPredecessor, pred.str() + " is not a predecessor of " + st.self.str());
  }
  st.inputs.erase(pred);
  st.dp.erase(pred);
  st.brittle.erase(pred);
}

NodeState make_fresh_node(const NodeId& self, Payload init, UpdateFunction fn) {
  NodeState st = make_node(self, {}, {}, init, fn);
  st.initialized = true;
  st.explored = true;
  st.may_emit = true;
  st.last_prop = PropagationValue{self, init, {}, 0};
  return st;
}

}  // namespace qprop
