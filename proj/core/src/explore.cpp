#include "qprop/explore.hpp"

#include <string>
#include <unordered_set>
#include <vector>

namespace qprop {

namespace {

struct Frame {
  QpropSimulation sim;
  std::map<NodeId, int> budget;
};

std::string budget_key(const std::map<NodeId, int>& budget) {
  std::string out = "#";
  for (const auto& [s, left] : budget) out += s.str() + '=' + std::to_string(left) + ',';
  return out;
}

// Checks one transition: its updates must be glitch free and must not step
// back behind the arguments each node used last.
void check_transition(const QpropSimulation& before, const QpropSimulation& after, ExplorationReport& report) {
  const auto& events = after.trace().events();
  if (report.glitch.holds) {
    auto v = check_glitch_freedom(after.trace(), after.topology());
    if (!v.holds) report.glitch = v;
  }
  if (report.monotonic.holds) {
    Trace t;
    std::set<NodeId> seeded;
    for (const auto& e : events) {
      if (e.kind != EventKind::Update || seeded.count(e.node)) continue;
      seeded.insert(e.node);
      const auto& prev = before.node(e.node).last_match;
      if (!prev.empty()) t.append(EventKind::Update, e.node, e.tick, {{"args", prev}, {"previous", true}});
    }
    for (const auto& e : events) {
      if (e.kind == EventKind::Update) t.append(e.kind, e.node, e.tick, e.payload);
    }
    auto v = check_monotonicity(t);
    if (!v.holds) report.monotonic = v;
  }
}

}  // namespace

ExplorationReport explore_interleavings(const QpropSimulation& start, const std::map<NodeId, int>& emissions,
                                        std::size_t state_limit) {
  ExplorationReport report;
  std::unordered_set<std::string> seen;
  std::vector<Frame> stack;
  stack.push_back(Frame{start, emissions});
  stack.back().sim.trace().clear();
  seen.insert(stack.back().sim.fingerprint() + budget_key(emissions));
  report.states = 1;

  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();

    auto channels = frame.sim.nonempty_channels();
    bool any_emit = false;
    for (const auto& [s, left] : frame.budget) any_emit = any_emit || left > 0;
    if (channels.empty() && !any_emit) {
      ++report.terminals;
      if (report.consistent.holds) {
        auto v = check_consistency(frame.sim.last_props(), frame.sim.source_clocks(), frame.sim.topology());
        if (!v.holds) report.consistent = v;
      }
      continue;
    }

    auto visit = [&](Frame next) {
      ++report.transitions;
      check_transition(frame.sim, next.sim, report);
      next.sim.trace().clear();
      if (!seen.insert(next.sim.fingerprint() + budget_key(next.budget)).second) return;
      ++report.states;
      stack.push_back(std::move(next));
    };

    for (const auto& key : channels) {
      if (report.states >= state_limit) {
        report.truncated = true;
        return report;
      }
      Frame next{frame.sim, frame.budget};
      next.sim.script_deliver(key.from, key.to);
      visit(std::move(next));
    }
    for (const auto& [s, left] : frame.budget) {
      if (left <= 0) continue;
      if (report.states >= state_limit) {
        report.truncated = true;
        return report;
      }
      Frame next{frame.sim, frame.budget};
      next.sim.script_emit(s, std::nullopt);
      --next.budget[s];
      visit(std::move(next));
    }
  }
  return report;
}

}  // namespace qprop
