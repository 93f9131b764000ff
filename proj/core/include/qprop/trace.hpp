#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qprop/graph.hpp"
#include "qprop/value.hpp"

namespace qprop {

enum class EventKind { Send, Deliver, Update, Prune, SourceEmit, TopologyOp, Crash, Recover, Brittle, MoveToI };

const char* to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(const std::string& s);

struct TraceEvent {
  std::uint64_t seq = 0;
  Tick tick = 0;
  EventKind kind = EventKind::Send;
  NodeId node;
  nlohmann::json payload;
};

// Full keeps every event; Lean drops per-message events and Update arguments (benchmarks).
enum class TraceDetail { Full, Lean };

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Trace {
 public:
  explicit Trace(TraceDetail detail = TraceDetail::Full) : detail_(detail) {}

  TraceDetail detail() const noexcept { return detail_; }
  bool full() const noexcept { return detail_ == TraceDetail::Full; }

  const TraceEvent& append(EventKind kind, const NodeId& node, Tick tick, nlohmann::json payload);
  const std::vector<TraceEvent>& events() const noexcept { return events_; }
  // For amending an event's payload while its handler is still running.
  TraceEvent& mutable_event(std::size_t index) { return events_.at(index); }
  std::size_t size() const noexcept { return events_.size(); }
  void clear() { events_.clear(); }

  std::vector<const TraceEvent*> of_kind(EventKind kind) const;
  std::vector<const TraceEvent*> at_node(EventKind kind, const NodeId& node) const;

  void write_jsonl(std::ostream& os) const;
  // Throws TraceError with the offending line number.
  static Trace read_jsonl(std::istream& is);

 private:
  TraceDetail detail_;
  std::uint64_t next_seq_ = 0;
  std::vector<TraceEvent> events_;
};

nlohmann::json to_json(const TraceEvent& e);
TraceEvent event_from_json(const nlohmann::json& j);

}  // namespace qprop
