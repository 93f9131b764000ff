#include "qprop/trace.hpp"

#include <array>
#include <istream>
#include <ostream>
#include <utility>

namespace qprop {

namespace {

constexpr std::array<std::pair<EventKind, const char*>, 10> kKinds{{
    {EventKind::Send, "Send"},
    {EventKind::Deliver, "Deliver"},
    {EventKind::Update, "Update"},
    {EventKind::Prune, "Prune"},
    {EventKind::SourceEmit, "SourceEmit"},
    {EventKind::TopologyOp, "TopologyOp"},
    {EventKind::Crash, "Crash"},
    {EventKind::Recover, "Recover"},
    {EventKind::Brittle, "Brittle"},
    {EventKind::MoveToI, "MoveToI"},
}};

}  // namespace

const char* to_string(EventKind kind) {
  for (const auto& [k, name] : kKinds) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<EventKind> event_kind_from_string(const std::string& s) {
  for (const auto& [k, name] : kKinds) {
    if (s == name) return k;
  }
  return std::nullopt;
}

const TraceEvent& Trace::append(EventKind kind, const NodeId& node, Tick tick, nlohmann::json payload) {
  events_.push_back(TraceEvent{next_seq_++, tick, kind, node, std::move(payload)});
  return events_.back();
}

std::vector<const TraceEvent*> Trace::of_kind(EventKind kind) const {
  std::vector<const TraceEvent*> out;
  for (const auto& e : events_) {
    if (e.kind == kind) out.push_back(&e);
  }
  return out;
}

std::vector<const TraceEvent*> Trace::at_node(EventKind kind, const NodeId& node) const {
  std::vector<const TraceEvent*> out;
  for (const auto& e : events_) {
    if (e.kind == kind && e.node == node) out.push_back(&e);
  }
  return out;
}

nlohmann::json to_json(const TraceEvent& e) {
  return nlohmann::json{
      {"seq", e.seq}, {"tick", e.tick}, {"kind", to_string(e.kind)}, {"node", e.node.str()}, {"payload", e.payload}};
}

TraceEvent event_from_json(const nlohmann::json& j) {
  TraceEvent e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.tick = j.value("tick", Tick{0});
  auto kind = event_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw TraceError("unknown event kind '" + j.at("kind").get<std::string>() + "'");
  e.kind = *kind;
  e.node = NodeId(j.at("node").get<std::string>());
  e.payload = j.value("payload", nlohmann::json::object());
  return e;
}

void Trace::write_jsonl(std::ostream& os) const {
  for (const auto& e : events_) os << to_json(e).dump() << '\n';
}

Trace Trace::read_jsonl(std::istream& is) {
  Trace t;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  std::uint64_t last_seq = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    TraceEvent e;
    try {
      e = event_from_json(nlohmann::json::parse(line));
    } catch (const std::exception& ex) {
      throw TraceError("line " + std::to_string(lineno) + ": " + ex.what());
    }
    if (!first && e.seq <= last_seq) throw TraceError("line " + std::to_string(lineno) + ": seq not increasing");
    first = false;
    last_seq = e.seq;
    t.next_seq_ = e.seq + 1;
    t.events_.push_back(std::move(e));
  }
  return t;
}

}  // namespace qprop
