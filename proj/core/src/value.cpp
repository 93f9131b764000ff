#include "qprop/value.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace qprop {

std::string to_string(const SourceClockMap& m) {
  std::string out = "{";
  bool first = true;
  for (const auto& [s, c] : m) {
    if (!first) out += ",";
    first = false;
    out += "[" + s.str() + "," + std::to_string(c) + "]";
  }
  return out + "}";
}

std::string to_string(const PropagationValue& v) {
  return "(" + v.from.str() + "," + std::to_string(v.value) + "," + to_string(v.sclocks) + "," +
         std::to_string(v.fclock) + ")";
}

std::optional<LogicalTime> clock_of(const PropagationValue& v, const NodeId& source) {
  auto it = v.sclocks.find(source);
  if (it == v.sclocks.end()) return std::nullopt;
  return it->second;
}

bool insert_ordered(ValueSeq& seq, const PropagationValue& v) {
  auto it = std::lower_bound(seq.begin(), seq.end(), v.fclock,
                             [](const PropagationValue& a, LogicalTime fc) { return a.fclock < fc; });
  if (it != seq.end() && it->fclock == v.fclock) return false;
  seq.insert(it, v);
  return true;
}

void to_json(nlohmann::json& j, const NodeId& id) { j = id.str(); }
void from_json(const nlohmann::json& j, NodeId& id) { id = NodeId(j.get<std::string>()); }

nlohmann::json clocks_to_json(const SourceClockMap& m) {
  auto j = nlohmann::json::object();
  for (const auto& [s, c] : m) j[s.str()] = c;
  return j;
}

SourceClockMap clocks_from_json(const nlohmann::json& j) {
  SourceClockMap m;
  for (auto it = j.begin(); it != j.end(); ++it) m[NodeId(it.key())] = it.value().get<LogicalTime>();
  return m;
}

nlohmann::json ids_to_json(const std::set<NodeId>& ids) {
  auto j = nlohmann::json::array();
  for (const auto& id : ids) j.push_back(id.str());
  return j;
}

std::set<NodeId> ids_from_json(const nlohmann::json& j) {
  std::set<NodeId> out;
  for (const auto& e : j) out.insert(NodeId(e.get<std::string>()));
  return out;
}

void to_json(nlohmann::json& j, const PropagationValue& v) {
  j = nlohmann::json{{"from", v.from.str()}, {"value", v.value}, {"sClocks", clocks_to_json(v.sclocks)},
                     {"fClock", v.fclock}};
}

void from_json(const nlohmann::json& j, PropagationValue& v) {
  v.from = NodeId(j.at("from").get<std::string>());
  v.value = j.at("value").get<Payload>();
  v.sclocks = clocks_from_json(j.at("sClocks"));
  v.fclock = j.at("fClock").get<LogicalTime>();
}

}  // namespace qprop
