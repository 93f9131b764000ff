#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qprop/graph.hpp"

namespace qprop {

using Payload = std::int64_t;
using LogicalTime = std::uint64_t;
using Tick = std::uint64_t;

// source -> logical time of the source update a value reflects
using SourceClockMap = std::map<NodeId, LogicalTime>;

struct PropagationValue {
  NodeId from;
  Payload value = 0;
  SourceClockMap sclocks;
  LogicalTime fclock = 0;

  friend bool operator==(const PropagationValue&, const PropagationValue&) = default;
};

// Values from one predecessor, ascending by fclock.
using ValueSeq = std::vector<PropagationValue>;

// Renders as (C,10,{[A,1],[B,0]},1).
std::string to_string(const PropagationValue& v);
std::string to_string(const SourceClockMap& m);

std::optional<LogicalTime> clock_of(const PropagationValue& v, const NodeId& source);

// Inserts keeping ascending fclock order; a value with an equal fclock is not duplicated.
// Returns false when the value was already present.
bool insert_ordered(ValueSeq& seq, const PropagationValue& v);

void to_json(nlohmann::json& j, const NodeId& id);
void from_json(const nlohmann::json& j, NodeId& id);
void to_json(nlohmann::json& j, const PropagationValue& v);
void from_json(const nlohmann::json& j, PropagationValue& v);
nlohmann::json clocks_to_json(const SourceClockMap& m);
SourceClockMap clocks_from_json(const nlohmann::json& j);
nlohmann::json ids_to_json(const std::set<NodeId>& ids);
std::set<NodeId> ids_from_json(const nlohmann::json& j);

}  // namespace qprop
