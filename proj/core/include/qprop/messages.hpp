#pragma once

#include <set>
#include <string>
#include <variant>

#include <nlohmann/json_fwd.hpp>

#include "qprop/value.hpp"

namespace qprop {

namespace msg {

// Exploration: sources able to reach the sender plus its initial value.
struct Sources {
  std::set<NodeId> sources;
  PropagationValue init;
};
struct Start {};
struct Change {
  PropagationValue value;
};
struct NewSucc {
  NodeId succ;
};
struct AddSources {
  NodeId from;
  std::set<NodeId> sources;
};
struct RemSucc {
  NodeId succ;
};
struct RemSources {
  NodeId from;
  std::set<NodeId> sources;
};
struct AddSource {
  NodeId from;
  NodeId source;
};

struct NewSuccReply {
  PropagationValue last_prop;
  std::set<NodeId> sources;
};
struct SourcesReply {
  std::set<NodeId> sources;
};
struct Ack {};

// A client request asking a source to emit a payload.
struct Emit {
  Payload payload = 0;
  Tick requested_at = 0;
};

}  // namespace msg

using ProtocolMessage = std::variant<msg::Sources, msg::Start, msg::Change, msg::NewSucc, msg::AddSources,
                                     msg::RemSucc, msg::RemSources, msg::AddSource>;

// Everything a QPROP channel can carry.
using WireMessage =
    std::variant<msg::Sources, msg::Start, msg::Change, msg::NewSucc, msg::AddSources, msg::RemSucc, msg::RemSources,
                 msg::AddSource, msg::NewSuccReply, msg::SourcesReply, msg::Ack, msg::Emit>;

std::string message_name(const WireMessage& m);
bool is_request(const WireMessage& m);
bool is_reply(const WireMessage& m);

void to_json(nlohmann::json& j, const WireMessage& m);
nlohmann::json message_to_json(const WireMessage& m);

}  // namespace qprop
