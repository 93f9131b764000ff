#include "qprop/messages.hpp"

#include <nlohmann/json.hpp>

#include "overloaded.hpp"

namespace qprop {

using detail::overloaded;

std::string message_name(const WireMessage& m) {
  return std::visit(overloaded{
                        [](const msg::Sources&) { return "sources"; },
                        [](const msg::Start&) { return "start"; },
                        [](const msg::Change&) { return "change"; },
                        [](const msg::NewSucc&) { return "newSucc"; },
                        [](const msg::AddSources&) { return "addSources"; },
                        [](const msg::RemSucc&) { return "remSucc"; },
                        [](const msg::RemSources&) { return "remSources"; },
                        [](const msg::AddSource&) { return "addSource"; },
                        [](const msg::NewSuccReply&) { return "newSuccReply"; },
                        [](const msg::SourcesReply&) { return "sourcesReply"; },
                        [](const msg::Ack&) { return "ack"; },
                        [](const msg::Emit&) { return "emit"; },
                    },
                    m);
}

bool is_request(const WireMessage& m) {
  return std::holds_alternative<msg::NewSucc>(m) || std::holds_alternative<msg::AddSources>(m) ||
         std::holds_alternative<msg::RemSucc>(m) || std::holds_alternative<msg::RemSources>(m) ||
         std::holds_alternative<msg::AddSource>(m);
}

bool is_reply(const WireMessage& m) {
  return std::holds_alternative<msg::NewSuccReply>(m) || std::holds_alternative<msg::SourcesReply>(m) ||
         std::holds_alternative<msg::Ack>(m);
}

void to_json(nlohmann::json& j, const WireMessage& m) {
  j = nlohmann::json{{"type", message_name(m)}};
  std::visit(overloaded{
                 [&](const msg::Sources& x) {
                   j["sources"] = ids_to_json(x.sources);
                   j["init"] = x.init;
                 },
                 [](const msg::Start&) {},
                 [&](const msg::Change& x) { j["value"] = x.value; },
                 [&](const msg::NewSucc& x) { j["succ"] = x.succ.str(); },
                 [&](const msg::AddSources& x) {
                   j["from"] = x.from.str();
                   j["sources"] = ids_to_json(x.sources);
                 },
                 [&](const msg::RemSucc& x) { j["succ"] = x.succ.str(); },
                 [&](const msg::RemSources& x) {
                   j["from"] = x.from.str();
                   j["sources"] = ids_to_json(x.sources);
                 },
                 [&](const msg::AddSource& x) {
                   j["from"] = x.from.str();
                   j["source"] = x.source.str();
                 },
                 [&](const msg::NewSuccReply& x) {
                   j["lastProp"] = x.last_prop;
                   j["sources"] = ids_to_json(x.sources);
                 },
                 [&](const msg::SourcesReply& x) { j["sources"] = ids_to_json(x.sources); },
                 [](const msg::Ack&) {},
                 [&](const msg::Emit& x) {
                   j["payload"] = x.payload;
                   j["requestedAt"] = x.requested_at;
                 },
             },
             m);
}

nlohmann::json message_to_json(const WireMessage& m) {
  nlohmann::json j;
  to_json(j, m);
  return j;
}

}  // namespace qprop
