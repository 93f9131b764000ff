#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qprop/graph.hpp"
#include "qprop/simulation.hpp"
#include "qprop/transport.hpp"

namespace qprop {

enum class EngineKind { Qprop, QpropD, Central, Quarp };
const char* to_string(EngineKind kind);
std::optional<EngineKind> engine_from_string(std::string_view s);

// sinkCount runs until every generated request reached its sinks;
// sourceCount stops once the sources produced the whole workload.
enum class RunMode { SinkCount, SourceCount };
const char* to_string(RunMode mode);
std::optional<RunMode> mode_from_string(std::string_view s);

struct Workload {
  // Empty source: one stream alternating over all sources.
  NodeId source;
  double rate = 0;      // requests per simulated second
  double duration = 0;  // simulated seconds
  Tick start = 0;
};

struct ScheduledEmission {
  Tick at = 0;
  NodeId source;
  Payload value = 0;
};

struct ScheduledOp {
  Tick at = 0;
  TopologyOp op;
};

struct ScheduledFault {
  Tick at = 0;
  NodeId node;
  bool crash = true;
};

struct ScriptStep {
  enum class Kind { Emit, Deliver, Op, Crash, Recover, Repeat };
  Kind kind = Kind::Emit;
  NodeId a;
  NodeId b;
  std::optional<Payload> value;  // Emit; empty means the next counter value
  TopologyOp op;
  std::optional<std::size_t> times;  // Repeat; empty means forever
  std::vector<ScriptStep> body;
  std::size_t line = 0;
};

struct Scenario {
  std::string name;
  EngineKind engine = EngineKind::Qprop;
  Topology topology;
  std::map<NodeId, NodeSpec> specs;
  Tick delay = 0;
  Tick latency = 0;
  std::map<std::pair<NodeId, NodeId>, Tick> latencies;
  SchedulerMode scheduler = SchedulerMode::SeededRandom;
  std::uint64_t seed = 0;
  std::size_t max_steps = 5'000'000;
  RunMode mode = RunMode::SinkCount;
  std::vector<Workload> workloads;
  std::vector<ScheduledEmission> emissions;
  std::vector<ScheduledOp> ops;
  std::vector<ScheduledFault> faults;
  std::optional<std::vector<ScriptStep>> script;
};

class ScenarioError : public std::runtime_error {
 public:
  enum class Kind { ParseError, ValidationError, IoError };

  ScenarioError(Kind kind, const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), kind_(kind), line_(line) {}
  Kind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

// Line-oriented text format; see docs/scenario-format.md.
Scenario parse_scenario(std::string_view text, const std::string& name = "scenario");
Scenario parse_scenario_json(const nlohmann::json& j, const std::string& name = "scenario");
// Dispatches on the .json extension. Throws ScenarioError.
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const Scenario& s);

// Throws ValidationError.
void validate(const Scenario& s);

UpdateFunction parse_function(const std::vector<std::string>& words, std::size_t& i, std::size_t line);
TopologyOp parse_op(const std::vector<std::string>& words, std::size_t first, std::size_t line);

}  // namespace qprop
