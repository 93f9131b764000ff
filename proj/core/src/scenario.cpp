#include "qprop/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "qprop/generators.hpp"

namespace qprop {

const char* to_string(EngineKind kind) {
  switch (kind) {
    case EngineKind::Qprop:
      return "qprop";
    case EngineKind::QpropD:
      return "qprop_d";
    case EngineKind::Central:
      return "central";
    case EngineKind::Quarp:
      return "quarp";
  }
  return "?";
}

std::optional<EngineKind> engine_from_string(std::string_view s) {
  if (s == "qprop") return EngineKind::Qprop;
  if (s == "qprop_d" || s == "qprop-d") return EngineKind::QpropD;
  if (s == "central") return EngineKind::Central;
  if (s == "quarp") return EngineKind::Quarp;
  return std::nullopt;
}

const char* to_string(RunMode mode) { return mode == RunMode::SinkCount ? "sinkCount" : "sourceCount"; }

std::optional<RunMode> mode_from_string(std::string_view s) {
  if (s == "sinkCount") return RunMode::SinkCount;
  if (s == "sourceCount") return RunMode::SourceCount;
  return std::nullopt;
}

namespace {

using Words = std::vector<std::string>;

[[noreturn]] void parse_error(const std::string& what, std::size_t line) {
  throw ScenarioError(ScenarioError::Kind::ParseError, what, line);
}

[[noreturn]] void invalid(const std::string& what, std::size_t line = 0) {
  throw ScenarioError(ScenarioError::Kind::ValidationError, what, line);
}

template <class T>
T number(const std::string& w, std::size_t line, const char* what) {
  T out{};
  auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), out);
  if (ec != std::errc() || ptr != w.data() + w.size()) parse_error(std::string("expected ") + what + ", got '" + w + "'", line);
  return out;
}

double real(const std::string& w, std::size_t line, const char* what) {
  try {
    std::size_t used = 0;
    double v = std::stod(w, &used);
    if (used == w.size()) return v;
  } catch (const std::exception&) {
  }
  parse_error(std::string("expected ") + what + ", got '" + w + "'", line);
}

const std::string& word(const Words& w, std::size_t i, std::size_t line, const char* what) {
  if (i >= w.size()) parse_error(std::string("missing ") + what, line);
  return w[i];
}

Words split(const std::string& line) {
  Words out;
  std::istringstream is(line);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string function_name(const UpdateFunction& fn) { return fn.name(); }

UpdateFunction function_from_string(const std::string& s, std::size_t line) {
  Words w = split(s);
  std::size_t i = 0;
  return parse_function(w, i, line);
}

}  // namespace

UpdateFunction parse_function(const std::vector<std::string>& words, std::size_t& i, std::size_t line) {
  const std::string& name = word(words, i++, line, "function name");
  if (name == "sum") return UpdateFunction::sum();
  if (name == "difference") return UpdateFunction::difference();
  if (name == "identity") return UpdateFunction::identity();
  if (name == "busywork") return UpdateFunction::busywork(number<Tick>(word(words, i++, line, "busywork ticks"), line, "ticks"));
  parse_error("unknown function '" + name + "'", line);
}

TopologyOp parse_op(const std::vector<std::string>& w, std::size_t first, std::size_t line) {
  TopologyOp op;
  const std::string& kind = word(w, first, line, "operation");
  std::size_t i = first + 1;
  op.node = NodeId(word(w, i++, line, "node"));
  if (kind == "add-dependency" || kind == "remove-dependency") {
    op.kind = kind == "add-dependency" ? TopologyOpKind::AddDependency : TopologyOpKind::RemoveDependency;
    op.pred = NodeId(word(w, i++, line, "predecessor"));
  } else if (kind == "remove-node") {
    op.kind = TopologyOpKind::RemoveNode;
  } else if (kind == "add-node") {
    op.kind = TopologyOpKind::AddNode;
    while (i < w.size()) {
      const std::string& key = w[i++];
      if (key == "init") {
        op.spec.init = number<Payload>(word(w, i++, line, "initial value"), line, "integer");
      } else if (key == "fn") {
        op.spec.fn = parse_function(w, i, line);
      } else if (key == "preds" || key == "succs") {
        auto& dst = key == "preds" ? op.preds : op.succs;
        for (const auto& id : split_list(word(w, i++, line, "node list"))) dst.emplace_back(id);
      } else {
        parse_error("unexpected '" + key + "' in add-node", line);
      }
    }
  } else {
    parse_error("unknown operation '" + kind + "'", line);
  }
  if (i < w.size()) parse_error("trailing '" + w[i] + "'", line);
  return op;
}

namespace {

nlohmann::json op_to_json(const TopologyOp& op) {
  nlohmann::json j{{"op", to_string(op.kind)}, {"node", op.node.str()}};
  if (!op.pred.empty()) j["pred"] = op.pred.str();
  if (op.kind == TopologyOpKind::AddNode) {
    j["init"] = op.spec.init;
    j["fn"] = function_name(op.spec.fn);
    auto preds = nlohmann::json::array();
    for (const auto& p : op.preds) preds.push_back(p.str());
    auto succs = nlohmann::json::array();
    for (const auto& s : op.succs) succs.push_back(s.str());
    j["preds"] = preds;
    j["succs"] = succs;
  }
  return j;
}

TopologyOp op_from_json(const nlohmann::json& j, std::size_t line) {
  TopologyOp op;
  const std::string kind = j.at("op").get<std::string>();
  op.node = NodeId(j.at("node").get<std::string>());
  if (kind == "add-dependency") {
    op.kind = TopologyOpKind::AddDependency;
    op.pred = NodeId(j.at("pred").get<std::string>());
  } else if (kind == "remove-dependency") {
    op.kind = TopologyOpKind::RemoveDependency;
    op.pred = NodeId(j.at("pred").get<std::string>());
  } else if (kind == "remove-node") {
    op.kind = TopologyOpKind::RemoveNode;
  } else if (kind == "add-node") {
    op.kind = TopologyOpKind::AddNode;
    op.spec.init = j.value("init", Payload{0});
    if (j.contains("fn")) op.spec.fn = function_from_string(j.at("fn").get<std::string>(), line);
    for (const auto& p : j.value("preds", nlohmann::json::array())) op.preds.emplace_back(p.get<std::string>());
    for (const auto& s : j.value("succs", nlohmann::json::array())) op.succs.emplace_back(s.get<std::string>());
  } else {
    invalid("unknown operation '" + kind + "'", line);
  }
  return op;
}

nlohmann::json steps_to_json(const std::vector<ScriptStep>& steps) {
  auto out = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json j;
    switch (s.kind) {
      case ScriptStep::Kind::Emit:
        j["emit"] = s.a.str();
        if (s.value) j["value"] = *s.value;
        break;
      case ScriptStep::Kind::Deliver:
        j["deliver"] = {s.a.str(), s.b.str()};
        break;
      case ScriptStep::Kind::Op:
        j["op"] = op_to_json(s.op);
        break;
      case ScriptStep::Kind::Crash:
        j["crash"] = s.a.str();
        break;
      case ScriptStep::Kind::Recover:
        j["recover"] = s.a.str();
        break;
      case ScriptStep::Kind::Repeat:
        if (s.times) {
          j["repeat"] = *s.times;
        } else {
          j["repeat"] = "forever";
        }
        j["body"] = steps_to_json(s.body);
        break;
    }
    if (s.line) j["line"] = s.line;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<ScriptStep> steps_from_json(const nlohmann::json& arr) {
  std::vector<ScriptStep> out;
  for (const auto& j : arr) {
    ScriptStep s;
    s.line = j.value("line", std::size_t{0});
    if (j.contains("emit")) {
      s.kind = ScriptStep::Kind::Emit;
      s.a = NodeId(j.at("emit").get<std::string>());
      if (j.contains("value")) s.value = j.at("value").get<Payload>();
    } else if (j.contains("deliver")) {
      s.kind = ScriptStep::Kind::Deliver;
      s.a = NodeId(j.at("deliver").at(0).get<std::string>());
      s.b = NodeId(j.at("deliver").at(1).get<std::string>());
    } else if (j.contains("op")) {
      s.kind = ScriptStep::Kind::Op;
      s.op = op_from_json(j.at("op"), s.line);
    } else if (j.contains("crash")) {
      s.kind = ScriptStep::Kind::Crash;
      s.a = NodeId(j.at("crash").get<std::string>());
    } else if (j.contains("recover")) {
      s.kind = ScriptStep::Kind::Recover;
      s.a = NodeId(j.at("recover").get<std::string>());
    } else if (j.contains("repeat")) {
      s.kind = ScriptStep::Kind::Repeat;
      const auto& r = j.at("repeat");
      if (!(r.is_string() && r.get<std::string>() == "forever")) s.times = r.get<std::size_t>();
      s.body = steps_from_json(j.at("body"));
    } else {
      invalid("unrecognised script step " + j.dump(), s.line);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// --- text format -----------------------------------------------------------

struct TextParser {
  std::vector<std::pair<std::size_t, Words>> lines;
  std::size_t pos = 0;

  std::vector<ScriptStep> block(bool nested) {
    std::vector<ScriptStep> steps;
    while (pos < lines.size()) {
      auto [ln, w] = lines[pos++];
      const std::string& k = w[0];
      ScriptStep s;
      s.line = ln;
      if (k == "end") return steps;
      if (k == "emit") {
        s.kind = ScriptStep::Kind::Emit;
        s.a = NodeId(word(w, 1, ln, "source"));
        if (w.size() > 2 && w[2] != "auto") s.value = number<Payload>(w[2], ln, "integer");
        if (w.size() > 3) parse_error("trailing '" + w[3] + "'", ln);
      } else if (k == "deliver") {
        s.kind = ScriptStep::Kind::Deliver;
        s.a = NodeId(word(w, 1, ln, "sender"));
        s.b = NodeId(word(w, 2, ln, "receiver"));
        if (w.size() > 3) parse_error("trailing '" + w[3] + "'", ln);
      } else if (k == "op") {
        s.kind = ScriptStep::Kind::Op;
        s.op = parse_op(w, 1, ln);
      } else if (k == "crash" || k == "recover") {
        s.kind = k == "crash" ? ScriptStep::Kind::Crash : ScriptStep::Kind::Recover;
        s.a = NodeId(word(w, 1, ln, "node"));
      } else if (k == "repeat") {
        s.kind = ScriptStep::Kind::Repeat;
        const std::string& n = word(w, 1, ln, "repeat count");
        if (n != "forever") s.times = number<std::size_t>(n, ln, "repeat count");
        s.body = block(true);
      } else {
        parse_error("unknown script step '" + k + "'", ln);
      }
      steps.push_back(std::move(s));
    }
    parse_error(nested ? "repeat block is missing 'end'" : "script block is missing 'end'",
                lines.empty() ? 0 : lines.back().first);
  }
};

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& name) {
  TextParser p;
  {
    std::istringstream is{std::string(text)};
    std::string raw;
    std::size_t ln = 0;
    while (std::getline(is, raw)) {
      ++ln;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      Words w = split(raw);
      if (!w.empty()) p.lines.emplace_back(ln, std::move(w));
    }
  }

  nlohmann::json j = nlohmann::json::object();
  j["name"] = name;
  auto nodes = nlohmann::json::object();
  auto node_order = nlohmann::json::array();
  auto edges = nlohmann::json::array();
  auto workloads = nlohmann::json::array();
  auto emissions = nlohmann::json::array();
  auto ops = nlohmann::json::array();
  auto faults = nlohmann::json::array();
  auto latencies = nlohmann::json::array();
  std::optional<nlohmann::json> generator;

  while (p.pos < p.lines.size()) {
    auto [ln, w] = p.lines[p.pos++];
    const std::string& k = w[0];
    auto expect_len = [&](std::size_t n) {
      if (w.size() < n) parse_error("'" + k + "' needs " + std::to_string(n - 1) + " argument(s)", ln);
      if (w.size() > n) parse_error("trailing '" + w[n] + "'", ln);
    };
    if (k == "name") {
      expect_len(2);
      j["name"] = w[1];
    } else if (k == "engine") {
      expect_len(2);
      if (!engine_from_string(w[1])) parse_error("unknown engine '" + w[1] + "'", ln);
      j["engine"] = w[1];
    } else if (k == "topology") {
      const std::string& kind = word(w, 1, ln, "topology kind");
      nlohmann::json g{{"kind", kind}, {"line", ln}};
      if (kind == "diamond5") {
        expect_len(2);
      } else if (kind == "fan") {
        expect_len(3);
        g["n"] = number<std::size_t>(w[2], ln, "node count");
      } else if (kind == "layered") {
        expect_len(4);
        g["levels"] = number<std::size_t>(w[2], ln, "level count");
        g["width"] = number<std::size_t>(w[3], ln, "width");
      } else if (kind == "random") {
        if (w.size() != 5 && w.size() != 7) parse_error("usage: topology random <n> <density> <seed> [sources <k>]", ln);
        g["n"] = number<std::size_t>(w[2], ln, "node count");
        g["density"] = real(w[3], ln, "density");
        g["seed"] = number<std::uint64_t>(w[4], ln, "seed");
        if (w.size() == 7) {
          if (w[5] != "sources") parse_error("expected 'sources', got '" + w[5] + "'", ln);
          g["sources"] = number<std::size_t>(w[6], ln, "source count");
        }
      } else {
        parse_error("unknown topology kind '" + kind + "'", ln);
      }
      if (generator) parse_error("topology given twice", ln);
      generator = g;
    } else if (k == "node") {
      const std::string& id = word(w, 1, ln, "node id");
      nlohmann::json spec{{"line", ln}};
      for (std::size_t i = 2; i < w.size();) {
        const std::string& key = w[i++];
        if (key == "init") {
          spec["init"] = number<Payload>(word(w, i++, ln, "initial value"), ln, "integer");
        } else if (key == "fn") {
          spec["fn"] = function_name(parse_function(w, i, ln));
        } else {
          parse_error("unexpected '" + key + "' in node", ln);
        }
      }
      if (nodes.contains(id)) parse_error("node '" + id + "' declared twice", ln);
      nodes[id] = spec;
      node_order.push_back(id);
    } else if (k == "edge") {
      expect_len(3);
      edges.push_back({w[1], w[2]});
    } else if (k == "delay") {
      expect_len(2);
      j["delay"] = number<Tick>(w[1], ln, "ticks");
    } else if (k == "latency") {
      if (w.size() == 2) {
        j["latency"] = number<Tick>(w[1], ln, "ticks");
      } else {
        expect_len(4);
        latencies.push_back({{"from", w[1]}, {"to", w[2]}, {"ticks", number<Tick>(w[3], ln, "ticks")}});
      }
    } else if (k == "scheduler") {
      const std::string& kind = word(w, 1, ln, "scheduler kind");
      if (kind == "random") {
        expect_len(3);
        j["scheduler"] = {{"kind", "random"}, {"seed", number<std::uint64_t>(w[2], ln, "seed")}};
      } else if (kind == "roundrobin" || kind == "scripted") {
        expect_len(2);
        j["scheduler"] = {{"kind", kind}};
      } else {
        parse_error("unknown scheduler '" + kind + "'", ln);
      }
    } else if (k == "max-steps") {
      expect_len(2);
      j["maxSteps"] = number<std::size_t>(w[1], ln, "step count");
    } else if (k == "mode") {
      expect_len(2);
      if (!mode_from_string(w[1])) parse_error("unknown mode '" + w[1] + "'", ln);
      j["mode"] = w[1];
    } else if (k == "workload") {
      nlohmann::json wl{{"source", word(w, 1, ln, "source")}, {"line", ln}};
      for (std::size_t i = 2; i < w.size();) {
        const std::string& key = w[i++];
        const std::string& val = word(w, i++, ln, "value");
        if (key == "rate") {
          wl["rate"] = real(val, ln, "rate");
        } else if (key == "duration") {
          wl["duration"] = real(val, ln, "duration");
        } else if (key == "start") {
          wl["start"] = number<Tick>(val, ln, "tick");
        } else {
          parse_error("unexpected '" + key + "' in workload", ln);
        }
      }
      if (!wl.contains("rate") || !wl.contains("duration")) parse_error("workload needs rate and duration", ln);
      workloads.push_back(wl);
    } else if (k == "emit") {
      expect_len(4);
      emissions.push_back({{"at", number<Tick>(w[1], ln, "tick")},
                           {"source", w[2]},
                           {"value", number<Payload>(w[3], ln, "integer")},
                           {"line", ln}});
    } else if (k == "op") {
      auto op = op_to_json(parse_op(w, 2, ln));
      op["at"] = number<Tick>(word(w, 1, ln, "tick"), ln, "tick");
      op["line"] = ln;
      ops.push_back(op);
    } else if (k == "fault") {
      expect_len(4);
      if (w[2] != "crash" && w[2] != "recover") parse_error("expected crash or recover, got '" + w[2] + "'", ln);
      faults.push_back({{"at", number<Tick>(w[1], ln, "tick")}, {"kind", w[2]}, {"node", w[3]}, {"line", ln}});
    } else if (k == "script") {
      expect_len(1);
      if (j.contains("script")) parse_error("script given twice", ln);
      j["script"] = steps_to_json(p.block(false));
    } else {
      parse_error("unknown directive '" + k + "'", ln);
    }
  }

  if (generator) {
    if (!edges.empty()) invalid("explicit edges cannot be combined with a generated topology", (*generator)["line"].get<std::size_t>());
    j["topology"] = *generator;
  } else {
    j["topology"] = {{"kind", "inline"}, {"nodes", node_order}, {"edges", edges}};
  }
  j["nodes"] = nodes;
  j["workloads"] = workloads;
  j["emissions"] = emissions;
  j["ops"] = ops;
  j["faults"] = faults;
  j["latencies"] = latencies;
  return parse_scenario_json(j, j["name"].get<std::string>());
}

Scenario parse_scenario_json(const nlohmann::json& j, const std::string& name) {
  Scenario s;
  std::string field = "scenario";
  std::size_t line = 0;
  try {
    s.name = j.value("name", name);
    field = "engine";
    if (j.contains("engine")) {
      auto e = engine_from_string(j.at("engine").get<std::string>());
      if (!e) invalid("engine: unknown engine " + j.at("engine").dump());
      s.engine = *e;
    }

    field = "topology";
    if (!j.contains("topology")) invalid("topology: missing");
    const auto& t = j.at("topology");
    line = t.value("line", std::size_t{0});
    const std::string kind = t.value("kind", std::string("inline"));
    GeneratedGraph g;
    try {
      if (kind == "diamond5") {
        g = diamond5();
      } else if (kind == "fan") {
        g = fan(t.at("n").get<std::size_t>());
      } else if (kind == "layered") {
        g = layered(t.at("levels").get<std::size_t>(), t.at("width").get<std::size_t>());
      } else if (kind == "random") {
        g = random_dag(t.at("n").get<std::size_t>(), t.at("density").get<double>(), t.at("seed").get<std::uint64_t>(),
                       t.value("sources", std::size_t{0}));
      } else if (kind == "inline") {
        std::vector<NodeId> nodes;
        std::vector<Edge> edges;
        for (const auto& n : t.value("nodes", nlohmann::json::array())) nodes.emplace_back(n.get<std::string>());
        for (const auto& e : t.value("edges", nlohmann::json::array())) {
          edges.push_back({NodeId(e.at(0).get<std::string>()), NodeId(e.at(1).get<std::string>())});
          // Edges may introduce nodes implicitly.
          for (const auto& id : {edges.back().from, edges.back().to}) {
            if (std::find(nodes.begin(), nodes.end(), id) == nodes.end()) nodes.push_back(id);
          }
        }
        g.topology = Topology::validate(nodes, edges);
      } else {
        invalid("topology: unknown kind '" + kind + "'", line);
      }
    } catch (const GraphError& e) {
      invalid(std::string("topology: ") + e.what(), line);
    }
    if (g.topology.nodes().empty()) invalid("topology: graph has no nodes", line);
    s.topology = g.topology;
    s.specs = g.specs;

    field = "nodes";
    const auto node_specs = j.value("nodes", nlohmann::json::object());
    for (const auto& [id, spec] : node_specs.items()) {
      line = spec.value("line", std::size_t{0});
      NodeId n(id);
      if (!s.topology.contains(n)) invalid("nodes: unknown node '" + id + "'", line);
      NodeSpec& ns = s.specs[n];
      if (spec.contains("init")) ns.init = spec.at("init").get<Payload>();
      if (spec.contains("fn")) ns.fn = function_from_string(spec.at("fn").get<std::string>(), line);
    }
    line = 0;

    field = "delay";
    s.delay = j.value("delay", Tick{0});
    field = "latency";
    s.latency = j.value("latency", Tick{0});
    field = "latencies";
    for (const auto& l : j.value("latencies", nlohmann::json::array())) {
      s.latencies[{NodeId(l.at("from").get<std::string>()), NodeId(l.at("to").get<std::string>())}] =
          l.at("ticks").get<Tick>();
    }
    field = "scheduler";
    if (j.contains("scheduler")) {
      const auto& sc = j.at("scheduler");
      const std::string k = sc.at("kind").get<std::string>();
      if (k == "random") {
        s.scheduler = SchedulerMode::SeededRandom;
        s.seed = sc.value("seed", std::uint64_t{0});
      } else if (k == "roundrobin") {
        s.scheduler = SchedulerMode::RoundRobin;
      } else if (k == "scripted") {
        s.scheduler = SchedulerMode::Scripted;
      } else {
        invalid("scheduler: unknown kind '" + k + "'");
      }
    }
    field = "maxSteps";
    s.max_steps = j.value("maxSteps", s.max_steps);
    field = "mode";
    if (j.contains("mode")) {
      auto m = mode_from_string(j.at("mode").get<std::string>());
      if (!m) invalid("mode: unknown mode " + j.at("mode").dump());
      s.mode = *m;
    }

    field = "workloads";
    for (const auto& w : j.value("workloads", nlohmann::json::array())) {
      line = w.value("line", std::size_t{0});
      Workload wl;
      std::string src = w.at("source").get<std::string>();
      if (src != "*") wl.source = NodeId(src);
      wl.rate = w.at("rate").get<double>();
      wl.duration = w.at("duration").get<double>();
      wl.start = w.value("start", Tick{0});
      s.workloads.push_back(wl);
    }
    field = "emissions";
    for (const auto& e : j.value("emissions", nlohmann::json::array())) {
      line = e.value("line", std::size_t{0});
      s.emissions.push_back({e.at("at").get<Tick>(), NodeId(e.at("source").get<std::string>()), e.at("value").get<Payload>()});
    }
    field = "ops";
    for (const auto& o : j.value("ops", nlohmann::json::array())) {
      line = o.value("line", std::size_t{0});
      s.ops.push_back({o.at("at").get<Tick>(), op_from_json(o, line)});
    }
    field = "faults";
    for (const auto& f : j.value("faults", nlohmann::json::array())) {
      line = f.value("line", std::size_t{0});
      const std::string k = f.at("kind").get<std::string>();
      if (k != "crash" && k != "recover") invalid("faults: kind must be crash or recover", line);
      s.faults.push_back({f.at("at").get<Tick>(), NodeId(f.at("node").get<std::string>()), k == "crash"});
    }
    line = 0;
    field = "script";
    if (j.contains("script")) s.script = steps_from_json(j.at("script"));
  } catch (const nlohmann::json::exception& e) {
    invalid(field + ": " + e.what(), line);
  }
  validate(s);
  return s;
}

namespace {

void validate_steps(const Scenario& s, const std::vector<ScriptStep>& steps) {
  const Topology& t = s.topology;
  for (const auto& st : steps) {
    switch (st.kind) {
      case ScriptStep::Kind::Emit:
        if (!t.contains(st.a)) invalid("script: unknown node '" + st.a.str() + "'", st.line);
        break;
      case ScriptStep::Kind::Deliver:
        if (!t.contains(st.a) && st.a.str() != "$client" && st.a.str() != "$admitter") {
          invalid("script: unknown node '" + st.a.str() + "'", st.line);
        }
        break;
      case ScriptStep::Kind::Op:
        if (s.engine != EngineKind::QpropD) {
          invalid(std::string("script: topology operations need engine qprop_d, not ") + to_string(s.engine), st.line);
        }
        break;
      case ScriptStep::Kind::Crash:
      case ScriptStep::Kind::Recover:
        if (!t.contains(st.a)) invalid("script: unknown node '" + st.a.str() + "'", st.line);
        break;
      case ScriptStep::Kind::Repeat:
        validate_steps(s, st.body);
        break;
    }
  }
}

}  // namespace

void validate(const Scenario& s) {
  const Topology& t = s.topology;
  auto is_source = [&](const NodeId& n) { return t.contains(n) && t.predecessors(n).empty(); };
  for (const auto& w : s.workloads) {
    if (!w.source.empty() && !is_source(w.source)) invalid("workloads: '" + w.source.str() + "' is not a source");
    if (w.rate <= 0 || w.duration < 0) invalid("workloads: rate must be positive and duration non-negative");
  }
  for (const auto& e : s.emissions) {
    if (!is_source(e.source)) invalid("emissions: '" + e.source.str() + "' is not a source");
  }
  if (!s.ops.empty() && s.engine != EngineKind::QpropD) {
    invalid(std::string("ops: topology operations need engine qprop_d, not ") + to_string(s.engine));
  }
  for (const auto& f : s.faults) {
    if (!t.contains(f.node)) invalid("faults: unknown node '" + f.node.str() + "'");
  }
  for (const auto& [key, ticks] : s.latencies) {
    if (!t.contains(key.first) || !t.contains(key.second)) {
      invalid("latencies: unknown channel " + key.first.str() + " -> " + key.second.str());
    }
  }
  if (s.script) validate_steps(s, *s.script);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(ScenarioError::Kind::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  std::string name = path.stem().string();
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw ScenarioError(ScenarioError::Kind::ParseError, path.string() + ": " + e.what());
    }
    return parse_scenario_json(j, name);
  }
  return parse_scenario(buf.str(), name);
}

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["engine"] = to_string(s.engine);
  auto nodes = nlohmann::json::array();
  for (const auto& n : s.topology.nodes()) nodes.push_back(n.str());
  auto edges = nlohmann::json::array();
  for (const auto& e : s.topology.edges()) edges.push_back({e.from.str(), e.to.str()});
  j["topology"] = {{"kind", "inline"}, {"nodes", nodes}, {"edges", edges}};
  auto specs = nlohmann::json::object();
  for (const auto& [n, spec] : s.specs) specs[n.str()] = {{"init", spec.init}, {"fn", function_name(spec.fn)}};
  j["nodes"] = specs;
  j["delay"] = s.delay;
  j["latency"] = s.latency;
  auto lat = nlohmann::json::array();
  for (const auto& [key, ticks] : s.latencies) lat.push_back({{"from", key.first.str()}, {"to", key.second.str()}, {"ticks", ticks}});
  j["latencies"] = lat;
  switch (s.scheduler) {
    case SchedulerMode::SeededRandom:
      j["scheduler"] = {{"kind", "random"}, {"seed", s.seed}};
      break;
    case SchedulerMode::RoundRobin:
      j["scheduler"] = {{"kind", "roundrobin"}};
      break;
    case SchedulerMode::Scripted:
      j["scheduler"] = {{"kind", "scripted"}};
      break;
  }
  j["maxSteps"] = s.max_steps;
  j["mode"] = to_string(s.mode);
  auto wls = nlohmann::json::array();
  for (const auto& w : s.workloads) {
    wls.push_back({{"source", w.source.empty() ? "*" : w.source.str()}, {"rate", w.rate}, {"duration", w.duration}, {"start", w.start}});
  }
  j["workloads"] = wls;
  auto ems = nlohmann::json::array();
  for (const auto& e : s.emissions) ems.push_back({{"at", e.at}, {"source", e.source.str()}, {"value", e.value}});
  j["emissions"] = ems;
  auto ops = nlohmann::json::array();
  for (const auto& o : s.ops) {
    auto op = op_to_json(o.op);
    op["at"] = o.at;
    ops.push_back(op);
  }
  j["ops"] = ops;
  auto faults = nlohmann::json::array();
  for (const auto& f : s.faults) faults.push_back({{"at", f.at}, {"kind", f.crash ? "crash" : "recover"}, {"node", f.node.str()}});
  j["faults"] = faults;
  if (s.script) j["script"] = steps_to_json(*s.script);
  return j;
}

}  // namespace qprop
