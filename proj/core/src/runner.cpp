#include "qprop/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "qprop/baselines.hpp"

namespace qprop {

std::unique_ptr<Simulation> make_simulation(const Scenario& s, std::optional<std::uint64_t> seed, TraceDetail detail) {
  SimulationConfig cfg;
  cfg.topology = s.topology;
  cfg.specs = s.specs;
  cfg.delay = s.delay;
  cfg.detail = detail;
  switch (s.scheduler) {
    case SchedulerMode::SeededRandom:
      cfg.policy = SchedulerPolicy::seeded_random(seed.value_or(s.seed));
      break;
    case SchedulerMode::RoundRobin:
      cfg.policy = SchedulerPolicy::round_robin();
      break;
    case SchedulerMode::Scripted:
      cfg.policy = SchedulerPolicy::scripted();
      break;
  }
  cfg.policy.set_default_latency(s.latency);
  for (const auto& [key, ticks] : s.latencies) cfg.policy.set_latency(key.first, key.second, ticks);
  switch (s.engine) {
    case EngineKind::Qprop:
      return std::make_unique<QpropSimulation>(std::move(cfg), false);
    case EngineKind::QpropD:
      return std::make_unique<QpropSimulation>(std::move(cfg), true);
    case EngineKind::Central:
      return std::make_unique<CentralSimulation>(std::move(cfg));
    case EngineKind::Quarp:
      return std::make_unique<QuarpSimulation>(std::move(cfg));
  }
  throw SimulationError("unknown engine");
}

namespace {

class Driver {
 public:
  Driver(std::shared_ptr<Simulation> sim, std::size_t budget, std::size_t window)
      : sim_(std::move(sim)), budget_(budget), window_(window) {}

  void count() {
    if (++steps_ > budget_) {
      throw StepBudgetExceeded(budget_, detect_stall(sim_->trace(), window_), sim_);
    }
  }

  void run_script(const std::vector<ScriptStep>& steps) {
    for (const auto& st : steps) {
      switch (st.kind) {
        case ScriptStep::Kind::Emit:
          sim_->script_emit(st.a, st.value);
          break;
        case ScriptStep::Kind::Deliver:
          sim_->script_deliver(st.a, st.b);
          break;
        case ScriptStep::Kind::Op:
          sim_->script_op(st.op);
          break;
        case ScriptStep::Kind::Crash:
          sim_->script_crash(st.a);
          break;
        case ScriptStep::Kind::Recover:
          sim_->script_recover(st.a);
          break;
        case ScriptStep::Kind::Repeat:
          for (std::size_t i = 0; !st.times || i < *st.times; ++i) run_script(st.body);
          continue;
      }
      count();
    }
  }

  std::size_t steps() const noexcept { return steps_; }

 private:
  std::shared_ptr<Simulation> sim_;
  std::size_t budget_;
  std::size_t window_;
  std::size_t steps_ = 0;
};

}  // namespace

RunResult run_scenario(const Scenario& s, const RunOptions& opts) {
  RunResult out;
  out.initial = s.topology;
  out.sim = std::shared_ptr<Simulation>(make_simulation(s, opts.seed, opts.detail));
  Simulation& sim = *out.sim;
  sim.bootstrap();
  const Tick t0 = sim.now();
  out.start = t0;

  std::size_t scheduled = 0;
  auto sources = s.topology.sources();
  for (const auto& w : s.workloads) {
    auto n = static_cast<std::size_t>(std::llround(w.rate * w.duration));
    for (std::size_t i = 0; i < n; ++i) {
      Tick at = t0 + w.start + static_cast<Tick>(std::llround(static_cast<double>(i) * 1000.0 / w.rate));
      NodeId src = w.source.empty() ? sources[i % sources.size()] : w.source;
      sim.schedule_emit(src, static_cast<Payload>(i + 1), at);
      ++scheduled;
    }
  }
  for (const auto& e : s.emissions) {
    sim.schedule_emit(e.source, e.value, t0 + e.at);
    ++scheduled;
  }
  for (const auto& o : s.ops) sim.schedule_op(o.op, t0 + o.at);
  for (const auto& f : s.faults) sim.schedule_fault(f.node, f.crash, t0 + f.at);

  Driver driver(out.sim, opts.max_steps.value_or(s.max_steps), opts.stall_window);
  if (s.script) driver.run_script(*s.script);
  const bool drain = !(s.script && opts.stop_after_script);

  const RunMode mode = opts.mode.value_or(s.mode);
  std::size_t emitted = 0;
  std::size_t scanned = sim.trace().size();
  while (drain) {
    if (mode == RunMode::SourceCount && scheduled > 0) {
      const auto& events = sim.trace().events();
      for (; scanned < events.size(); ++scanned) {
        if (events[scanned].kind == EventKind::SourceEmit) ++emitted;
      }
      if (emitted >= scheduled && sim.pending_emissions() == 0) break;
    }
    StepOutcome r = sim.step();
    if (r == StepOutcome::Quiescent) {
      out.quiescent = true;
      break;
    }
    if (r == StepOutcome::Delivered) driver.count();
  }
  out.steps = driver.steps();
  out.metrics = compute_metrics(sim.trace(), out.initial, sim.topology(), sim.stored_stats());
  out.metrics.engine = to_string(s.engine);
  out.metrics.seed = opts.seed.value_or(s.seed);
  return out;
}

// --- verification --------------------------------------------------------------

bool VerifyReport::ok() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.holds; });
}

nlohmann::json to_json(const VerifyReport& r) {
  auto verdicts = nlohmann::json::array();
  for (const auto& v : r.verdicts) verdicts.push_back(to_json(v));
  return {{"ok", r.ok()}, {"verdicts", verdicts}, {"skipped", r.skipped}};
}

VerifyReport verify_trace(const Trace& trace, const Topology& topology) {
  VerifyReport r;
  if (!trace.full()) {
    r.skipped.push_back("glitchFreedom: trace records no update arguments");
    r.skipped.push_back("monotonicity: trace records no update arguments");
    return r;
  }
  r.verdicts.push_back(check_glitch_freedom(trace, topology));
  r.verdicts.push_back(check_monotonicity(trace));
  return r;
}

VerifyReport verify_run(const RunResult& run) {
  VerifyReport r = verify_trace(run.trace(), run.initial);
  const Simulation& sim = *run.sim;
  if (run.quiescent) {
    r.verdicts.push_back(check_consistency(sim.last_props(), sim.source_clocks(), sim.topology()));
  } else {
    r.skipped.push_back("consistency: run did not quiesce");
  }
  auto tables = sim.routing_tables();
  if (!tables.empty()) {
    r.verdicts.push_back(check_exploration(sim.topology(), tables));
  } else {
    r.skipped.push_back("exploration: engine keeps no routing tables");
  }
  return r;
}

// --- benchmark matrices ---------------------------------------------------------

BenchMatrix parse_bench_matrix(std::string_view text, const std::filesystem::path& base_dir) {
  BenchMatrix m;
  bool have_scenario = false;
  std::istringstream is{std::string(text)};
  std::string raw;
  std::size_t ln = 0;
  auto fail = [&](const std::string& what) { throw ScenarioError(ScenarioError::Kind::ParseError, what, ln); };
  while (std::getline(is, raw)) {
    ++ln;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> w;
    for (std::string x; ls >> x;) w.push_back(x);
    if (w.empty()) continue;
    const std::string& k = w[0];
    if (w.size() < 2) fail("'" + k + "' needs a value");
    try {
      if (k == "scenario") {
        std::filesystem::path p = w[1];
        if (p.is_relative()) p = base_dir / p;
        m.base = load_scenario(p);
        have_scenario = true;
      } else if (k == "engines") {
        m.engines.clear();
        for (std::size_t i = 1; i < w.size(); ++i) {
          auto e = engine_from_string(w[i]);
          if (!e) fail("unknown engine '" + w[i] + "'");
          m.engines.push_back(*e);
        }
      } else if (k == "loads") {
        m.loads.clear();
        for (std::size_t i = 1; i < w.size(); ++i) m.loads.push_back(std::stod(w[i]));
      } else if (k == "seeds") {
        m.seeds.clear();
        for (std::size_t i = 1; i < w.size(); ++i) m.seeds.push_back(std::stoull(w[i]));
      } else if (k == "duration") {
        m.duration = std::stod(w[1]);
      } else if (k == "dynamic-ops") {
        m.dynamic_ops.clear();
        for (std::size_t i = 1; i < w.size(); ++i) m.dynamic_ops.push_back(std::stoul(w[i]));
      } else if (k == "mode") {
        auto md = mode_from_string(w[1]);
        if (!md) fail("unknown mode '" + w[1] + "'");
        m.mode = md;
      } else {
        fail("unknown directive '" + k + "'");
      }
    } catch (const std::logic_error& e) {
      fail("bad number in '" + k + "': " + e.what());
    }
  }
  if (!have_scenario) throw ScenarioError(ScenarioError::Kind::ValidationError, "matrix names no scenario");
  if (m.engines.empty()) m.engines.push_back(m.base.engine);
  if (m.loads.empty()) throw ScenarioError(ScenarioError::Kind::ValidationError, "matrix names no loads");
  return m;
}

BenchMatrix load_bench_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(ScenarioError::Kind::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_bench_matrix(buf.str(), path.parent_path());
}

Scenario bench_scenario(const Scenario& base, EngineKind engine, double load, std::uint64_t seed, double duration,
                        std::size_t ops) {
  Scenario s = base;
  s.engine = engine;
  s.scheduler = SchedulerMode::SeededRandom;
  s.seed = seed;
  s.script.reset();
  s.emissions.clear();
  s.workloads = {Workload{NodeId(), load, duration, 0}};
  s.ops.clear();
  if (ops > 0) {
    Reachability reach(s.topology);
    auto sources = s.topology.sources();
    auto span = static_cast<Tick>(duration * 1000.0);
    for (std::size_t i = 0; i < ops; ++i) {
      Tick at = span * (i + 1) / (ops + 1);
      std::size_t pair = i / 2;
      NodeId x("X" + std::to_string(pair));
      TopologyOp op;
      op.node = x;
      if (i % 2 == 0) {
        const NodeId& src = sources[pair % sources.size()];
        op.kind = TopologyOpKind::AddNode;
        op.preds = {src};
        for (const auto& d : reach.descendants(src)) {
          if (s.topology.successors(d).empty()) {
            op.succs = {d};
            break;
          }
        }
      } else {
        op.kind = TopologyOpKind::RemoveNode;
      }
      s.ops.push_back({at, op});
    }
  }
  validate(s);
  return s;
}

BenchCell run_bench_cell(const Scenario& cell, double load, std::size_t ops, std::optional<RunMode> mode) {
  RunOptions opts;
  opts.detail = TraceDetail::Lean;
  opts.mode = mode;
  auto run = run_scenario(cell, opts);
  BenchCell c;
  c.metrics = run.metrics;
  c.metrics.load = load;
  c.dynamic_ops = ops;
  c.quiescent = run.quiescent;
  return c;
}

std::vector<BenchCell> run_bench(const BenchMatrix& m, const std::function<void(const BenchCell&)>& on_cell) {
  std::vector<BenchCell> cells;
  for (auto ops : m.dynamic_ops) {
    for (auto engine : m.engines) {
      // Topology operations exist only in the dynamic engine.
      if (ops > 0 && engine != EngineKind::QpropD) continue;
      for (double load : m.loads) {
        for (auto seed : m.seeds) {
          auto cell = run_bench_cell(bench_scenario(m.base, engine, load, seed, m.duration, ops), load, ops, m.mode);
          if (on_cell) on_cell(cell);
          cells.push_back(std::move(cell));
        }
      }
    }
  }
  return cells;
}

namespace {

// Two-sided 95% Student t quantiles for 1..30 degrees of freedom.
double t95(std::size_t df) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                 2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                                 2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (df == 0) return 0.0;
  return df <= 30 ? table[df - 1] : 1.96;
}

std::pair<double, double> mean_ci(const std::vector<double>& xs) {
  double m = mean(xs);
  if (xs.size() < 2) return {m, 0.0};
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return {m, t95(xs.size() - 1) * sd / std::sqrt(static_cast<double>(xs.size()))};
}

}  // namespace

std::vector<BenchSummaryRow> summarize(const std::vector<BenchCell>& cells) {
  std::map<std::tuple<std::size_t, std::string, double>, std::vector<const BenchCell*>> groups;
  std::vector<std::tuple<std::size_t, std::string, double>> order;
  for (const auto& c : cells) {
    auto key = std::make_tuple(c.dynamic_ops, c.metrics.engine, c.metrics.load);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&c);
  }
  std::vector<BenchSummaryRow> out;
  for (const auto& key : order) {
    const auto& g = groups[key];
    BenchSummaryRow r;
    r.dynamic_ops = std::get<0>(key);
    r.engine = std::get<1>(key);
    r.load = std::get<2>(key);
    r.runs = g.size();
    auto column = [&](auto field) {
      std::vector<double> xs;
      for (const auto* c : g) xs.push_back(static_cast<double>(field(c->metrics)));
      return mean_ci(xs);
    };
    std::tie(r.throughput, r.throughput_ci) = column([](const MetricsReport& m) { return m.throughput; });
    std::tie(r.latency_mean, r.latency_mean_ci) = column([](const MetricsReport& m) { return m.latency_mean; });
    std::tie(r.processing_mean, r.processing_mean_ci) = column([](const MetricsReport& m) { return m.processing_mean; });
    std::tie(r.stored_values_max, r.stored_values_max_ci) =
        column([](const MetricsReport& m) { return m.stored_values_max; });
    std::tie(r.concurrent_interactions, r.concurrent_interactions_ci) =
        column([](const MetricsReport& m) { return m.concurrent_interactions; });
    out.push_back(r);
  }
  return out;
}

void write_summary_csv(std::ostream& os, const std::vector<BenchSummaryRow>& rows) {
  os << "engine,load,dynamic_ops,runs,throughput,throughput_ci95,latency_mean,latency_mean_ci95,processing_mean,"
        "processing_mean_ci95,stored_values_max,stored_values_max_ci95,concurrent_interactions,"
        "concurrent_interactions_ci95\n";
  os << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.engine << ',' << r.load << ',' << r.dynamic_ops << ',' << r.runs << ',' << r.throughput << ','
       << r.throughput_ci << ',' << r.latency_mean << ',' << r.latency_mean_ci << ',' << r.processing_mean << ','
       << r.processing_mean_ci << ',' << r.stored_values_max << ',' << r.stored_values_max_ci << ','
       << r.concurrent_interactions << ',' << r.concurrent_interactions_ci << '\n';
  }
}

nlohmann::json to_json(const BenchSummaryRow& r) {
  return {{"engine", r.engine},
          {"load", r.load},
          {"dynamic_ops", r.dynamic_ops},
          {"runs", r.runs},
          {"throughput", r.throughput},
          {"throughput_ci95", r.throughput_ci},
          {"latency_mean", r.latency_mean},
          {"latency_mean_ci95", r.latency_mean_ci},
          {"processing_mean", r.processing_mean},
          {"processing_mean_ci95", r.processing_mean_ci},
          {"stored_values_max", r.stored_values_max},
          {"stored_values_max_ci95", r.stored_values_max_ci},
          {"concurrent_interactions", r.concurrent_interactions},
          {"concurrent_interactions_ci95", r.concurrent_interactions_ci}};
}

}  // namespace qprop
