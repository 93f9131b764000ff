// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qprop/explore.hpp"
#include "qprop/runner.hpp"
#include "support.hpp"

using namespace qprop;
using namespace qprop::literals;
using qprop::support::bundled;
using qprop::support::events;
using qprop::support::pv;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed expectations without stopping at the first one.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  Outcome done(const std::string& summary) const {
    if (failures_.empty()) return {true, summary};
    std::ostringstream os;
    for (std::size_t i = 0; i < failures_.size() && i < 5; ++i) os << (i ? "; " : "") << failures_[i];
    if (failures_.size() > 5) os << "; +" << failures_.size() - 5 << " more";
    return {false, os.str()};
  }

 private:
  std::vector<std::string> failures_;
};

RunOptions script_only() {
  RunOptions o;
  o.stop_after_script = true;
  return o;
}

std::vector<PropagationValue> updates(const Trace& t, const std::string& node = {}) {
  std::vector<PropagationValue> out;
  for (const auto* e : events(t, EventKind::Update, node)) out.push_back(event_value(*e));
  return out;
}

// --- 1 ------------------------------------------------------------------------

Outcome golden_trace() {
  Check c;
  auto run = run_scenario(bundled("two_source_diamond.scenario"));
  const auto& t = run.trace();

  std::vector<std::pair<std::string, PropagationValue>> expected{
      {"C", pv("C", 10, {{"A", 1}, {"B", 0}}, 1)}, {"D", pv("D", 5, {{"A", 0}, {"B", 1}}, 1)},
      {"D", pv("D", 7, {{"A", 1}, {"B", 1}}, 2)},  {"C", pv("C", 7, {{"A", 1}, {"B", 1}}, 2)},
      {"E", pv("E", 14, {{"A", 1}, {"B", 1}}, 1)},
  };
  auto all = events(t, EventKind::Update);
  c.expect(all.size() == expected.size(), "expected 5 updates, got " + std::to_string(all.size()));
  for (std::size_t i = 0; i < std::min(all.size(), expected.size()); ++i) {
    auto v = event_value(*all[i]);
    c.expect(all[i]->node.str() == expected[i].first && v == expected[i].second,
             "update " + std::to_string(i) + " is " + all[i]->node.str() + " " + to_string(v));
  }

  // C's first update is the handler of the second scripted step (deliver A C).
  auto delivers = events(t, EventKind::Deliver);
  const TraceEvent* first_ac = nullptr;
  for (const auto* d : delivers) {
    if (d->node.str() == "C" && d->payload.value("from", "") == "A" && d->payload["msg"]["type"] == "change") {
      first_ac = d;
      break;
    }
  }
  c.expect(first_ac && !all.empty() && all[0]->seq > first_ac->seq, "C's first update is not the A->C delivery");
  c.expect(updates(t, "E").size() == 1, "E must update exactly once");

  struct P {
    std::string node, pred;
    LogicalTime below;
  };
  std::vector<P> prunes{{"C", "A", 1}, {"C", "B", 0}, {"D", "A", 0}, {"D", "B", 1}, {"D", "A", 1},
                        {"D", "B", 1}, {"C", "A", 1}, {"C", "B", 1}, {"E", "C", 2}, {"E", "D", 2}};
  auto got = events(t, EventKind::Prune);
  c.expect(got.size() == prunes.size(), "expected 10 prune events, got " + std::to_string(got.size()));
  for (std::size_t i = 0; i < std::min(got.size(), prunes.size()); ++i) {
    const auto& p = got[i]->payload;
    c.expect(got[i]->node.str() == prunes[i].node && p["pred"] == prunes[i].pred &&
                 p["below"].get<LogicalTime>() == prunes[i].below,
             "prune " + std::to_string(i) + " differs: " + got[i]->node.str() + " " + p.dump());
  }
  // The first narrated prune drops the initial value (A,5,{[A,0]},0) from C's I.A.
  if (!got.empty()) c.expect(got[0]->payload["removed"] == nlohmann::json::array({0}), "C must drop A's fClock-0 value");

  auto e = run.sim->last_props().at("E"_id);
  c.expect(e.value == 14 && e.sclocks == SourceClockMap{{"A"_id, 1}, {"B"_id, 1}}, "E ends as " + to_string(e));
  return c.done("5 updates, 10 prunes, E = 14 with {[A,1],[B,1]}");
}

// --- 2 ------------------------------------------------------------------------

Outcome exploration_tables() {
  Check c;
  std::size_t total_nodes = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const std::size_t n = 1 + seed % 12;
    const double density = 0.15 + 0.1 * static_cast<double>(seed % 5);
    auto g = random_dag(n, density, seed, 1 + seed % std::max<std::size_t>(1, n / 2));
    total_nodes += n;
    QpropSimulation sim(
        SimulationConfig{g.topology, g.specs, 0, SchedulerPolicy::seeded_random(seed), {}, TraceDetail::Lean}, false);
    sim.bootstrap();
    auto tables = sim.routing_tables();
    c.expect(tables == support::expected_tables(g.topology), "seed " + std::to_string(seed) + ": S tables differ");
    c.expect(check_exploration(g.topology, tables).holds, "seed " + std::to_string(seed) + ": exploration oracle");
  }
  return c.done("1000 graphs, " + std::to_string(total_nodes) + " nodes");
}

// --- 3 and 4 ------------------------------------------------------------------

struct SweepResult {
  std::size_t runs = 0, quiesced = 0, updates = 0;
  std::size_t glitches = 0, monotonic_failures = 0, consistency_failures = 0;
  std::size_t explored_states = 0, explorations = 0, truncated = 0, exhaustive_consistency_failures = 0;
  std::size_t exhaustive_glitches = 0, exhaustive_monotonic_failures = 0;
  std::vector<std::string> notes;
};

const SweepResult& sweep() {
  static const SweepResult result = [] {
    SweepResult r;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      auto run = run_scenario(support::random_scenario(seed));
      ++r.runs;
      r.updates += events(run.trace(), EventKind::Update).size();
      if (!check_glitch_freedom(run.trace(), run.initial).holds) {
        ++r.glitches;
        r.notes.push_back("glitch in random scenario " + std::to_string(seed));
      }
      if (!run.quiescent) continue;
      ++r.quiesced;
      if (!check_monotonicity(run.trace()).holds) {
        ++r.monotonic_failures;
        r.notes.push_back("monotonicity in random scenario " + std::to_string(seed));
      }
      if (!check_consistency(run.sim->last_props(), run.sim->source_clocks(), run.sim->topology()).holds) {
        ++r.consistency_failures;
        r.notes.push_back("consistency in random scenario " + std::to_string(seed));
      }
    }
    for (const auto& v : support::diamond_variants()) {
      for (int budget : {1, 2}) {
        QpropSimulation sim(SimulationConfig{v.topology, {}, 0, SchedulerPolicy::scripted(), {}, TraceDetail::Full}, false);
        sim.bootstrap();
        std::map<NodeId, int> emissions;
        for (const auto& s : v.topology.sources()) emissions[s] = budget;
        auto rep = explore_interleavings(sim, emissions);
        ++r.explorations;
        r.explored_states += rep.states;
        if (rep.truncated) {
          ++r.truncated;
          r.notes.push_back(v.name + " x" + std::to_string(budget) + " truncated");
        }
        if (!rep.glitch.holds) {
          ++r.exhaustive_glitches;
          r.notes.push_back(v.name + " x" + std::to_string(budget) + ": " + rep.glitch.detail);
        }
        if (!rep.monotonic.holds) {
          ++r.exhaustive_monotonic_failures;
          r.notes.push_back(v.name + " x" + std::to_string(budget) + ": " + rep.monotonic.detail);
        }
        if (!rep.consistent.holds) {
          ++r.exhaustive_consistency_failures;
          r.notes.push_back(v.name + " x" + std::to_string(budget) + ": " + rep.consistent.detail);
        }
      }
    }
    return r;
  }();
  return result;
}

Outcome glitch_freedom() {
  Check c;
  const auto& r = sweep();
  c.expect(r.glitches == 0, std::to_string(r.glitches) + " random scenarios glitched");
  c.expect(r.exhaustive_glitches == 0, std::to_string(r.exhaustive_glitches) + " explorations found a glitch");
  c.expect(r.truncated == 0, std::to_string(r.truncated) + " explorations truncated");
  for (const auto& n : r.notes) c.expect(n.find("glitch") == std::string::npos && n.find("truncated") == std::string::npos, n);
  return c.done(std::to_string(r.runs) + " random runs (" + std::to_string(r.updates) + " updates), " +
                std::to_string(r.explorations) + " exhaustive explorations (" + std::to_string(r.explored_states) +
                " states)");
}

Outcome monotonic_and_consistent() {
  Check c;
  const auto& r = sweep();
  c.expect(r.monotonic_failures == 0, std::to_string(r.monotonic_failures) + " runs not monotonic");
  c.expect(r.consistency_failures == 0, std::to_string(r.consistency_failures) + " runs not consistent");
  c.expect(r.exhaustive_monotonic_failures == 0, "exhaustive monotonicity failures");
  c.expect(r.exhaustive_consistency_failures == 0, "exhaustive consistency failures");
  c.expect(r.quiesced == r.runs, std::to_string(r.runs - r.quiesced) + " random runs did not quiesce");
  return c.done(std::to_string(r.quiesced) + " quiesced runs plus every explored terminal state");
}

// --- 5 ------------------------------------------------------------------------

Outcome livelock() {
  Check c;
  std::size_t rounds = 0;
  try {
    run_scenario(bundled("livelock.scenario"));
    c.expect(false, "the alternating schedule terminated");
  } catch (const StepBudgetExceeded& e) {
    const auto& t = e.simulation().trace();
    auto a_emits = events(t, EventKind::SourceEmit, "A").size();
    rounds = a_emits > 0 ? a_emits - 1 : 0;
    c.expect(rounds >= 3, "only " + std::to_string(rounds) + " alternation rounds");
    c.expect(events(t, EventKind::Update, "E").empty(), "E updated during the livelock");
    const auto& suspects = e.stall().suspects;
    c.expect(std::find(suspects.begin(), suspects.end(), "E"_id) != suspects.end(), "stall report does not name E");
  }
  auto stop = run_scenario(bundled("livelock_stop.scenario"));
  c.expect(stop.quiescent, "stop variant did not quiesce");
  c.expect(!events(stop.trace(), EventKind::Update, "E").empty(), "E never updated after the sources stopped");
  c.expect(check_consistency(stop.sim->last_props(), stop.sim->source_clocks(), stop.sim->topology()).holds,
           "stop variant is not consistent");
  return c.done(std::to_string(rounds) + " rounds without an E update; stopping the sources resolves it");
}

// --- 6 ------------------------------------------------------------------------

Outcome topology_contrast() {
  Check c;
  auto quarp = bundled("single_source_quarp.scenario");
  auto qprop = bundled("single_source_qprop.scenario");
  auto schedule = [](const Scenario& s) {
    auto j = scenario_to_json(s);
    j.erase("engine");
    j.erase("name");
    return j;
  };
  c.expect(schedule(quarp) == schedule(qprop), "the two scenarios differ in more than the engine");
  auto q = run_scenario(quarp, script_only());
  auto p = run_scenario(qprop, script_only());
  auto q_pub = events(q.trace(), EventKind::Update, "D").size();
  auto p_upd = events(p.trace(), EventKind::Update, "D").size();
  c.expect(q_pub == 0, "overwrite baseline's join published " + std::to_string(q_pub) + " times");
  c.expect(p_upd >= 1, "QPROP's join never updated");
  return c.done("join publishes " + std::to_string(q_pub) + " times under overwrite buffers, updates " +
                std::to_string(p_upd) + " times under QPROP");
}

// --- 7 ------------------------------------------------------------------------

Outcome dynamic_addition() {
  Check c;
  auto run = run_scenario(bundled("dynamic_add.scenario"));
  const auto& t = run.trace();

  std::vector<const TraceEvent*> seq;
  for (const auto& e : t.events()) {
    if (e.node.str() != "E") continue;
    if (e.kind == EventKind::Brittle || e.kind == EventKind::MoveToI || e.kind == EventKind::Update) seq.push_back(&e);
  }
  std::vector<std::string> kinds;
  for (const auto* e : seq) kinds.push_back(to_string(e->kind));
  const std::vector<std::string> want{"Brittle", "Update", "MoveToI", "Update"};
  std::string got;
  for (const auto& k : kinds) got += k + " ";
  c.expect(kinds == want, "E's event sequence is " + got);

  if (kinds == want) {
    // (a) D becomes brittle for source A when addSources reaches E.
    c.expect(seq[0]->payload["pred"] == "D" && seq[0]->payload["source"] == "A", "wrong brittle entry");
    auto add_done = std::find_if(t.events().begin(), t.events().end(), [](const TraceEvent& e) {
      return e.kind == EventKind::TopologyOp && e.payload.value("op", "") != "init" &&
             e.payload.value("phase", "") == "done";
    });
    c.expect(add_done != t.events().end() && seq[0]->seq < add_done->seq, "brittle entry after the operation finished");

    // (b) The a1-derived value from C is consumed, not lost.
    auto first = update_args(*seq[1]);
    c.expect(first.size() == 2 && first[0].from == "C"_id && clock_of(first[0], "A"_id) == 1u,
             "E's first update does not use C's a1 value");
    // The brittle value arrived before C's a1 value did.
    auto brittle_arrival = std::find_if(t.events().begin(), t.events().end(), [](const TraceEvent& e) {
      return e.kind == EventKind::Deliver && e.node.str() == "E" && e.payload.value("from", "") == "D" &&
             e.payload["msg"]["type"] == "change";
    });
    c.expect(brittle_arrival != t.events().end() && brittle_arrival->seq < seq[1]->seq,
             "D's value did not reach E before C's a1");

    // (c) MoveToI follows the first update at which D is within one clock of C.
    c.expect(seq[2]->payload["pred"] == "D", "MoveToI for the wrong predecessor");
    auto last = update_args(*seq[3]);
    c.expect(last.size() == 2 && last[0].fclock == 2 && last[1].fclock == 1 && clock_of(last[0], "A"_id) == 2u &&
                 clock_of(last[1], "A"_id) == 2u,
             "E's final update does not pair c2 with d1");
  }
  // (d)
  c.expect(check_glitch_freedom(t, run.initial).holds, "glitch oracle fails");
  // (e)
  c.expect(run.sim->routing_tables() == support::expected_tables(run.sim->topology()), "post-op S tables differ");
  c.expect(run.sim->routing_tables().at("E"_id).at("A"_id) == std::set<NodeId>{"C"_id, "D"_id}, "E.S[A] != {C,D}");
  return c.done("Brittle -> Update(c1) -> MoveToI -> Update(c2,d1); tables match the new graph");
}

// --- 8 ------------------------------------------------------------------------

Outcome dynamic_removal() {
  Check c;
  auto run = run_scenario(bundled("dynamic_remove.scenario"));
  const auto& t = run.trace();

  bool emptied = false;
  for (const auto* p : events(t, EventKind::Prune, "E")) {
    if (p->payload.value("reason", "") == "remSources" && p->payload["pred"] == "D" && !p->payload["removed"].empty()) {
      emptied = true;
    }
  }
  c.expect(emptied, "E's I.D was not emptied by remSources");

  for (const auto* u : events(t, EventKind::Update, "E")) {
    auto args = update_args(*u);
    std::optional<LogicalTime> from_c, from_d;
    for (const auto& a : args) {
      if (a.from == "C"_id) from_c = clock_of(a, "A"_id);
      if (a.from == "D"_id) from_d = clock_of(a, "A"_id);
    }
    c.expect(!(from_c == 2u && from_d == 1u), "E paired D's a1 with C's a2");
  }
  auto e_updates = events(t, EventKind::Update, "E");
  c.expect(e_updates.size() == 2, "E should update before the removal and once B emits");
  c.expect(check_glitch_freedom(t, run.initial).holds, "glitch oracle fails");
  c.expect(run.sim->routing_tables() == support::expected_tables(run.sim->topology()), "post-op S tables differ");

  // Losing the last predecessor turns D into a source.
  auto become = run_scenario(bundled("become_source.scenario"));
  const auto& bt = become.trace();
  auto topo = become.sim->topology();
  c.expect(topo.predecessors("D"_id).empty(), "D still has predecessors");
  c.expect(become.sim->routing_tables() == support::expected_tables(topo), "S tables after becoming a source differ");
  bool cascade = false;
  for (const auto* d : events(bt, EventKind::Deliver, "E")) {
    if (d->payload["msg"]["type"] == "addSource" && d->payload["msg"]["source"] == "D") cascade = true;
  }
  c.expect(cascade, "no addSource reached E");
  auto e = become.sim->last_props().at("E"_id);
  // D's source clock continues from the logical clock it had as an inner node.
  const auto d_clock = become.sim->source_clocks().at("D"_id);
  c.expect(clock_of(e, "D"_id) == d_clock && clock_of(e, "A"_id) == 2u && e.value == 42, "E ends as " + to_string(e));
  c.expect(check_consistency(become.sim->last_props(), become.sim->source_clocks(), topo).holds,
           "become-source run is not consistent");
  return c.done("I.D emptied, no a1/a2 pairing, tables hold; D became a source and E tracks it");
}

// --- 9 ------------------------------------------------------------------------

struct Cells {
  std::map<std::pair<std::string, double>, std::vector<BenchCell>> by_engine_load;
};

Cells run_matrix(const std::string& file) {
  Cells out;
  for (auto& cell : run_bench(load_bench_matrix(support::scenario_path(file)))) {
    out.by_engine_load[{cell.metrics.engine, cell.metrics.load}].push_back(cell);
  }
  return out;
}

template <typename Field>
double mean_of(const std::vector<BenchCell>& cells, Field MetricsReport::*field) {
  double total = 0;
  for (const auto& c : cells) total += static_cast<double>(c.metrics.*field);
  return cells.empty() ? 0 : total / static_cast<double>(cells.size());
}

Outcome benchmark_direction() {
  Check c;
  std::ostringstream summary;
  struct Case {
    std::string matrix;
    double bound;
  };
  // Serial pipeline: one request per depth * delay ms.
  for (const auto& [file, bound] : {Case{"diamond5.matrix", 1000.0 / (3 * 5)}, Case{"layered.matrix", 1000.0 / (4 * 5)}}) {
    auto cells = run_matrix(file);
    std::vector<double> loads;
    for (const auto& [key, v] : cells.by_engine_load)
      if (key.first == "central") loads.push_back(key.second);
    std::sort(loads.begin(), loads.end());
    std::size_t saturated = 0;
    for (double load : loads) {
      for (const auto& cell : cells.by_engine_load[{"central", load}]) {
        double thr = cell.metrics.throughput;
        c.expect(cell.metrics.concurrent_interactions == 0, file + ": central has concurrent interactions");
        c.expect(thr <= bound * (1 + 1e-9), file + ": central exceeds its bound at load " + std::to_string(load));
        if (load > bound) {
          c.expect(std::abs(thr - bound) <= bound * 1e-9,
                   file + ": central at load " + std::to_string(load) + " gives " + std::to_string(thr));
        }
      }
      if (load > bound) ++saturated;
    }
    c.expect(saturated >= 2, file + ": fewer than two saturating loads, no plateau to observe");
    double top = loads.empty() ? 0 : loads.back();
    double qprop_top = mean_of(cells.by_engine_load[{"qprop", top}], &MetricsReport::throughput);
    c.expect(qprop_top > bound, file + ": qprop at load " + std::to_string(top) + " gives " + std::to_string(qprop_top));
    summary << file << " bound " << bound << " qprop " << qprop_top << "; ";

    if (file == "layered.matrix") {
      double prev = -1;
      for (double load : loads) {
        double ci = mean_of(cells.by_engine_load[{"qprop", load}], &MetricsReport::concurrent_interactions);
        c.expect(ci >= prev, "layered: concurrent interactions drop at load " + std::to_string(load));
        prev = ci;
      }
      summary << "layered CI at top load " << prev << "; ";
    }
  }

  std::map<std::size_t, std::vector<BenchCell>> by_ops;
  for (auto& cell : run_bench(load_bench_matrix(support::scenario_path("dynamic_ops.matrix")))) {
    by_ops[cell.dynamic_ops].push_back(cell);
  }
  double none = mean_of(by_ops[0], &MetricsReport::throughput);
  double twenty = mean_of(by_ops[20], &MetricsReport::throughput);
  c.expect(twenty < none, "20 ops give " + std::to_string(twenty) + " vs " + std::to_string(none) + " without");
  summary << "ops 0 -> 20: " << none << " -> " << twenty;
  return c.done(summary.str());
}

// --- 10 -----------------------------------------------------------------------

Outcome resilience() {
  Check c;
  auto run = run_scenario(bundled("fleet_crash.scenario"));
  const auto& t = run.trace();
  c.expect(!reaches(run.initial, "policy"_id, "tracker"_id) && !reaches(run.initial, "policy"_id, "gps"_id),
           "crashed node is an ancestor of the vehicle path");
  auto crash = events(t, EventKind::Crash, "policy");
  auto recover = events(t, EventKind::Recover, "policy");
  c.expect(crash.size() == 1 && recover.size() == 1, "expected one crash and one recovery");
  std::size_t during = 0;
  LogicalTime newest_gps = 0;
  if (crash.size() == 1 && recover.size() == 1) {
    for (const auto* u : events(t, EventKind::Update, "dashboard")) {
      if (u->seq > crash[0]->seq && u->seq < recover[0]->seq) {
        ++during;
        newest_gps = std::max(newest_gps, clock_of(event_value(*u), "gps"_id).value_or(0));
      }
    }
  }
  c.expect(during > 0, "dashboard did not update while policy was down");
  c.expect(newest_gps == 3, "dashboard saw gps clock " + std::to_string(newest_gps) + " while policy was down");
  c.expect(run.quiescent, "run did not quiesce");
  c.expect(check_consistency(run.sim->last_props(), run.sim->source_clocks(), run.sim->topology()).holds,
           "not consistent after recovery");
  return c.done(std::to_string(during) + " dashboard updates while policy was down; consistent after recovery");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "golden diamond trace", golden_trace},
      {2, "exploration tables", exploration_tables},
      {3, "glitch freedom", glitch_freedom},
      {4, "monotonicity and consistency", monotonic_and_consistent},
      {5, "livelock reproduction", livelock},
      {6, "overwrite buffers vs retained values", topology_contrast},
      {7, "dynamic dependency addition", dynamic_addition},
      {8, "dynamic dependency removal", dynamic_removal},
      {9, "benchmark direction", benchmark_direction},
      {10, "resilience to a crashed node", resilience},
  };

  int failed = 0;
  for (const auto& cr : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << cr.id << " " << cr.title << " (" << ms << " ms): "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
