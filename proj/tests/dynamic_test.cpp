#include <gtest/gtest.h>

#include "qprop/dynamic.hpp"
#include "qprop/generators.hpp"
#include "qprop/oracles.hpp"
#include "qprop/simulation.hpp"
#include "support.hpp"

using namespace qprop;
using namespace qprop::literals;
using qprop::support::pv;

namespace {

// E in the pre-addition graph A->C, B->C, B->D, C->E, D->E.
NodeState sink_before_add() {
  auto st = make_node("E"_id, {"C"_id, "D"_id}, {}, 0, UpdateFunction::sum());
  st.initialized = st.explored = true;
  st.routes = {{"A"_id, {"C"_id}}, {"B"_id, {"C"_id, "D"_id}}};
  st.inputs["C"_id] = {pv("C", 3, {{"A", 0}, {"B", 0}}, 0)};
  st.inputs["D"_id] = {pv("D", 2, {{"B", 0}}, 0)};
  return st;
}

void drain(Simulation& sim) {
  for (int i = 0; i < 100000; ++i) {
    if (sim.step() == StepOutcome::Quiescent) return;
  }
  FAIL() << "did not quiesce";
}

QpropSimulation dynamic_sim(const Topology& t, std::map<NodeId, NodeSpec> specs = {}) {
  QpropSimulation sim(SimulationConfig{t, std::move(specs), 0, SchedulerPolicy::round_robin(), {}, TraceDetail::Full},
                      true);
  sim.bootstrap();
  return sim;
}

}  // namespace

TEST(Brittleness, NewRouteMakesPredecessorBrittle) {
  auto e = sink_before_add();
  auto fx = apply_add_sources(e, "D"_id, {"A"_id});
  EXPECT_EQ(e.routes["A"_id], (std::set<NodeId>{"C"_id, "D"_id}));
  ASSERT_TRUE(is_brittle(e, "D"_id));
  EXPECT_TRUE(e.brittle["D"_id].empty());
  ASSERT_EQ(fx.notes.size(), 1u);
  EXPECT_EQ(fx.notes[0].kind, EventKind::Brittle);

  // Announcing a route that is already known changes nothing.
  auto again = apply_add_sources(e, "D"_id, {"A"_id});
  EXPECT_TRUE(again.notes.empty());
}

TEST(Brittleness, SiblingsShareASourceAndExcludeSelf) {
  auto e = sink_before_add();
  apply_add_sources(e, "D"_id, {"A"_id});
  EXPECT_TRUE(has_brittle_sibling(e, "C"_id));
  EXPECT_FALSE(has_brittle_sibling(e, "D"_id));
  EXPECT_TRUE(is_brittle_sibling(e, "D"_id, "C"_id));
  EXPECT_FALSE(is_brittle_sibling(e, "D"_id, "D"_id));
  EXPECT_FALSE(is_brittle_sibling(e, "C"_id, "D"_id));
}

TEST(Brittleness, SynchronisedWithinOneClock) {
  auto e = sink_before_add();
  apply_add_sources(e, "D"_id, {"A"_id});
  EXPECT_FALSE(synchronised(e, "D"_id));  // nothing quarantined yet

  e.inputs["C"_id] = {pv("C", 3, {{"A", 1}, {"B", 0}}, 1)};
  e.brittle["D"_id] = {pv("D", 2, {{"A", 2}, {"B", 0}}, 1)};
  EXPECT_TRUE(synchronised(e, "D"_id));

  e.brittle["D"_id] = {pv("D", 2, {{"A", 3}, {"B", 0}}, 1)};
  EXPECT_FALSE(synchronised(e, "D"_id));

  e.inputs["C"_id].clear();
  EXPECT_FALSE(synchronised(e, "D"_id));
}

TEST(Brittleness, MoveToIMergesInOrder) {
  auto e = sink_before_add();
  apply_add_sources(e, "D"_id, {"A"_id});
  e.brittle["D"_id] = {pv("D", 2, {{"A", 2}, {"B", 0}}, 1), pv("D", 4, {{"A", 3}, {"B", 0}}, 2)};
  auto fx = move_to_i(e, "D"_id);
  EXPECT_FALSE(is_brittle(e, "D"_id));
  const auto& seq = e.inputs["D"_id];
  ASSERT_EQ(seq.size(), 3u);
  for (std::size_t i = 1; i < seq.size(); ++i) EXPECT_LT(seq[i - 1].fclock, seq[i].fclock);
  ASSERT_EQ(fx.notes.size(), 1u);
  EXPECT_EQ(fx.notes[0].kind, EventKind::MoveToI);
  EXPECT_THROW(move_to_i(e, "D"_id), EngineError);

  auto fresh = sink_before_add();
  fresh.inputs.erase("D"_id);
  fresh.brittle["D"_id] = {pv("D", 2, {{"A", 2}}, 1)};
  move_to_i(fresh, "D"_id);
  EXPECT_EQ(fresh.inputs["D"_id].size(), 1u);
  EXPECT_TRUE(fresh.brittle.empty());
}

TEST(PrePropagation, BrittleValueIsQuarantined) {
  auto e = sink_before_add();
  apply_add_sources(e, "D"_id, {"A"_id});
  // D's first post-addition value runs ahead of C by two clocks.
  auto fx = pre_propagate(e, pv("D", 2, {{"A", 2}, {"B", 0}}, 1));
  EXPECT_FALSE(fx.updated());
  EXPECT_EQ(e.brittle["D"_id].size(), 1u);

  // C catches up to A1: E updates with it, then D is within one clock.
  fx = pre_propagate(e, pv("C", 3, {{"A", 1}, {"B", 0}}, 1));
  EXPECT_TRUE(fx.updated());
  EXPECT_FALSE(is_brittle(e, "D"_id));
}

TEST(PrePropagation, SynchronisedFirstValueMovesAndUpdates) {
  auto e = sink_before_add();
  e.inputs["C"_id] = {pv("C", 3, {{"A", 1}, {"B", 0}}, 1)};
  apply_add_sources(e, "D"_id, {"A"_id});
  auto fx = pre_propagate(e, pv("D", 2, {{"A", 1}, {"B", 0}}, 1));
  EXPECT_FALSE(is_brittle(e, "D"_id));
  EXPECT_TRUE(fx.updated());
  EXPECT_EQ(e.last_prop.sclocks, (SourceClockMap{{"A"_id, 1}, {"B"_id, 0}}));
}

TEST(PrePropagation, SiblingWaitsForEmptyBrittleStore) {
  auto e = sink_before_add();
  apply_add_sources(e, "D"_id, {"A"_id});
  auto fx = pre_propagate(e, pv("C", 3, {{"A", 1}, {"B", 0}}, 1));
  EXPECT_FALSE(fx.updated());
  EXPECT_EQ(e.inputs["C"_id].size(), 2u);
}

TEST(TopologyHandlers, NewSuccAndRemSucc) {
  auto a = make_node("A"_id, {}, {"C"_id}, 5, UpdateFunction::sum());
  init_exploration(a);
  auto r = handle_new_succ(a, "D"_id);
  EXPECT_EQ(r.sources, (std::set<NodeId>{"A"_id}));
  EXPECT_EQ(r.last_prop, a.last_prop);
  EXPECT_TRUE(a.ds.count("D"_id));

  auto ds = a.ds;
  auto rr = handle_rem_succ(a, "Z"_id);
  EXPECT_EQ(a.ds, ds);
  EXPECT_EQ(rr.sources, (std::set<NodeId>{"A"_id}));
}

TEST(TopologyHandlers, RemSourcesEmptiesSharedInput) {
  auto e = make_node("E"_id, {"C"_id, "D"_id}, {}, 0, UpdateFunction::sum());
  e.routes = {{"A"_id, {"C"_id, "D"_id}}, {"B"_id, {"C"_id, "D"_id}}};
  e.inputs["D"_id] = {pv("D", 1, {{"A", 1}, {"B", 0}}, 1)};
  auto out = apply_rem_sources(e, "D"_id, {"A"_id});
  EXPECT_EQ(e.routes["A"_id], (std::set<NodeId>{"C"_id}));
  EXPECT_TRUE(e.inputs["D"_id].empty());
  EXPECT_TRUE(out.removed.empty());

  auto d = make_node("D"_id, {"B"_id}, {"E"_id}, 0, UpdateFunction::sum());
  d.routes = {{"A"_id, {"A"_id}}, {"B"_id, {"B"_id}}};
  auto out_d = apply_rem_sources(d, "A"_id, {"A"_id});
  EXPECT_FALSE(d.routes.count("A"_id));
  EXPECT_EQ(out_d.removed, (std::set<NodeId>{"A"_id}));
}

TEST(TopologyHandlers, RemoveUnknownDependency) {
  auto e = sink_before_add();
  EXPECT_THROW(begin_remove_dependency(e, "Z"_id), EngineError);
  e.brittle["D"_id];
  begin_remove_dependency(e, "D"_id);
  EXPECT_FALSE(e.dp.count("D"_id));
  EXPECT_FALSE(e.brittle.count("D"_id));
}

TEST(DynamicRuntime, AddDependencyUpdatesTables) {
  auto t = Topology::validate({"A"_id, "B"_id, "C"_id, "D"_id, "E"_id},
                              {{"A"_id, "C"_id}, {"B"_id, "C"_id}, {"B"_id, "D"_id}, {"C"_id, "E"_id}, {"D"_id, "E"_id}});
  auto sim = dynamic_sim(t);
  sim.script_op(support::op_of("add-dependency D A"));
  drain(sim);
  EXPECT_EQ(sim.node("E"_id).routes.at("A"_id), (std::set<NodeId>{"C"_id, "D"_id}));
  EXPECT_EQ(sim.node("D"_id).routes.at("A"_id), (std::set<NodeId>{"A"_id}));
  EXPECT_EQ(sim.routing_tables(), support::expected_tables(sim.topology()));
}

TEST(DynamicRuntime, AddFreshSinkUnderOneNode) {
  auto g = diamond5();
  auto sim = dynamic_sim(g.topology, g.specs);
  sim.script_op(support::op_of("add-node X preds C"));
  drain(sim);
  EXPECT_EQ(sim.node("X"_id).routes, (RoutingTable{{"A"_id, {"C"_id}}, {"B"_id, {"C"_id}}}));
  EXPECT_EQ(sim.routing_tables(), support::expected_tables(sim.topology()));
}

TEST(DynamicRuntime, AddNodeBetweenTwoNodes) {
  auto g = diamond5();
  auto sim = dynamic_sim(g.topology, g.specs);
  sim.script_op(support::op_of("add-node X preds A succs E"));
  drain(sim);
  EXPECT_TRUE(sim.topology().has_edge("A"_id, "X"_id));
  EXPECT_TRUE(sim.topology().has_edge("X"_id, "E"_id));
  EXPECT_EQ(sim.routing_tables(), support::expected_tables(sim.topology()));
  sim.script_emit("A"_id, 9);
  drain(sim);
  EXPECT_EQ(sim.last_props().at("E"_id).sclocks.at("A"_id), 1u);

  sim.script_op(support::op_of("remove-node X"));
  drain(sim);
  EXPECT_FALSE(sim.topology().contains("X"_id));
  EXPECT_EQ(sim.routing_tables(), support::expected_tables(sim.topology()));
}

TEST(DynamicRuntime, RemovingDisjointPredecessorDropsSourceDownstream) {
  auto t = Topology::validate({"A"_id, "B"_id, "C"_id, "D"_id}, {{"A"_id, "C"_id}, {"B"_id, "C"_id}, {"C"_id, "D"_id}});
  auto sim = dynamic_sim(t);
  sim.script_op(support::op_of("remove-dependency C A"));
  drain(sim);
  EXPECT_FALSE(sim.node("D"_id).routes.count("A"_id));
  EXPECT_EQ(sim.routing_tables(), support::expected_tables(sim.topology()));
}

TEST(DynamicRuntime, NestedAwaitsCompleteInnermostFirst) {
  auto t = Topology::validate({"A"_id, "B"_id, "C"_id, "D"_id, "X"_id},
                              {{"A"_id, "B"_id}, {"B"_id, "C"_id}, {"C"_id, "D"_id}});
  auto sim = dynamic_sim(t);
  sim.trace().clear();
  sim.script_op(support::op_of("add-dependency B X"));
  drain(sim);
  std::vector<std::string> acks;
  for (const auto& e : sim.trace().events()) {
    if (e.kind == EventKind::Deliver && e.payload["msg"]["type"] == "ack") {
      acks.push_back(e.payload["from"].get<std::string>() + ">" + e.node.str());
    }
  }
  // D answers C before C answers B, which answers the initiator's self-request last.
  ASSERT_GE(acks.size(), 2u);
  auto dc = std::find(acks.begin(), acks.end(), "D>C");
  auto cb = std::find(acks.begin(), acks.end(), "C>B");
  ASSERT_NE(dc, acks.end());
  ASSERT_NE(cb, acks.end());
  EXPECT_LT(dc, cb);
  EXPECT_EQ(sim.routing_tables(), support::expected_tables(sim.topology()));
}

TEST(DynamicRuntime, DependencyOpsRequireDynamicEngine) {
  auto g = diamond5();
  QpropSimulation sim(SimulationConfig{g.topology, g.specs, 0, SchedulerPolicy::round_robin(), {}, TraceDetail::Full},
                      false);
  sim.bootstrap();
  EXPECT_ANY_THROW(sim.script_op(support::op_of("remove-dependency D A")));
}
