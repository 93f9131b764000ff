#include <gtest/gtest.h>

#include "qprop/explore.hpp"
#include "qprop/runner.hpp"
#include "support.hpp"

using namespace qprop;
using namespace qprop::literals;

// The full sweeps live in the acceptance binary; these are smaller slices of
// the same properties so a failing seed shows up with a gtest message.

TEST(Properties, ExplorationMatchesClosureOnRandomGraphs) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto g = random_dag(2 + seed % 11, 0.3, seed);
    QpropSimulation sim(SimulationConfig{g.topology, g.specs, 0, SchedulerPolicy::seeded_random(seed), {}, TraceDetail::Lean},
                        false);
    sim.bootstrap();
    ASSERT_EQ(sim.routing_tables(), support::expected_tables(g.topology)) << "seed " << seed;
  }
}

TEST(Properties, RandomScenariosAreGlitchFreeMonotonicAndConsistent) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    auto run = run_scenario(support::random_scenario(seed));
    ASSERT_TRUE(run.quiescent) << "seed " << seed;
    auto report = verify_run(run);
    for (const auto& v : report.verdicts) EXPECT_TRUE(v.holds) << v.property << " seed " << seed << ": " << v.detail;
  }
}

TEST(Properties, DynamicEngineMatchesStaticWithoutOps) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto s = support::random_scenario(seed);
    auto a = run_scenario(s);
    s.engine = EngineKind::QpropD;
    auto b = run_scenario(s);
    EXPECT_EQ(a.sim->last_props(), b.sim->last_props()) << "seed " << seed;
  }
}

TEST(Properties, DynamicOpsKeepInvariants) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto base = support::bundled("diamond5_bench.scenario");
    auto s = bench_scenario(base, EngineKind::QpropD, 60, seed, 1, 6);
    auto run = run_scenario(s);
    ASSERT_TRUE(run.quiescent);
    auto report = verify_run(run);
    for (const auto& v : report.verdicts) EXPECT_TRUE(v.holds) << v.property << " seed " << seed << ": " << v.detail;
  }
}

TEST(Explorer, DiamondWithOneEmissionEach) {
  auto g = diamond5();
  QpropSimulation sim(SimulationConfig{g.topology, g.specs, 0, SchedulerPolicy::scripted(), {}, TraceDetail::Full},
                      false);
  sim.bootstrap();
  auto report = explore_interleavings(sim, {{"A"_id, 1}, {"B"_id, 1}});
  EXPECT_FALSE(report.truncated);
  EXPECT_GT(report.states, 10u);
  EXPECT_GE(report.terminals, 1u);
  EXPECT_TRUE(report.holds()) << report.glitch.detail << report.monotonic.detail << report.consistent.detail;
}

TEST(Explorer, StateLimitTruncates) {
  auto g = diamond5();
  QpropSimulation sim(SimulationConfig{g.topology, g.specs, 0, SchedulerPolicy::scripted(), {}, TraceDetail::Full},
                      false);
  sim.bootstrap();
  auto report = explore_interleavings(sim, {{"A"_id, 2}, {"B"_id, 2}}, 50);
  EXPECT_TRUE(report.truncated);
  EXPECT_LE(report.states, 51u);
}
