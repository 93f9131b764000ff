#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qprop/metrics.hpp"
#include "qprop/oracles.hpp"
#include "qprop/scenario.hpp"
#include "qprop/simulation.hpp"

namespace qprop {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_steps;
  std::optional<RunMode> mode;
  TraceDetail detail = TraceDetail::Full;
  std::size_t stall_window = 10;
  // Return right after the script instead of draining what it left in flight.
  bool stop_after_script = false;
};

class StepBudgetExceeded : public std::runtime_error {
 public:
  StepBudgetExceeded(std::size_t steps, StallReport report, std::shared_ptr<Simulation> sim)
      : std::runtime_error("step budget of " + std::to_string(steps) + " exhausted"),
        steps_(steps),
        report_(std::move(report)),
        sim_(std::move(sim)) {}

  std::size_t steps() const noexcept { return steps_; }
  const StallReport& stall() const noexcept { return report_; }
  // The simulation as it stood when the budget ran out.
  const Simulation& simulation() const { return *sim_; }

 private:
  std::size_t steps_;
  StallReport report_;
  std::shared_ptr<Simulation> sim_;
};

struct RunResult {
  std::shared_ptr<Simulation> sim;
  Topology initial;
  MetricsReport metrics;
  bool quiescent = false;
  std::size_t steps = 0;
  // First tick after bootstrap; agenda ticks are relative to it.
  Tick start = 0;

  const Trace& trace() const { return sim->trace(); }
};

std::unique_ptr<Simulation> make_simulation(const Scenario& s, std::optional<std::uint64_t> seed = std::nullopt,
                                            TraceDetail detail = TraceDetail::Full);

// Bootstrap, then the script (if any), then the timed agenda until the mode's
// stopping rule. Throws StepBudgetExceeded, SimulationError and engine errors.
RunResult run_scenario(const Scenario& s, const RunOptions& opts = {});

struct VerifyReport {
  std::vector<Verdict> verdicts;
  std::vector<std::string> skipped;

  bool ok() const;
};

nlohmann::json to_json(const VerifyReport& r);

VerifyReport verify_run(const RunResult& run);
// Trace-only checks: glitch freedom and monotonicity. The graph comes from the
// trace's init event when `topology` is empty.
VerifyReport verify_trace(const Trace& trace, const Topology& topology = {});

// --- benchmark matrices -------------------------------------------------------

struct BenchMatrix {
  Scenario base;
  std::vector<EngineKind> engines;
  std::vector<double> loads;
  std::vector<std::uint64_t> seeds{1};
  double duration = 1.0;  // simulated seconds per cell
  std::vector<std::size_t> dynamic_ops{0};
  std::optional<RunMode> mode;
};

// Relative scenario paths resolve against base_dir.
BenchMatrix parse_bench_matrix(std::string_view text, const std::filesystem::path& base_dir);
BenchMatrix load_bench_matrix(const std::filesystem::path& path);

struct BenchCell {
  MetricsReport metrics;
  std::size_t dynamic_ops = 0;
  bool quiescent = true;
};

// The base scenario with a single workload alternating over all sources at
// `load` requests per second, seeded random scheduling, and `ops` topology
// operations spread over the run: alternately adding a node between a source
// and one of its sinks and removing it again.
Scenario bench_scenario(const Scenario& base, EngineKind engine, double load, std::uint64_t seed, double duration,
                        std::size_t ops);

BenchCell run_bench_cell(const Scenario& cell_scenario, double load, std::size_t ops, std::optional<RunMode> mode);

std::vector<BenchCell> run_bench(const BenchMatrix& m, const std::function<void(const BenchCell&)>& on_cell = {});

struct BenchSummaryRow {
  std::string engine;
  double load = 0;
  std::size_t dynamic_ops = 0;
  std::size_t runs = 0;
  // Mean and 95% confidence half-width (Student t) over seeds.
  double throughput = 0, throughput_ci = 0;
  double latency_mean = 0, latency_mean_ci = 0;
  double processing_mean = 0, processing_mean_ci = 0;
  double stored_values_max = 0, stored_values_max_ci = 0;
  double concurrent_interactions = 0, concurrent_interactions_ci = 0;
};

std::vector<BenchSummaryRow> summarize(const std::vector<BenchCell>& cells);
void write_summary_csv(std::ostream& os, const std::vector<BenchSummaryRow>& rows);
nlohmann::json to_json(const BenchSummaryRow& r);

}  // namespace qprop
