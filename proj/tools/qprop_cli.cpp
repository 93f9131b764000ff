// qprop: run, verify, benchmark and trace propagation scenarios.
//
// Exit codes: 0 ok, 1 verification failure, 2 scenario error, 3 step budget exceeded.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "qprop/runner.hpp"

namespace fs = std::filesystem;
using namespace qprop;

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kScenarioError = 2;
constexpr int kBudgetExceeded = 3;

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_steps;
  std::string mode;
  std::string out;
  std::string format;  // defaults: csv for bench, json otherwise
  bool no_drain = false;

  RunOptions options() const {
    RunOptions o;
    o.seed = seed;
    o.max_steps = max_steps;
    if (!mode.empty()) o.mode = mode_from_string(mode);
    o.stop_after_script = no_drain;
    return o;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Scheduler seed (overrides the scenario)");
  cmd->add_option("--max-steps", c.max_steps, "Delivery budget before giving up");
  cmd->add_option("--mode", c.mode, "Stopping rule")->check(CLI::IsMember({"sinkCount", "sourceCount"}));
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_flag("--no-drain", c.no_drain, "Stop when the script ends instead of running to quiescence");
}

std::ofstream open_out(const fs::path& dir, const std::string& file) {
  fs::create_directories(dir);
  std::ofstream os(dir / file);
  if (!os) throw ScenarioError(ScenarioError::Kind::IoError, "cannot write " + (dir / file).string());
  return os;
}

void print_metrics(std::ostream& os, const MetricsReport& m, const std::string& format) {
  if (format == "csv") {
    write_csv(os, {m});
  } else {
    os << to_json(m).dump(2) << '\n';
  }
}

int report_budget(const StepBudgetExceeded& e) {
  std::cerr << "qprop: " << e.what() << '\n';
  std::cout << nlohmann::json{{"error", "StepBudgetExceeded"}, {"steps", e.steps()}, {"stall", to_json(e.stall())}}.dump(2)
            << '\n';
  return kBudgetExceeded;
}

int cmd_run(const std::string& file, const Common& c) {
  auto scenario = load_scenario(file);
  auto run = run_scenario(scenario, c.options());
  print_metrics(std::cout, run.metrics, c.format);
  if (!run.quiescent && c.options().mode.value_or(scenario.mode) == RunMode::SinkCount) {
    std::cerr << "qprop: run stopped before quiescence\n";
  }
  if (!c.out.empty()) {
    auto trace = open_out(c.out, scenario.name + ".trace.jsonl");
    run.trace().write_jsonl(trace);
    auto metrics = open_out(c.out, scenario.name + (c.format == "csv" ? ".metrics.csv" : ".metrics.json"));
    print_metrics(metrics, run.metrics, c.format);
  }
  return kOk;
}

int cmd_verify(const std::string& file, const Common& c) {
  VerifyReport report;
  if (fs::path(file).extension() == ".jsonl") {
    std::ifstream in(file);
    if (!in) throw ScenarioError(ScenarioError::Kind::IoError, "cannot open " + file);
    report = verify_trace(Trace::read_jsonl(in));
  } else {
    auto run = run_scenario(load_scenario(file), c.options());
    report = verify_run(run);
  }
  std::cout << to_json(report).dump(2) << '\n';
  if (!c.out.empty()) open_out(c.out, "verdicts.json") << to_json(report).dump(2) << '\n';
  return report.ok() ? kOk : kVerifyFailed;
}

int cmd_bench(const std::string& file, const Common& c) {
  auto matrix = load_bench_matrix(file);
  if (!c.mode.empty()) matrix.mode = mode_from_string(c.mode);
  if (c.seed) matrix.seeds = {*c.seed};
  auto cells = run_bench(matrix, [](const BenchCell& cell) {
    std::cerr << cell.metrics.engine << " load=" << cell.metrics.load << " ops=" << cell.dynamic_ops
              << " seed=" << cell.metrics.seed << " throughput=" << cell.metrics.throughput << '\n';
  });
  auto summary = summarize(cells);
  fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  if (c.format == "csv") {
    auto os = open_out(dir, "cells.csv");
    write_csv_header(os);
    for (const auto& cell : cells) write_csv_row(os, cell.metrics);
    auto ss = open_out(dir, "summary.csv");
    write_summary_csv(ss, summary);
    if (matrix.dynamic_ops.size() > 1) {
      // The cell schema has no column for operation counts; split per count instead.
      for (auto ops : matrix.dynamic_ops) {
        auto per = open_out(dir, "cells_ops" + std::to_string(ops) + ".csv");
        write_csv_header(per);
        for (const auto& cell : cells) {
          if (cell.dynamic_ops == ops) write_csv_row(per, cell.metrics);
        }
      }
    }
  } else {
    auto j = nlohmann::json{{"cells", nlohmann::json::array()}, {"summary", nlohmann::json::array()}};
    for (const auto& cell : cells) {
      auto row = to_json(cell.metrics);
      row["dynamic_ops"] = cell.dynamic_ops;
      j["cells"].push_back(row);
    }
    for (const auto& r : summary) j["summary"].push_back(to_json(r));
    open_out(dir, "bench.json") << j.dump(2) << '\n';
  }
  write_summary_csv(std::cout, summary);
  return kOk;
}

int cmd_trace(const std::string& file, const Common& c) {
  auto scenario = load_scenario(file);
  auto run = run_scenario(scenario, c.options());
  if (c.out.empty()) {
    run.trace().write_jsonl(std::cout);
  } else {
    auto os = open_out(c.out, scenario.name + ".trace.jsonl");
    run.trace().write_jsonl(os);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Glitch-free propagation simulator"};
  app.require_subcommand(1);

  Common common;
  std::string file;

  auto* run = app.add_subcommand("run", "Run a scenario and print its metrics");
  run->add_option("file", file, "Scenario file")->required();
  add_common(run, common);

  auto* verify = app.add_subcommand("verify", "Check a scenario run or a recorded trace (.jsonl)");
  verify->add_option("file", file, "Scenario or trace file")->required();
  add_common(verify, common);

  auto* bench = app.add_subcommand("bench", "Run a benchmark matrix");
  bench->add_option("file", file, "Matrix file")->required();
  add_common(bench, common);

  auto* trace = app.add_subcommand("trace", "Run a scenario and dump its trace as JSON lines");
  trace->add_option("file", file, "Scenario file")->required();
  add_common(trace, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kScenarioError;
  }
  if (common.format.empty()) common.format = bench->parsed() ? "csv" : "json";

  try {
    if (run->parsed()) return cmd_run(file, common);
    if (verify->parsed()) return cmd_verify(file, common);
    if (bench->parsed()) return cmd_bench(file, common);
    if (trace->parsed()) return cmd_trace(file, common);
  } catch (const StepBudgetExceeded& e) {
    return report_budget(e);
  } catch (const ScenarioError& e) {
    std::cerr << "qprop: " << e.what() << '\n';
    return kScenarioError;
  } catch (const TraceError& e) {
    std::cerr << "qprop: " << e.what() << '\n';
    return kScenarioError;
  } catch (const OracleError& e) {
    std::cerr << "qprop: " << e.what() << '\n';
    return kVerifyFailed;
  } catch (const std::exception& e) {
    std::cerr << "qprop: " << e.what() << '\n';
    return kScenarioError;
  }
  return kOk;
}
