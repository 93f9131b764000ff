#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qprop/graph.hpp"
#include "qprop/simulation.hpp"
#include "qprop/trace.hpp"

namespace qprop {

// One benchmark cell. Ticks are simulated milliseconds.
struct MetricsReport {
  std::string engine;
  std::uint64_t seed = 0;
  double load = 0;  // requests per simulated second
  double throughput = 0;
  double latency_mean = 0;
  double latency_p95 = 0;
  double processing_mean = 0;
  double processing_p95 = 0;
  std::size_t stored_values_max = 0;
  std::int64_t concurrent_interactions = 0;

  // Not part of the CSV schema.
  std::size_t requests = 0;
  std::size_t completed = 0;
  std::size_t sink_updates = 0;
  double stored_values_mean = 0;
};

// A request is one SourceEmit (s, c). It completes at the first tick by which
// every sink that s reached when it emitted, and that still exists at the end,
// has updated with a clock for s of at least c.
MetricsReport compute_metrics(const Trace& trace, const Topology& initial, const Topology& final_topology,
                              const StoredStats& stored);

// Nearest-rank percentile; 0 for an empty sample.
double percentile(std::vector<double> sample, double p);
double mean(const std::vector<double>& sample);

extern const std::vector<std::string> kMetricsColumns;

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const MetricsReport& r);
void write_csv(std::ostream& os, const std::vector<MetricsReport>& rows);

nlohmann::json to_json(const MetricsReport& r);
MetricsReport metrics_from_json(const nlohmann::json& j);

}  // namespace qprop
