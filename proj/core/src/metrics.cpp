#include "qprop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "qprop/oracles.hpp"

namespace qprop {

double percentile(std::vector<double> sample, double p) {
  if (sample.empty()) return 0.0;
  std::sort(sample.begin(), sample.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sample.size())));
  rank = std::clamp<std::size_t>(rank, 1, sample.size());
  return sample[rank - 1];
}

double mean(const std::vector<double>& sample) {
  if (sample.empty()) return 0.0;
  double total = 0;
  for (double x : sample) total += x;
  return total / static_cast<double>(sample.size());
}

namespace {

struct Request {
  NodeId source;
  LogicalTime clock;
  Tick emitted;
  Tick requested;
  std::vector<NodeId> sinks;
};

// Per (sink, source): running maximum of the source clock over the sink's
// updates, with the tick at which it was reached.
using Progress = std::vector<std::pair<LogicalTime, Tick>>;

}  // namespace

MetricsReport compute_metrics(const Trace& trace, const Topology& initial, const Topology& final_topology,
                              const StoredStats& stored) {
  MetricsReport r;
  TopologyTimeline graph(initial);
  std::map<NodeId, std::vector<NodeId>> reach_cache;
  std::vector<Request> requests;
  std::map<std::pair<NodeId, NodeId>, Progress> progress;

  for (const auto& e : trace.events()) {
    switch (e.kind) {
      case EventKind::TopologyOp:
        graph.apply(e);
        reach_cache.clear();
        break;
      case EventKind::SourceEmit: {
        auto v = event_value(e);
        auto it = reach_cache.find(e.node);
        if (it == reach_cache.end()) {
          std::vector<NodeId> sinks;
          for (const auto& k : graph.sinks()) {
            if (k != e.node && graph.reaches_or_is(e.node, k)) sinks.push_back(k);
          }
          it = reach_cache.emplace(e.node, std::move(sinks)).first;
        }
        requests.push_back(Request{e.node, clock_of(v, e.node).value_or(v.fclock), e.tick,
                                   e.payload.value("requested", e.tick), it->second});
        break;
      }
      case EventKind::Update: {
        auto v = event_value(e);
        for (const auto& [s, c] : v.sclocks) {
          auto& p = progress[{e.node, s}];
          if (p.empty() || c > p.back().first) p.emplace_back(c, e.tick);
        }
        if (final_topology.contains(e.node) && final_topology.successors(e.node).empty()) ++r.sink_updates;
        break;
      }
      default:
        break;
    }
  }

  std::vector<double> latency;
  std::vector<double> processing;
  std::optional<Tick> first_arrival;
  Tick last_completion = 0;
  for (const auto& q : requests) {
    first_arrival = std::min(first_arrival.value_or(q.requested), q.requested);
    Tick done = q.emitted;
    bool complete = true;
    for (const auto& k : q.sinks) {
      if (!final_topology.contains(k)) continue;
      auto it = progress.find({k, q.source});
      if (it == progress.end()) {
        complete = false;
        break;
      }
      auto hit = std::lower_bound(it->second.begin(), it->second.end(), q.clock,
                                  [](const auto& entry, LogicalTime c) { return entry.first < c; });
      if (hit == it->second.end()) {
        complete = false;
        break;
      }
      done = std::max(done, hit->second);
    }
    if (!complete) continue;
    ++r.completed;
    last_completion = std::max(last_completion, done);
    latency.push_back(static_cast<double>(done - q.emitted));
    processing.push_back(static_cast<double>(done - q.requested));
  }

  r.requests = requests.size();
  if (r.completed > 0 && first_arrival) {
    double span = static_cast<double>(std::max<Tick>(1, last_completion - *first_arrival));
    r.throughput = static_cast<double>(r.completed) / span * 1000.0;
  }
  r.latency_mean = mean(latency);
  r.latency_p95 = percentile(latency, 95);
  r.processing_mean = mean(processing);
  r.processing_p95 = percentile(processing, 95);
  r.stored_values_max = stored.overall_max();
  if (!stored.sum.empty()) {
    double total = 0;
    for (const auto& [n, s] : stored.sum) total += stored.mean(n);
    r.stored_values_mean = total / static_cast<double>(stored.sum.size());
  }
  r.concurrent_interactions = count_concurrent_interactions(trace, initial);
  return r;
}

const std::vector<std::string> kMetricsColumns{"engine",          "seed",           "load",
                                               "throughput",      "latency_mean",   "latency_p95",
                                               "processing_mean", "processing_p95", "stored_values_max",
                                               "concurrent_interactions"};

namespace {

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

}  // namespace

void write_csv_header(std::ostream& os) {
  for (std::size_t i = 0; i < kMetricsColumns.size(); ++i) os << (i ? "," : "") << kMetricsColumns[i];
  os << '\n';
}

void write_csv_row(std::ostream& os, const MetricsReport& r) {
  os << r.engine << ',' << r.seed << ',' << num(r.load) << ',' << num(r.throughput) << ',' << num(r.latency_mean)
     << ',' << num(r.latency_p95) << ',' << num(r.processing_mean) << ',' << num(r.processing_p95) << ','
     << r.stored_values_max << ',' << r.concurrent_interactions << '\n';
}

void write_csv(std::ostream& os, const std::vector<MetricsReport>& rows) {
  write_csv_header(os);
  for (const auto& r : rows) write_csv_row(os, r);
}

nlohmann::json to_json(const MetricsReport& r) {
  return {{"engine", r.engine},
          {"seed", r.seed},
          {"load", r.load},
          {"throughput", r.throughput},
          {"latency_mean", r.latency_mean},
          {"latency_p95", r.latency_p95},
          {"processing_mean", r.processing_mean},
          {"processing_p95", r.processing_p95},
          {"stored_values_max", r.stored_values_max},
          {"concurrent_interactions", r.concurrent_interactions},
          {"requests", r.requests},
          {"completed", r.completed},
          {"sink_updates", r.sink_updates},
          {"stored_values_mean", r.stored_values_mean}};
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.engine = j.at("engine").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.load = j.at("load").get<double>();
  r.throughput = j.at("throughput").get<double>();
  r.latency_mean = j.at("latency_mean").get<double>();
  r.latency_p95 = j.at("latency_p95").get<double>();
  r.processing_mean = j.at("processing_mean").get<double>();
  r.processing_p95 = j.at("processing_p95").get<double>();
  r.stored_values_max = j.at("stored_values_max").get<std::size_t>();
  r.concurrent_interactions = j.at("concurrent_interactions").get<std::int64_t>();
  r.requests = j.value("requests", std::size_t{0});
  r.completed = j.value("completed", std::size_t{0});
  r.sink_updates = j.value("sink_updates", std::size_t{0});
  r.stored_values_mean = j.value("stored_values_mean", 0.0);
  return r;
}

}  // namespace qprop
