#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "qprop/graph.hpp"
#include "qprop/value.hpp"

namespace qprop {

using RequestId = std::uint64_t;

struct ChannelKey {
  NodeId from;
  NodeId to;

  friend auto operator<=>(const ChannelKey&, const ChannelKey&) = default;
  friend bool operator==(const ChannelKey&, const ChannelKey&) = default;
};

class TransportError : public std::runtime_error {
 public:
  enum class Kind { UnknownEndpoint, ReceiverCrashed, AlreadyCrashed, NotCrashed, EmptyChannel, NotAwaiting };

  TransportError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

enum class SchedulerMode { SeededRandom, Scripted, RoundRobin };

// Chooses among deliverable channels and assigns per-channel latency.
// Scripted mode takes its deliveries from explicit calls; when the
// runtime must pick on its own (bootstrap, draining) it behaves like RoundRobin.
class SchedulerPolicy {
 public:
  static SchedulerPolicy seeded_random(std::uint64_t seed) { return SchedulerPolicy(SchedulerMode::SeededRandom, seed); }
  static SchedulerPolicy round_robin() { return SchedulerPolicy(SchedulerMode::RoundRobin, 0); }
  static SchedulerPolicy scripted() { return SchedulerPolicy(SchedulerMode::Scripted, 0); }

  SchedulerMode mode() const noexcept { return mode_; }
  std::uint64_t seed() const noexcept { return seed_; }

  void set_default_latency(Tick t) { default_latency_ = t; }
  void set_latency(const NodeId& from, const NodeId& to, Tick t) { latency_[ChannelKey{from, to}] = t; }
  Tick latency(const NodeId& from, const NodeId& to) const {
    auto it = latency_.find(ChannelKey{from, to});
    return it == latency_.end() ? default_latency_ : it->second;
  }

  // candidates is non-empty and sorted.
  const ChannelKey& pick(const std::vector<ChannelKey>& candidates) {
    if (mode_ == SchedulerMode::SeededRandom) {
      std::uniform_int_distribution<std::size_t> dist(0, candidates.size() - 1);
      return candidates[dist(rng_)];
    }
    auto it = candidates.begin();
    if (last_) {
      it = std::upper_bound(candidates.begin(), candidates.end(), *last_);
      if (it == candidates.end()) it = candidates.begin();
    }
    last_ = *it;
    return *it;
  }

 private:
  SchedulerPolicy(SchedulerMode mode, std::uint64_t seed) : mode_(mode), seed_(seed), rng_(seed) {}

  SchedulerMode mode_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::optional<ChannelKey> last_;
  Tick default_latency_ = 0;
  std::map<ChannelKey, Tick> latency_;
};

// Deterministic discrete-event network: per-channel FIFO, exactly-once delivery,
// integer-tick latency, busy receivers, pause-with-buffering crashes, and a
// request/reply rendezvous. Message-agnostic so baselines reuse it.
template <class Message>
class Network {
 public:
  struct Envelope {
    std::uint64_t id = 0;
    Message message;
    Tick sent_at = 0;
    Tick ready_at = 0;
    std::optional<RequestId> request;
    bool reply = false;
    bool control() const { return request.has_value(); }
  };

  explicit Network(SchedulerPolicy policy) : policy_(std::move(policy)) {}

  SchedulerPolicy& policy() noexcept { return policy_; }
  const SchedulerPolicy& policy() const noexcept { return policy_; }

  Tick now() const noexcept { return now_; }
  void advance_to(Tick t) { now_ = std::max(now_, t); }

  void add_endpoint(const NodeId& n) { endpoints_[n]; }
  bool has_endpoint(const NodeId& n) const { return endpoints_.count(n) != 0; }

  const Envelope& send(const NodeId& from, const NodeId& to, Message m, Tick at) {
    require(from);
    require(to);
    Envelope e;
    e.id = next_id_++;
    e.message = std::move(m);
    e.sent_at = at;
    e.ready_at = at + policy_.latency(from, to);
    auto& q = channels_[ChannelKey{from, to}];
    q.push_back(std::move(e));
    return q.back();
  }

  // Sends a request and marks the sender as awaiting its reply. With
  // fail_fast a crashed receiver is reported instead of buffering the request.
  std::pair<RequestId, const Envelope*> request(const NodeId& from, const NodeId& to, Message m, Tick at,
                                                bool fail_fast = false) {
    require(from);
    require(to);
    if (fail_fast && crashed(to)) {
      throw TransportError(TransportError::Kind::ReceiverCrashed, "request to crashed node '" + to.str() + "'");
    }
    RequestId id = next_request_++;
    Envelope e;
    e.id = next_id_++;
    e.message = std::move(m);
    e.sent_at = at;
    e.ready_at = at + policy_.latency(from, to);
    e.request = id;
    auto& q = channels_[ChannelKey{from, to}];
    q.push_back(std::move(e));
    endpoints_[from].awaiting = id;
    ++control_in_flight_;
    return {id, &q.back()};
  }

  const Envelope& reply(const NodeId& from, const NodeId& to, RequestId id, Message m, Tick at) {
    require(from);
    require(to);
    Envelope e;
    e.id = next_id_++;
    e.message = std::move(m);
    e.sent_at = at;
    e.ready_at = at + policy_.latency(from, to);
    e.request = id;
    e.reply = true;
    auto& q = channels_[ChannelKey{from, to}];
    q.push_back(std::move(e));
    ++control_in_flight_;
    return q.back();
  }

  bool awaiting(const NodeId& n) const {
    auto it = endpoints_.find(n);
    return it != endpoints_.end() && it->second.awaiting.has_value();
  }
  std::optional<RequestId> awaited(const NodeId& n) const {
    auto it = endpoints_.find(n);
    return it == endpoints_.end() ? std::nullopt : it->second.awaiting;
  }
  void clear_awaiting(const NodeId& n) { endpoints_.at(n).awaiting.reset(); }

  void crash(const NodeId& n) {
    require(n);
    auto& ep = endpoints_[n];
    if (ep.crashed) throw TransportError(TransportError::Kind::AlreadyCrashed, "'" + n.str() + "' already crashed");
    ep.crashed = true;
  }
  void recover(const NodeId& n) {
    require(n);
    auto& ep = endpoints_[n];
    if (!ep.crashed) throw TransportError(TransportError::Kind::NotCrashed, "'" + n.str() + "' is not crashed");
    ep.crashed = false;
  }
  bool crashed(const NodeId& n) const {
    auto it = endpoints_.find(n);
    return it != endpoints_.end() && it->second.crashed;
  }

  Tick busy_until(const NodeId& n) const {
    auto it = endpoints_.find(n);
    return it == endpoints_.end() ? 0 : it->second.busy_until;
  }
  void set_busy_until(const NodeId& n, Tick t) { endpoints_.at(n).busy_until = t; }

  // Channels whose head can be delivered now. While any control message is in
  // flight, channels carrying one take priority (rendezvous semantics).
  std::vector<ChannelKey> deliverable() const {
    std::vector<ChannelKey> all;
    std::vector<ChannelKey> urgent;
    for (const auto& [key, q] : channels_) {
      if (q.empty() || !ready(key, q.front())) continue;
      all.push_back(key);
      if (control_in_flight_ > 0 &&
          std::any_of(q.begin(), q.end(), [](const Envelope& e) { return e.control(); })) {
        urgent.push_back(key);
      }
    }
    return urgent.empty() ? all : urgent;
  }

  std::optional<ChannelKey> choose() {
    auto candidates = deliverable();
    if (candidates.empty()) return std::nullopt;
    return policy_.pick(candidates);
  }

  // Earliest tick at which a currently blocked head becomes deliverable;
  // crashed receivers are excluded since only recovery can unblock them.
  std::optional<Tick> next_ready() const {
    std::optional<Tick> best;
    for (const auto& [key, q] : channels_) {
      if (q.empty() || crashed(key.to)) continue;
      Tick t = std::max(q.front().ready_at, busy_until(key.to));
      if (!best || t < *best) best = t;
    }
    return best;
  }

  Envelope pop(const ChannelKey& key) {
    auto it = channels_.find(key);
    if (it == channels_.end() || it->second.empty()) {
      throw TransportError(TransportError::Kind::EmptyChannel,
                           "nothing to deliver on " + key.from.str() + " -> " + key.to.str());
    }
    Envelope e = std::move(it->second.front());
    it->second.pop_front();
    if (e.control()) --control_in_flight_;
    return e;
  }

  const std::deque<Envelope>* queue(const ChannelKey& key) const {
    auto it = channels_.find(key);
    return it == channels_.end() ? nullptr : &it->second;
  }
  const std::map<ChannelKey, std::deque<Envelope>>& channels() const noexcept { return channels_; }

  std::size_t in_flight() const {
    std::size_t n = 0;
    for (const auto& [key, q] : channels_) n += q.size();
    return n;
  }
  bool idle() const { return in_flight() == 0; }

  std::size_t inbound(const NodeId& n) const {
    std::size_t count = 0;
    for (const auto& [key, q] : channels_) {
      if (key.to == n) count += q.size();
    }
    return count;
  }

 private:
  struct Endpoint {
    bool crashed = false;
    Tick busy_until = 0;
    std::optional<RequestId> awaiting;
  };

  void require(const NodeId& n) const {
    if (!endpoints_.count(n)) {
      throw TransportError(TransportError::Kind::UnknownEndpoint, "unknown endpoint '" + n.str() + "'");
    }
  }

  bool ready(const ChannelKey& key, const Envelope& head) const {
    return !crashed(key.to) && head.ready_at <= now_ && busy_until(key.to) <= now_;
  }

  SchedulerPolicy policy_;
  Tick now_ = 0;
  std::uint64_t next_id_ = 0;
  RequestId next_request_ = 0;
  std::size_t control_in_flight_ = 0;
  std::map<NodeId, Endpoint> endpoints_;
  std::map<ChannelKey, std::deque<Envelope>> channels_;
};

}  // namespace qprop
