#include <gtest/gtest.h>

#include <string>

#include "qprop/transport.hpp"

using namespace qprop;
using namespace qprop::literals;

namespace {

Network<std::string> net(SchedulerPolicy p = SchedulerPolicy::round_robin()) {
  Network<std::string> n(std::move(p));
  for (auto id : {"A"_id, "B"_id, "C"_id}) n.add_endpoint(id);
  return n;
}

std::vector<std::string> drain(Network<std::string>& n) {
  std::vector<std::string> out;
  while (auto key = n.choose()) out.push_back(n.pop(*key).message);
  return out;
}

}  // namespace

TEST(Network, FifoPerChannel) {
  auto n = net();
  n.send("A"_id, "C"_id, "first", 0);
  n.send("A"_id, "C"_id, "second", 0);
  EXPECT_EQ(drain(n), (std::vector<std::string>{"first", "second"}));
  EXPECT_TRUE(n.idle());
}

TEST(Network, UnknownEndpoint) {
  auto n = net();
  try {
    n.send("A"_id, "Z"_id, "x", 0);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.kind(), TransportError::Kind::UnknownEndpoint);
  }
  EXPECT_THROW(n.pop(ChannelKey{"A"_id, "B"_id}), TransportError);
}

TEST(Network, CrashedReceiverBuffersUntilRecovery) {
  auto n = net();
  n.crash("C"_id);
  n.send("A"_id, "C"_id, "held", 0);
  EXPECT_FALSE(n.choose().has_value());
  EXPECT_FALSE(n.next_ready().has_value());
  EXPECT_EQ(n.inbound("C"_id), 1u);
  EXPECT_THROW(n.crash("C"_id), TransportError);
  n.recover("C"_id);
  EXPECT_EQ(drain(n), (std::vector<std::string>{"held"}));
  EXPECT_THROW(n.recover("C"_id), TransportError);
}

TEST(Network, SameOutcomeWhetherRecoveredBeforeOrAfterSend) {
  auto before = net();
  before.crash("C"_id);
  before.recover("C"_id);
  before.send("A"_id, "C"_id, "m", 0);
  auto after = net();
  after.crash("C"_id);
  after.send("A"_id, "C"_id, "m", 0);
  after.recover("C"_id);
  EXPECT_EQ(drain(before), drain(after));
}

TEST(Network, LatencyAndBusyReceivers) {
  auto p = SchedulerPolicy::round_robin();
  p.set_default_latency(3);
  p.set_latency("B"_id, "C"_id, 10);
  auto n = net(p);
  n.send("A"_id, "C"_id, "slowish", 0);
  n.send("B"_id, "C"_id, "slow", 0);
  EXPECT_FALSE(n.choose());
  EXPECT_EQ(n.next_ready(), Tick{3});
  n.advance_to(3);
  auto key = n.choose();
  ASSERT_TRUE(key);
  EXPECT_EQ(n.pop(*key).message, "slowish");
  n.set_busy_until("C"_id, 20);
  n.advance_to(10);
  EXPECT_FALSE(n.choose());
  EXPECT_EQ(n.next_ready(), Tick{20});
}

TEST(Network, ControlTrafficTakesPriority) {
  auto n = net();
  n.send("A"_id, "C"_id, "data", 0);
  n.request("B"_id, "C"_id, "ask", 0);
  EXPECT_TRUE(n.awaiting("B"_id));
  auto key = n.choose();
  ASSERT_TRUE(key);
  auto env = n.pop(*key);
  EXPECT_EQ(env.message, "ask");
  n.reply("C"_id, "B"_id, *env.request, "answer", 0);
  key = n.choose();
  ASSERT_TRUE(key);
  auto rep = n.pop(*key);
  EXPECT_TRUE(rep.reply);
  EXPECT_EQ(rep.request, env.request);
  n.clear_awaiting("B"_id);
  EXPECT_FALSE(n.awaiting("B"_id));
  EXPECT_EQ(drain(n), (std::vector<std::string>{"data"}));
}

TEST(Network, FailFastRequestToCrashedNode) {
  auto n = net();
  n.crash("C"_id);
  try {
    n.request("A"_id, "C"_id, "ask", 0, true);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.kind(), TransportError::Kind::ReceiverCrashed);
  }
  EXPECT_FALSE(n.awaiting("A"_id));
  n.request("A"_id, "C"_id, "ask", 0);
  EXPECT_EQ(n.in_flight(), 1u);
}

TEST(Scheduler, SeededRandomIsReproducible) {
  auto run = [](std::uint64_t seed) {
    auto n = net(SchedulerPolicy::seeded_random(seed));
    for (int i = 0; i < 20; ++i) {
      n.send(i % 2 ? "A"_id : "B"_id, i % 3 ? "C"_id : "A"_id, std::to_string(i), 0);
    }
    return drain(n);
  };
  EXPECT_EQ(run(5), run(5));
  EXPECT_NE(run(5), run(6));
}

TEST(Scheduler, RoundRobinCyclesChannels) {
  auto n = net();
  n.send("A"_id, "C"_id, "a1", 0);
  n.send("A"_id, "C"_id, "a2", 0);
  n.send("B"_id, "C"_id, "b1", 0);
  n.send("B"_id, "C"_id, "b2", 0);
  EXPECT_EQ(drain(n), (std::vector<std::string>{"a1", "b1", "a2", "b2"}));
}
