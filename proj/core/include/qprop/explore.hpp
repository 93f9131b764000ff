#pragma once

#include <cstddef>
#include <map>

#include "qprop/oracles.hpp"
#include "qprop/simulation.hpp"

namespace qprop {

struct ExplorationReport {
  std::size_t states = 0;
  std::size_t transitions = 0;
  std::size_t terminals = 0;
  // The state limit was hit; the verdicts cover only what was visited.
  bool truncated = false;
  Verdict glitch{"glitchFreedom", true, {}, {}};
  Verdict monotonic{"monotonicity", true, {}, {}};
  Verdict consistent{"consistency", true, {}, {}};

  bool holds() const { return glitch.holds && monotonic.holds && consistent.holds; }
};

// Depth-first search over every interleaving reachable from `start`: each
// step either delivers the head of a non-empty channel or lets a source with
// budget left emit. States are memoized on their fingerprint. Glitch freedom
// and monotonicity are checked on every transition, consistency at every
// terminal state. `start` must be bootstrapped.
ExplorationReport explore_interleavings(const QpropSimulation& start, const std::map<NodeId, int>& emissions,
                                        std::size_t state_limit = 2'000'000);

}  // namespace qprop
