#pragma once

#include <cstddef>
#include <cstdint>
#include <map>

#include "qprop/graph.hpp"
#include "qprop/simulation.hpp"

namespace qprop {

struct GeneratedGraph {
  Topology topology;
  std::map<NodeId, NodeSpec> specs;
};

// Two sources A, B; C = A + B, D = A - B, E = C + D; initial values 5, 3, 8, 2, 10.
GeneratedGraph diamond5();

// One source S fanning out to W01..Wn, all joined by the sink K.
GeneratedGraph fan(std::size_t n);

// levels x width nodes named L<level>_<index>. Level 0 are sources; every
// other node reads nodes index and index+1 (mod width) of the level above.
GeneratedGraph layered(std::size_t levels, std::size_t width);

// Nodes N00.. with the first `sources` as sources; every later node draws each
// earlier node as predecessor with probability `density` and always keeps at
// least one. Deterministic in seed.
GeneratedGraph random_dag(std::size_t n, double density, std::uint64_t seed, std::size_t sources = 0);

}  // namespace qprop
