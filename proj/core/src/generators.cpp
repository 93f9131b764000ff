#include "qprop/generators.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace qprop {

namespace {

std::string pad(std::size_t i, std::size_t width) {
  std::string s = std::to_string(i);
  while (s.size() < width) s.insert(s.begin(), '0');
  return s;
}

std::size_t digits(std::size_t n) { return std::max<std::size_t>(2, std::to_string(n).size()); }

}  // namespace

GeneratedGraph diamond5() {
  std::vector<NodeId> nodes{NodeId("A"), NodeId("B"), NodeId("C"), NodeId("D"), NodeId("E")};
  auto e = [](const char* a, const char* b) { return Edge{NodeId(a), NodeId(b)}; };
  GeneratedGraph g;
  g.topology = Topology::validate(nodes, {e("A", "C"), e("B", "C"), e("A", "D"), e("B", "D"), e("C", "E"), e("D", "E")});
  g.specs[NodeId("A")] = NodeSpec{5, UpdateFunction::sum()};
  g.specs[NodeId("B")] = NodeSpec{3, UpdateFunction::sum()};
  g.specs[NodeId("C")] = NodeSpec{8, UpdateFunction::sum()};
  g.specs[NodeId("D")] = NodeSpec{2, UpdateFunction::difference()};
  g.specs[NodeId("E")] = NodeSpec{10, UpdateFunction::sum()};
  return g;
}

GeneratedGraph fan(std::size_t n) {
  std::vector<NodeId> nodes{NodeId("S"), NodeId("K")};
  std::vector<Edge> edges;
  for (std::size_t i = 1; i <= n; ++i) {
    NodeId w("W" + pad(i, digits(n)));
    nodes.push_back(w);
    edges.push_back({NodeId("S"), w});
    edges.push_back({w, NodeId("K")});
  }
  return {Topology::validate(nodes, edges), {}};
}

GeneratedGraph layered(std::size_t levels, std::size_t width) {
  auto name = [&](std::size_t l, std::size_t i) { return NodeId("L" + std::to_string(l) + "_" + pad(i, digits(width))); };
  std::vector<NodeId> nodes;
  std::vector<Edge> edges;
  for (std::size_t l = 0; l < levels; ++l) {
    for (std::size_t i = 0; i < width; ++i) {
      nodes.push_back(name(l, i));
      if (l == 0) continue;
      edges.push_back({name(l - 1, i), name(l, i)});
      if (width > 1) edges.push_back({name(l - 1, (i + 1) % width), name(l, i)});
    }
  }
  return {Topology::validate(nodes, edges), {}};
}

GeneratedGraph random_dag(std::size_t n, double density, std::uint64_t seed, std::size_t sources) {
  if (sources == 0) sources = std::max<std::size_t>(1, n / 4);
  sources = std::min(sources, n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<NodeId> nodes;
  for (std::size_t i = 0; i < n; ++i) nodes.emplace_back("N" + pad(i, digits(n)));
  std::vector<Edge> edges;
  for (std::size_t j = sources; j < n; ++j) {
    bool any = false;
    for (std::size_t i = 0; i < j; ++i) {
      if (coin(rng) < density) {
        edges.push_back({nodes[i], nodes[j]});
        any = true;
      }
    }
    if (!any) {
      std::uniform_int_distribution<std::size_t> pick(0, j - 1);
      edges.push_back({nodes[pick(rng)], nodes[j]});
    }
  }
  return {Topology::validate(nodes, edges), {}};
}

}  // namespace qprop
