#pragma once

#include <cstddef>
#include <vector>

namespace rnngraph::graph {

/// Adjacency list over vertices [0, n). Successor lists are visited in the
/// stored order, so results are deterministic for a fixed list order.
using Adjacency = std::vector<std::vector<std::size_t>>;

/// Tarjan's algorithm, iterative. Components are emitted in completion
/// order, which is a reverse topological order of the condensation; the
/// vertices inside each component are sorted ascending.
std::vector<std::vector<std::size_t>> tarjan_scc(const Adjacency& adj);

}  // namespace rnngraph::graph
