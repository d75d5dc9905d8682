#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rnngraph/netdef.hpp"

namespace rnngraph {

enum class NodeKind { kSimple, kRecurrent };

/// A vertex of the condensed graph. Simple nodes wrap one layer; recurrent
/// nodes group one non-singleton SCC (or a self-looped layer) and carry the
/// order in which members are evaluated within a frame.
struct SuperNode {
  NodeKind kind = NodeKind::kSimple;
  /// Members in ascending layer id.
  std::vector<LayerId> members;
  /// Topological order of the members under delay-0 edges only.
  std::vector<LayerId> internal_order;
};

struct CondensedGraph {
  /// Stored in execution order: nodes[topo_order[i]] runs i-th.
  std::vector<SuperNode> nodes;
  /// Connections whose endpoints lie in different supernodes.
  std::vector<ConnectionId> edges;
  std::vector<std::size_t> topo_order;
  /// Longest-path layering of topo_order; nodes in one level share no edge.
  std::vector<std::vector<std::size_t>> frontier_levels;
  /// Supernode index of every layer.
  std::vector<std::size_t> node_of_layer;
  /// The network this graph was condensed from.
  NetworkDef source;

  std::size_t num_recurrent() const;
};

/// SCCs in Tarjan completion order (reverse topological order of the
/// condensation), each sorted by layer id.
std::vector<std::vector<LayerId>> tarjan_scc(const NetworkDef& net);

CondensedGraph condense(const NetworkDef& net);

/// Graphviz rendering; recurrent nodes become clusters and delayed edges
/// are dashed with the delay as label.
std::string export_dot(const CondensedGraph& cg);

/// Human-readable dump of topo_order and frontier_levels.
std::string format_schedule(const CondensedGraph& cg);

}  // namespace rnngraph
