#include "rnngraph/condense.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>
#include <sstream>

#include "rnngraph/graph.hpp"

namespace rnngraph {

std::size_t CondensedGraph::num_recurrent() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const SuperNode& n) {
    return n.kind == NodeKind::kRecurrent;
  }));
}

std::vector<std::vector<LayerId>> tarjan_scc(const NetworkDef& net) {
  require_valid(net);
  graph::Adjacency adj(net.num_layers());
  for (const auto& c : net.connections()) adj[c.src].push_back(c.dst);
  return graph::tarjan_scc(adj);
}

namespace {

// Kahn's algorithm on [0, n) choosing the smallest key among ready vertices.
std::vector<std::size_t> ordered_kahn(const std::vector<std::set<std::size_t>>& succ,
                                      const std::vector<std::size_t>& key) {
  const std::size_t n = succ.size();
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& s : succ)
    for (auto v : s) ++indegree[v];
  using Item = std::pair<std::size_t, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indegree[v] == 0) ready.push({key[v], v});
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const auto v = ready.top().second;
    ready.pop();
    order.push_back(v);
    for (auto w : succ[v])
      if (--indegree[w] == 0) ready.push({key[w], w});
  }
  if (order.size() != n) throw Error("internal: condensation is not acyclic");
  return order;
}

}  // namespace

CondensedGraph condense(const NetworkDef& net) {
  const auto sccs = tarjan_scc(net);

  std::vector<std::size_t> scc_of(net.num_layers());
  for (std::size_t i = 0; i < sccs.size(); ++i)
    for (auto v : sccs[i]) scc_of[v] = i;

  std::vector<std::set<std::size_t>> succ(sccs.size());
  std::vector<bool> self_loop(sccs.size(), false);
  for (const auto& c : net.connections()) {
    const auto a = scc_of[c.src], b = scc_of[c.dst];
    if (a == b) {
      if (c.src == c.dst) self_loop[a] = true;
    } else {
      succ[a].insert(b);
    }
  }

  std::vector<std::size_t> key(sccs.size());
  for (std::size_t i = 0; i < sccs.size(); ++i) key[i] = sccs[i].front();
  const auto order = ordered_kahn(succ, key);

  CondensedGraph cg;
  cg.source = net;
  cg.node_of_layer.assign(net.num_layers(), 0);
  std::vector<std::size_t> position(sccs.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto& members = sccs[order[pos]];
    position[order[pos]] = pos;
    SuperNode node;
    node.members = members;
    for (auto v : members) cg.node_of_layer[v] = pos;
    if (members.size() > 1 || self_loop[order[pos]]) {
      node.kind = NodeKind::kRecurrent;
      // Members in evaluation order: delay-0 edges inside the node only.
      std::vector<std::size_t> local(net.num_layers(), 0);
      for (std::size_t i = 0; i < members.size(); ++i) local[members[i]] = i;
      std::vector<std::set<std::size_t>> inner(members.size());
      for (auto v : members)
        for (auto cid : net.posterior(v)) {
          const auto& c = net.connection(cid);
          if (c.delay == 0 && scc_of[c.dst] == order[pos]) inner[local[v]].insert(local[c.dst]);
        }
      std::vector<std::size_t> inner_key(members.begin(), members.end());
      for (auto i : ordered_kahn(inner, inner_key)) node.internal_order.push_back(members[i]);
    } else {
      node.internal_order = members;
    }
    cg.nodes.push_back(std::move(node));
    cg.topo_order.push_back(pos);
  }

  for (const auto& c : net.connections())
    if (cg.node_of_layer[c.src] != cg.node_of_layer[c.dst]) cg.edges.push_back(c.id);

  // Longest-path layering.
  std::vector<std::size_t> level(cg.nodes.size(), 0);
  std::size_t depth = 0;
  for (auto v : order) {
    for (auto w : succ[v]) level[position[w]] = std::max(level[position[w]], level[position[v]] + 1);
  }
  for (auto l : level) depth = std::max(depth, l + 1);
  cg.frontier_levels.assign(cg.nodes.empty() ? 0 : depth, {});
  for (auto node : cg.topo_order) cg.frontier_levels[level[node]].push_back(node);
  return cg;
}

namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string export_dot(const CondensedGraph& cg) {
  const auto& net = cg.source;
  std::ostringstream out;
  out << "digraph {\n";
  if (!cg.nodes.empty()) out << "  rankdir=TB;\n  node [shape=box];\n";
  auto node_name = [&net](LayerId id) { return quoted(net.layer(id).name.empty()
                                                          ? "L" + std::to_string(id)
                                                          : net.layer(id).name); };
  auto emit_layer = [&](LayerId id, const char* indent) {
    const auto& l = net.layer(id);
    const std::string name = node_name(id);
    // Graphviz reads \n inside a quoted label as a line break.
    const std::string label = name.substr(0, name.size() - 1) + "\\n" + std::to_string(l.size) +
                              " " + std::string(to_string(l.activation)) + "\"";
    out << indent << name << " [label=" << label
        << (l.aggregation == Aggregation::kMultiplicative ? ", shape=circle" : "") << "];\n";
  };
  for (std::size_t i = 0; i < cg.nodes.size(); ++i) {
    const auto& node = cg.nodes[i];
    if (node.kind == NodeKind::kSimple) {
      emit_layer(node.members.front(), "  ");
      continue;
    }
    out << "  subgraph cluster_" << i << " {\n"
        << "    label=\"recurrent node " << i << "\";\n"
        << "    style=rounded;\n";
    for (auto id : node.internal_order) emit_layer(id, "    ");
    out << "  }\n";
  }
  for (const auto& c : net.connections()) {
    out << "  " << node_name(c.src) << " -> " << node_name(c.dst);
    std::vector<std::string> attrs;
    if (c.delay > 0) {
      attrs.push_back("style=dashed");
      attrs.push_back("label=\"" + std::to_string(c.delay) + "\"");
    }
    attrs.push_back(c.weight == WeightKind::kDense ? "penwidth=2.5" : "penwidth=1");
    out << " [";
    for (std::size_t i = 0; i < attrs.size(); ++i) out << (i ? ", " : "") << attrs[i];
    out << "];\n";
  }
  out << "}\n";
  return out.str();
}

std::string format_schedule(const CondensedGraph& cg) {
  const auto& net = cg.source;
  std::ostringstream out;
  auto describe = [&](std::size_t i) {
    const auto& node = cg.nodes[i];
    std::ostringstream s;
    s << '#' << i << (node.kind == NodeKind::kRecurrent ? " recurrent{" : " simple{");
    for (std::size_t j = 0; j < node.internal_order.size(); ++j)
      s << (j ? "," : "") << net.layer(node.internal_order[j]).name;
    s << '}';
    return s.str();
  };
  out << "topo_order:";
  for (auto i : cg.topo_order) out << ' ' << describe(i);
  out << '\n';
  for (std::size_t l = 0; l < cg.frontier_levels.size(); ++l) {
    out << "level " << l << ':';
    for (auto i : cg.frontier_levels[l]) out << ' ' << describe(i);
    out << '\n';
  }
  return out.str();
}

}  // namespace rnngraph
