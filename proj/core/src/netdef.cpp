#include "rnngraph/netdef.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "rnngraph/graph.hpp"

namespace rnngraph {

std::string_view to_string(Aggregation a) {
  switch (a) {
    case Aggregation::kAdditive: return "additive";
    case Aggregation::kMultiplicative: return "multiplicative";
  }
  return "?";
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
    case Activation::kSoftmax: return "softmax";
  }
  return "?";
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::kInput: return "input";
    case Role::kHidden: return "hidden";
    case Role::kOutput: return "output";
  }
  return "?";
}

std::string_view to_string(WeightKind w) {
  switch (w) {
    case WeightKind::kDense: return "dense";
    case WeightKind::kIdentity: return "identity";
  }
  return "?";
}

NetworkDef::NetworkDef(std::vector<LayerDef> layers, std::vector<ConnectionDef> connections)
    : layers_(std::move(layers)),
      connections_(std::move(connections)),
      anterior_(layers_.size()),
      posterior_(layers_.size()) {
  for (const auto& c : connections_) {
    max_delay_ = std::max(max_delay_, c.delay);
    // Dangling references are reported by validate(); keep the index sane.
    if (c.dst < layers_.size()) anterior_[c.dst].push_back(c.id);
    if (c.src < layers_.size()) posterior_[c.src].push_back(c.id);
  }
  for (auto& list : anterior_) std::sort(list.begin(), list.end());
  for (auto& list : posterior_) std::sort(list.begin(), list.end());
}

std::vector<LayerId> NetworkDef::input_layers() const {
  std::vector<LayerId> out;
  for (const auto& l : layers_)
    if (l.role == Role::kInput) out.push_back(l.id);
  return out;
}

std::vector<LayerId> NetworkDef::output_layers() const {
  std::vector<LayerId> out;
  for (const auto& l : layers_)
    if (l.role == Role::kOutput) out.push_back(l.id);
  return out;
}

std::optional<LayerId> NetworkDef::find_layer(std::string_view name) const {
  for (const auto& l : layers_)
    if (l.name == name) return l.id;
  return std::nullopt;
}

bool NetworkDef::is_constant_layer(LayerId k) const {
  const auto& l = layers_.at(k);
  return l.role != Role::kInput && l.aggregation == Aggregation::kMultiplicative &&
         anterior_.at(k).empty();
}

LayerId NetworkBuilder::add_layer(std::string name, std::size_t size, Aggregation aggregation,
                                  Activation activation, Role role) {
  const LayerId id = layers_.size();
  layers_.push_back({id, std::move(name), size, aggregation, activation, role});
  return id;
}

ConnectionId NetworkBuilder::connect(LayerId src, LayerId dst, std::size_t delay,
                                     WeightKind weight) {
  const ConnectionId id = connections_.size();
  connections_.push_back({id, src, dst, delay, weight});
  return id;
}

bool ValidationReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

std::string ValidationReport::to_string() const {
  if (ok()) return "ok";
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) out << '\n';
    out << violations[i].message;
  }
  return out.str();
}

namespace {

std::string layer_label(const NetworkDef& net, LayerId id) {
  std::ostringstream out;
  out << "layer " << id;
  if (id < net.num_layers() && !net.layer(id).name.empty())
    out << " '" << net.layer(id).name << "'";
  return out.str();
}

}  // namespace

ValidationReport validate(const NetworkDef& net) {
  ValidationReport report;
  auto add = [&report](ViolationKind kind, std::string message,
                       std::optional<LayerId> layer = std::nullopt,
                       std::optional<ConnectionId> connection = std::nullopt) {
    report.violations.push_back({kind, std::move(message), layer, connection});
  };

  const auto layers = net.layers();
  const auto connections = net.connections();
  if (layers.empty()) {
    add(ViolationKind::kEmptyNetwork, "network has no layers");
    return report;
  }

  std::set<std::string> names;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.id != i)
      add(ViolationKind::kBadId, "layer at position " + std::to_string(i) + " has id " +
                                     std::to_string(l.id), i);
    if (!l.name.empty() && !names.insert(l.name).second)
      add(ViolationKind::kDuplicateName, "duplicate layer name '" + l.name + "'", i);
    if (l.size < 1) add(ViolationKind::kInvalidSize, layer_label(net, i) + ": size must be >= 1", i);
    if (l.aggregation == Aggregation::kMultiplicative && l.activation != Activation::kIdentity)
      add(ViolationKind::kMultiplicativeActivation,
          layer_label(net, i) + ": multiplicative layers must use identity activation", i);
    if (l.activation == Activation::kSoftmax && l.role != Role::kOutput)
      add(ViolationKind::kSoftmaxNotOutput,
          layer_label(net, i) + ": softmax is only allowed on output layers", i);
  }

  bool dangling = false;
  for (std::size_t i = 0; i < connections.size(); ++i) {
    const auto& c = connections[i];
    if (c.id != i)
      add(ViolationKind::kBadId, "connection at position " + std::to_string(i) + " has id " +
                                     std::to_string(c.id), std::nullopt, i);
    if (c.src >= layers.size() || c.dst >= layers.size()) {
      add(ViolationKind::kDanglingReference,
          "connection " + std::to_string(i) + " references a missing layer", std::nullopt, i);
      dangling = true;
      continue;
    }
    if (c.weight == WeightKind::kIdentity && layers[c.src].size != layers[c.dst].size)
      add(ViolationKind::kSizeMismatch,
          "connection " + std::to_string(i) + ": identity weights need equal sizes (size mismatch " +
              std::to_string(layers[c.src].size) + " vs " + std::to_string(layers[c.dst].size) + ")",
          std::nullopt, i);
  }
  if (dangling) return report;

  for (const auto& l : layers) {
    if (l.role == Role::kInput && !net.anterior(l.id).empty())
      add(ViolationKind::kInputHasAnterior,
          layer_label(net, l.id) + ": input layers cannot have anterior connections", l.id);
    if (l.role == Role::kOutput && net.anterior(l.id).empty())
      add(ViolationKind::kOutputWithoutAnterior,
          layer_label(net, l.id) + ": output layers need at least one anterior connection", l.id);
    // The softmax derivative only exists fused with the cross-entropy error.
    if (l.activation == Activation::kSoftmax && !net.posterior(l.id).empty())
      add(ViolationKind::kSoftmaxHasPosterior,
          layer_label(net, l.id) + ": softmax layers cannot feed other layers", l.id);
  }

  // Every cycle must pass through a delayed connection.
  graph::Adjacency instant(layers.size());
  for (const auto& c : connections) {
    if (c.delay != 0) continue;
    if (c.src == c.dst) {
      add(ViolationKind::kAlgebraicLoop,
          layer_label(net, c.src) + ": algebraic loop (zero-delay self connection " +
              std::to_string(c.id) + ")",
          c.src, c.id);
      continue;
    }
    instant[c.src].push_back(c.dst);
  }
  for (const auto& scc : graph::tarjan_scc(instant)) {
    if (scc.size() < 2) continue;
    std::string members;
    for (auto v : scc) members += (members.empty() ? "" : ", ") + layer_label(net, v);
    add(ViolationKind::kAlgebraicLoop, "algebraic loop through " + members, scc.front());
  }
  return report;
}

void require_valid(const NetworkDef& net) {
  const auto report = validate(net);
  if (!report.ok()) throw SemanticError("invalid network: " + report.to_string());
}

std::vector<WeightShape> infer_shapes(const NetworkDef& net) {
  require_valid(net);
  std::vector<WeightShape> shapes;
  shapes.reserve(net.num_connections());
  for (const auto& c : net.connections()) {
    const auto rows = net.layer(c.dst).size;
    const auto cols = net.layer(c.src).size;
    shapes.push_back({rows, cols, c.weight == WeightKind::kIdentity});
  }
  return shapes;
}

}  // namespace rnngraph
