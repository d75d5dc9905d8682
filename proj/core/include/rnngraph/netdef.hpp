#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rnngraph {

using LayerId = std::size_t;
using ConnectionId = std::size_t;

enum class Aggregation { kAdditive, kMultiplicative };
enum class Activation { kIdentity, kSigmoid, kTanh, kSoftmax };
enum class Role { kInput, kHidden, kOutput };
enum class WeightKind { kDense, kIdentity };

std::string_view to_string(Aggregation a);
std::string_view to_string(Activation a);
std::string_view to_string(Role r);
std::string_view to_string(WeightKind w);

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A node of the network graph. A layer holds the vectors s_k (state) and
/// y_k = f_k(s_k) (activation); its anterior and posterior connection sets
/// are derived from the connection list.
struct LayerDef {
  LayerId id = 0;
  std::string name;
  std::size_t size = 0;
  Aggregation aggregation = Aggregation::kAdditive;
  Activation activation = Activation::kIdentity;
  Role role = Role::kHidden;

  bool operator==(const LayerDef&) const = default;
};

/// An edge z_m(t) = W_m y_src(t - delay). Identity edges carry no weights.
struct ConnectionDef {
  ConnectionId id = 0;
  LayerId src = 0;
  LayerId dst = 0;
  std::size_t delay = 0;
  WeightKind weight = WeightKind::kDense;

  bool operator==(const ConnectionDef&) const = default;
};

/// Immutable directed graph of layers and connections. Ids equal list
/// positions. Construction never throws on semantic problems; run
/// `validate` to check well-formedness.
class NetworkDef {
 public:
  NetworkDef() = default;
  NetworkDef(std::vector<LayerDef> layers, std::vector<ConnectionDef> connections);

  std::span<const LayerDef> layers() const { return layers_; }
  std::span<const ConnectionDef> connections() const { return connections_; }
  const LayerDef& layer(LayerId id) const { return layers_.at(id); }
  const ConnectionDef& connection(ConnectionId id) const { return connections_.at(id); }
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t num_connections() const { return connections_.size(); }

  /// Largest d_m over all connections (0 for an empty or delay-free net).
  std::size_t max_delay() const { return max_delay_; }

  /// A_k: incoming connection ids, ascending.
  std::span<const ConnectionId> anterior(LayerId k) const { return anterior_.at(k); }
  /// P_k: outgoing connection ids, ascending.
  std::span<const ConnectionId> posterior(LayerId k) const { return posterior_.at(k); }

  std::vector<LayerId> input_layers() const;
  std::vector<LayerId> output_layers() const;
  std::optional<LayerId> find_layer(std::string_view name) const;

  /// A multiplicative layer without anterior connections holds the empty
  /// product, i.e. the constant 1. Builders use it as the bias source.
  bool is_constant_layer(LayerId k) const;

  bool operator==(const NetworkDef& other) const {
    return layers_ == other.layers_ && connections_ == other.connections_;
  }

 private:
  std::vector<LayerDef> layers_;
  std::vector<ConnectionDef> connections_;
  std::vector<std::vector<ConnectionId>> anterior_;
  std::vector<std::vector<ConnectionId>> posterior_;
  std::size_t max_delay_ = 0;
};

/// Incremental construction helper; ids are assigned in insertion order.
class NetworkBuilder {
 public:
  LayerId add_layer(std::string name, std::size_t size, Aggregation aggregation,
                    Activation activation, Role role);
  ConnectionId connect(LayerId src, LayerId dst, std::size_t delay = 0,
                       WeightKind weight = WeightKind::kDense);
  NetworkDef build() const { return NetworkDef(layers_, connections_); }

 private:
  std::vector<LayerDef> layers_;
  std::vector<ConnectionDef> connections_;
};

enum class ViolationKind {
  kEmptyNetwork,
  kBadId,
  kDuplicateName,
  kInvalidSize,
  kDanglingReference,
  kInputHasAnterior,
  kOutputWithoutAnterior,
  kMultiplicativeActivation,
  kSoftmaxNotOutput,
  kSoftmaxHasPosterior,
  kSizeMismatch,
  kAlgebraicLoop,
};

struct Violation {
  ViolationKind kind;
  std::string message;
  std::optional<LayerId> layer;
  std::optional<ConnectionId> connection;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
  std::string to_string() const;
};

ValidationReport validate(const NetworkDef& net);

/// Throws SemanticError carrying the report text when `net` is invalid.
void require_valid(const NetworkDef& net);

class SemanticError : public Error {
 public:
  using Error::Error;
};

struct WeightShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  /// Identity edges report (n, n) but own no storage.
  bool identity = false;

  bool operator==(const WeightShape&) const = default;
};

/// Weight shape per connection id: Dense edges map to (size(dst), size(src)).
std::vector<WeightShape> infer_shapes(const NetworkDef& net);

}  // namespace rnngraph
