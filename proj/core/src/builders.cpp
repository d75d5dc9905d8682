#include "rnngraph/builders.hpp"

#include <optional>

namespace rnngraph {

namespace {

void check_sizes(std::initializer_list<std::size_t> sizes, const char* what) {
  for (auto s : sizes)
    if (s < 1) throw Error(std::string(what) + ": all sizes must be >= 1");
}

}  // namespace

NetworkDef build_elman(const ElmanSpec& spec) {
  check_sizes({spec.n_in, spec.n_hidden, spec.n_out}, "elman");
  using enum Aggregation;
  NetworkBuilder b;
  const auto x = b.add_layer("input", spec.n_in, kAdditive, Activation::kIdentity, Role::kInput);
  const auto h = b.add_layer("hidden", spec.n_hidden, kAdditive, spec.hidden_activation, Role::kHidden);
  const auto y = b.add_layer("output", spec.n_out, kAdditive, spec.output_activation, Role::kOutput);
  b.connect(x, h);
  b.connect(h, h, 1);
  b.connect(h, y);
  if (spec.bias) {
    const auto one = b.add_layer("bias", 1, kMultiplicative, Activation::kIdentity, Role::kHidden);
    b.connect(one, h);
    b.connect(one, y);
  }
  return b.build();
}

NetworkDef build_lstm(const LstmSpec& spec) {
  check_sizes({spec.n_in, spec.n_cell, spec.n_out}, "lstm");
  if (spec.output_peephole_delay > 1) throw Error("lstm: output peephole delay must be 0 or 1");
  using enum Aggregation;
  using enum Activation;
  constexpr auto kId = WeightKind::kIdentity;
  const std::size_t n = spec.n_cell;

  NetworkBuilder b;
  const auto x = b.add_layer("input", spec.n_in, kAdditive, kIdentity, Role::kInput);
  std::optional<LayerId> one;
  if (spec.bias) one = b.add_layer("bias", 1, kMultiplicative, kIdentity, Role::kHidden);
  const auto g = b.add_layer("block_input", n, kAdditive, kTanh, Role::kHidden);
  const auto i = b.add_layer("input_gate", n, kAdditive, kSigmoid, Role::kHidden);
  std::optional<LayerId> f;
  if (spec.forget_gate) f = b.add_layer("forget_gate", n, kAdditive, kSigmoid, Role::kHidden);
  const auto o = b.add_layer("output_gate", n, kAdditive, kSigmoid, Role::kHidden);
  const auto ip = b.add_layer("input_product", n, kMultiplicative, kIdentity, Role::kHidden);
  std::optional<LayerId> fp;
  if (spec.forget_gate) fp = b.add_layer("forget_product", n, kMultiplicative, kIdentity, Role::kHidden);
  const auto c = b.add_layer("cell", n, kAdditive, kIdentity, Role::kHidden);
  const auto cs = b.add_layer("cell_squash", n, kAdditive, kTanh, Role::kHidden);
  const auto hp = b.add_layer("hidden_product", n, kMultiplicative, kIdentity, Role::kHidden);
  const auto y = b.add_layer("output", spec.n_out, kAdditive, spec.output_activation, Role::kOutput);

  std::vector<LayerId> units{g, i};
  if (f) units.push_back(*f);
  units.push_back(o);
  for (auto u : units) {
    b.connect(x, u);
    if (one) b.connect(*one, u);
    if (spec.output_recurrence) b.connect(hp, u, 1);
  }
  if (spec.peepholes) {
    b.connect(c, i, 1);
    if (f) b.connect(c, *f, 1);
    b.connect(c, o, spec.output_peephole_delay);
  }
  // c(t) = g(t) * i(t) + f(t) * c(t - 1)
  b.connect(g, ip, 0, kId);
  b.connect(i, ip, 0, kId);
  b.connect(ip, c, 0, kId);
  if (f) {
    b.connect(*f, *fp, 0, kId);
    b.connect(c, *fp, 1, kId);
    b.connect(*fp, c, 0, kId);
  } else {
    b.connect(c, c, 1, kId);
  }
  // h(t) = o(t) * tanh(c(t))
  b.connect(c, cs, 0, kId);
  b.connect(cs, hp, 0, kId);
  b.connect(o, hp, 0, kId);
  b.connect(hp, y);
  if (one) b.connect(*one, y);
  return b.build();
}

std::size_t count_params(const NetworkDef& net, bool include_bias) {
  std::size_t total = 0;
  for (const auto& c : net.connections()) {
    if (c.weight != WeightKind::kDense) continue;
    if (!include_bias && net.is_constant_layer(c.src)) continue;
    total += net.layer(c.dst).size * net.layer(c.src).size;
  }
  return total;
}

}  // namespace rnngraph
