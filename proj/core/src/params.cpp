#include "rnngraph/params.hpp"

#include <cmath>
#include <cstring>
#include <random>

namespace rnngraph {

Params zero_params(const NetworkDef& net) {
  Params p;
  for (const auto& shape : infer_shapes(net))
    p.weights.emplace_back(shape.identity ? Matrix() : Matrix(shape.rows, shape.cols));
  return p;
}

Params init_params(const NetworkDef& net, std::uint64_t seed) {
  Params p = zero_params(net);
  std::vector<std::size_t> fan_in(net.num_layers(), 0);
  for (const auto& c : net.connections())
    if (c.weight == WeightKind::kDense) fan_in[c.dst] += net.layer(c.src).size;

  std::mt19937_64 rng(seed);
  for (const auto& c : net.connections()) {
    if (c.weight != WeightKind::kDense) continue;
    const double r = 1.0 / std::sqrt(static_cast<double>(fan_in[c.dst]));
    std::uniform_real_distribution<double> dist(-r, r);
    for (auto& w : p.weights[c.id].values()) w = dist(rng);
  }
  return p;
}

GradStore zero_grads(const NetworkDef& net) {
  GradStore g;
  g.grads = zero_params(net).weights;
  return g;
}

GradStore& GradStore::operator+=(const GradStore& other) {
  if (other.grads.size() != grads.size()) throw ShapeError("GradStore: connection count mismatch");
  for (std::size_t m = 0; m < grads.size(); ++m) add_into(other.grads[m].view(), grads[m].view());
  contributions += other.contributions;
  return *this;
}

bool GradStore::bit_identical(const GradStore& other) const {
  if (grads.size() != other.grads.size() || contributions != other.contributions) return false;
  for (std::size_t m = 0; m < grads.size(); ++m) {
    const auto a = grads[m].values(), b = other.grads[m].values();
    if (grads[m].rows() != other.grads[m].rows() || a.size() != b.size()) return false;
    if (!a.empty() && std::memcmp(a.data(), b.data(), a.size_bytes()) != 0) return false;
  }
  return true;
}

void sgd_update(Params& params, const GradStore& grads, double lr) {
  if (!(lr > 0.0)) throw Error("learning rate must be positive");
  if (params.weights.size() != grads.grads.size())
    throw ShapeError("sgd_update: connection count mismatch");
  for (std::size_t m = 0; m < grads.grads.size(); ++m) {
    auto& w = params.weights[m];
    const auto& g = grads.grads[m];
    if (w.rows() != g.rows() || w.cols() != g.cols())
      throw ShapeError("sgd_update: shape mismatch on connection " + std::to_string(m));
    auto wv = w.values();
    auto gv = g.values();
    for (std::size_t i = 0; i < wv.size(); ++i) wv[i] += lr * gv[i];
  }
}

}  // namespace rnngraph
