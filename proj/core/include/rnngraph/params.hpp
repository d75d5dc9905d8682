#pragma once

#include <cstdint>
#include <vector>

#include "rnngraph/kernels.hpp"
#include "rnngraph/netdef.hpp"

namespace rnngraph {

/// Trainable weights, indexed by connection id. Identity connections hold
/// an empty matrix.
struct Params {
  std::vector<Matrix> weights;

  bool operator==(const Params&) const = default;
};

/// Zero weights shaped by infer_shapes.
Params zero_params(const NetworkDef& net);

/// Uniform(-r, r) with r = 1/sqrt(fan_in), where fan_in is the total
/// width feeding the destination layer through Dense connections.
Params init_params(const NetworkDef& net, std::uint64_t seed);

/// Per-connection accumulated gradients.
///
/// Sign convention: `grads[m]` holds sum_t eps_m(t) y_src(t - d_m)^T. Since
/// eps is the *negative* derivative of the total error, this is
/// -dE/dW_m, the descent direction, and sgd_update adds it:
/// W <- W + lr * grads.
struct GradStore {
  std::vector<Matrix> grads;
  /// Number of (frame, stream) columns whose output error was injected.
  std::size_t contributions = 0;

  GradStore& operator+=(const GradStore& other);
  bool operator==(const GradStore&) const = default;
  /// True when every element matches bit for bit (distinguishes -0.0).
  bool bit_identical(const GradStore& other) const;
};

GradStore zero_grads(const NetworkDef& net);

void sgd_update(Params& params, const GradStore& grads, double lr);

}  // namespace rnngraph
