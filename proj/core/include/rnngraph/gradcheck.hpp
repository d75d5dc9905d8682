#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rnngraph/engine.hpp"
#include "rnngraph/params.hpp"

namespace rnngraph {

/// A whole sequence processed in one chunk with an untruncated window.
struct SequenceProblem {
  ChunkInput input;
  /// One per output layer, covering all input.frames frames.
  std::vector<Target> targets;
  std::size_t streams = 1;
  std::vector<LayerId> one_hot_inputs;
};

/// Random dense inputs in [-1, 1]; random class targets for softmax outputs
/// and random dense targets for identity outputs.
SequenceProblem random_problem(const NetworkDef& net, std::size_t frames, std::size_t streams,
                               std::uint64_t seed);

/// E_total: the summed error over every frame of the problem, from a fresh
/// zero-context state.
double total_loss(const Engine& engine, const Params& params, const SequenceProblem& problem);

/// Backpropagated gradient for the full window (t0' = 0, errors on every
/// frame), in GradStore's sign convention.
GradStore analytic_grad(const Engine& engine, const Params& params, const SequenceProblem& problem);

/// Central differences (E(w + step) - E(w - step)) / (2 step) for every
/// Dense weight, negated to match GradStore's convention (-dE/dW).
GradStore numeric_grad(const Engine& engine, const Params& params, const SequenceProblem& problem,
                       double step = 1e-5);

struct ConnectionError {
  ConnectionId connection = 0;
  double max_rel = 0.0;
  double max_abs = 0.0;
  bool pass = true;
};

struct GradReport {
  std::vector<ConnectionError> connections;
  double threshold = 1e-4;
  bool pass = true;

  double max_rel() const;
};

/// |a - n| / max(|a|, |n|, 1e-8) per element, worst case per connection.
GradReport compare(const GradStore& analytic, const GradStore& numeric, double threshold = 1e-4);

/// Aligned text table, one row per Dense connection.
std::string format_report(const GradReport& report, const NetworkDef& net);

}  // namespace rnngraph
