#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "rnngraph/data.hpp"
#include "rnngraph/engine.hpp"
#include "rnngraph/params.hpp"

namespace rnngraph {

struct TrainConfig {
  std::size_t streams = 1;
  /// BPTT(h; h'): unroll h frames, advance and inject errors on h' frames.
  std::size_t h = 2;
  std::size_t h_prime = 1;
  double lr = 0.1;
  std::size_t iterations = 1;
  /// Restart a stream's context at every <eos> input. Off by default: the
  /// tape is one continuous context until it wraps.
  bool reset_on_sequence_boundary = false;
};

struct IterationMetrics {
  std::size_t iteration = 0;
  /// Summed error over the h' * N injected columns.
  double loss = 0.0;
  /// loss divided by h' * N.
  double mean_loss = 0.0;
  double seconds = 0.0;
  /// Forward frames per stream times streams, per second.
  double words_per_sec = 0.0;
};

/// Language-model training on token tapes: the network must have exactly
/// one input layer (one-hot tokens) and one output layer.
class TrainSession {
 public:
  TrainSession(const Engine& engine, Params& params, std::vector<StreamTape> tapes,
               TrainConfig config);

  IterationMetrics step();
  const GradStore& last_grads() const { return grads_; }
  const StreamState& state() const { return state_; }

 private:
  const Engine& engine_;
  Params& params_;
  std::vector<StreamTape> tapes_;
  TrainConfig config_;
  StreamState state_;
  Criterion criterion_;
  Activation output_activation_;
  GradStore grads_;
  std::size_t iteration_ = 0;
};

std::vector<IterationMetrics> train_loop(const Engine& engine, Params& params,
                                         std::vector<StreamTape> tapes, const TrainConfig& config,
                                         const std::function<void(const IterationMetrics&)>& on_iteration = {});

}  // namespace rnngraph
