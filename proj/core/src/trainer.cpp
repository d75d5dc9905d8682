#include "rnngraph/trainer.hpp"

#include <chrono>

namespace rnngraph {

TrainSession::TrainSession(const Engine& engine, Params& params, std::vector<StreamTape> tapes,
                           TrainConfig config)
    : engine_(engine), params_(params), tapes_(std::move(tapes)), config_(config) {
  const auto& net = engine_.network();
  const auto inputs = net.input_layers();
  const auto outputs = net.output_layers();
  if (inputs.size() != 1 || outputs.size() != 1)
    throw Error("training needs exactly one input and one output layer");
  if (tapes_.size() != config_.streams)
    throw Error("training: " + std::to_string(tapes_.size()) + " tapes for " +
                std::to_string(config_.streams) + " streams");
  if (config_.h_prime < 1 || config_.h < config_.h_prime)
    throw Error("training: need 1 <= h' <= h");
  if (!(config_.lr > 0.0)) throw Error("learning rate must be positive");
  output_activation_ = net.layer(outputs.front()).activation;
  criterion_ = criterion_for(output_activation_);
  if (criterion_ != Criterion::kCrossEntropySoftmax)
    throw Error("token training needs a softmax output layer");
  state_ = engine_.make_state(config_.streams, config_.h, inputs);
}

IterationMetrics TrainSession::step() {
  const auto start = std::chrono::steady_clock::now();
  auto batch = next_batch(tapes_, config_.h_prime, config_.reset_on_sequence_boundary);

  ChunkInput input;
  input.frames = config_.h_prime;
  input.layers.push_back(LayerInput::from_ids(std::move(batch.inputs)));
  input.resets = std::move(batch.resets);
  const auto outputs = engine_.forward_chunk(params_, state_, input);

  const auto target = Target::from_ids(std::move(batch.targets));
  IterationMetrics m;
  m.iteration = ++iteration_;
  m.loss = output_loss(target, outputs.front(), criterion_);
  m.mean_loss = m.loss / static_cast<double>(config_.h_prime * config_.streams);
  std::vector<Matrix> errors;
  errors.push_back(inject_output_error(target, outputs.front(), criterion_, output_activation_));

  BpttWindow window{config_.h, config_.h_prime, state_.cursor()};
  grads_ = engine_.backward_window(params_, state_, window, errors);
  sgd_update(params_, grads_, config_.lr);

  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.words_per_sec = static_cast<double>(config_.h_prime * config_.streams) / std::max(m.seconds, 1e-12);
  return m;
}

std::vector<IterationMetrics> train_loop(const Engine& engine, Params& params,
                                         std::vector<StreamTape> tapes, const TrainConfig& config,
                                         const std::function<void(const IterationMetrics&)>& on_iteration) {
  TrainSession session(engine, params, std::move(tapes), config);
  std::vector<IterationMetrics> metrics;
  metrics.reserve(config.iterations);
  for (std::size_t i = 0; i < config.iterations; ++i) {
    metrics.push_back(session.step());
    if (on_iteration) on_iteration(metrics.back());
  }
  return metrics;
}

}  // namespace rnngraph
