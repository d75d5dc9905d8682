#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "rnngraph/condense.hpp"
#include "rnngraph/kernels.hpp"
#include "rnngraph/netdef.hpp"
#include "rnngraph/params.hpp"

namespace rnngraph {

class ThreadPool;

/// Token id meaning "no token": a one-hot column that is all zeros.
inline constexpr std::size_t kNoToken = std::numeric_limits<std::size_t>::max();

/// External values for one Input layer over a chunk of frames. Either a
/// dense (width, frames * streams) batch or one token id per column.
struct LayerInput {
  Matrix dense;
  std::vector<std::size_t> ids;

  bool one_hot() const { return dense.empty(); }
  static LayerInput from_dense(Matrix m) { return {std::move(m), {}}; }
  static LayerInput from_ids(std::vector<std::size_t> ids) { return {Matrix(), std::move(ids)}; }
};

struct ChunkInput {
  std::size_t frames = 0;
  /// One entry per NetworkDef::input_layers(), same order.
  std::vector<LayerInput> layers;
  /// Optional, frames * streams flags: nonzero marks the frame at which a
  /// stream's context restarts (earlier frames read as zeros from there on).
  std::vector<std::uint8_t> resets;
};

/// Activation history of N streams. Each layer keeps a bounded window of
/// its y_k over the most recent `history + max_delay` frames; frames before
/// a stream's start (or before a context reset) read as zeros.
class StreamState {
 public:
  StreamState() = default;

  std::size_t streams() const { return cursors_.size(); }
  /// Newest computed frame (0 before the first chunk). Throws on desync.
  std::int64_t cursor() const;
  std::span<const std::int64_t> cursors() const { return cursors_; }
  std::size_t history() const { return history_; }

  /// Restart the context of one stream at its next frame.
  void reset_stream(std::size_t stream);

  /// Concatenate single- or multi-stream states into one state with
  /// streams in argument order. All cursors must agree.
  static StreamState stack(std::span<const StreamState> parts);

  /// y_k of `layer` for frames [first, first + count), all streams. Dense
  /// layers only.
  ConstMatrixView activations(LayerId layer, std::int64_t first, std::size_t count) const;

  /// Overwrite every stored frame older than `frame` with zeros (token ids
  /// with kNoToken). Diagnostic hook for checking which frames a BPTT
  /// window depends on.
  void scrub_before(std::int64_t frame);

 private:
  friend class Engine;

  struct LayerHistory {
    std::size_t width = 0;
    bool one_hot = false;
    Matrix values;
    std::vector<std::size_t> ids;
    std::size_t capacity = 0;
    std::int64_t first_frame = 1;
    std::size_t count = 0;
  };

  std::size_t frame_slot(const LayerHistory& h, std::int64_t frame) const;
  void append_frames(std::size_t frames);
  void check_readable(std::int64_t first, std::size_t count) const;
  /// True when stream `n` at frame `t` may see frame t - delay.
  bool read_valid(std::size_t n, std::int64_t t, std::size_t delay) const;
  bool any_reset_in(std::int64_t first, std::int64_t last) const;

  std::vector<std::int64_t> cursors_;
  std::size_t history_ = 0;
  std::size_t max_delay_ = 0;
  std::vector<LayerHistory> layers_;
  std::vector<std::vector<std::int64_t>> resets_;
  std::vector<bool> pending_reset_;
};

/// Truncation bookkeeping for one BPTT(h; h') iteration: errors are
/// injected on (t1 - h', t1] and propagated while t > t0' = t1 - h.
struct BpttWindow {
  std::size_t h = 1;
  std::size_t h_prime = 1;
  std::int64_t t1 = 0;

  std::int64_t truncation_frame() const { return t1 - static_cast<std::int64_t>(h); }
  std::int64_t first_injected() const { return t1 - static_cast<std::int64_t>(h_prime) + 1; }
  void check() const;
};

enum class Criterion { kCrossEntropySoftmax, kMseIdentity };

/// Desired outputs for one output layer over the injected frames: dense
/// (width, frames * streams) or one class id per column.
struct Target {
  Matrix dense;
  std::vector<std::size_t> ids;

  bool one_hot() const { return dense.empty(); }
  static Target from_dense(Matrix m) { return {std::move(m), {}}; }
  static Target from_ids(std::vector<std::size_t> ids) { return {Matrix(), std::move(ids)}; }
};

/// delta = d - y at the output layer (negative derivative of the error
/// with respect to the layer state), for both supported criteria.
Matrix inject_output_error(const Target& target, const Matrix& output, Criterion criterion,
                           Activation output_activation);

/// Summed error over all columns: cross-entropy -sum d log y, or
/// 0.5 * ||d - y||^2.
double output_loss(const Target& target, const Matrix& output, Criterion criterion);

/// The criterion that pairs with an output activation.
Criterion criterion_for(Activation output_activation);

enum class Schedule {
  /// Simple supernodes evaluate every frame of a chunk at once; only
  /// recurrent nodes step frame by frame.
  kFrameParallel,
  /// Baseline: every node steps frame by frame.
  kFrameSequential,
};

struct EngineOptions {
  std::size_t threads = 1;
  Schedule schedule = Schedule::kFrameParallel;
  bool check_finite = false;
};

/// Executes a validated network over its condensed graph.
///
/// Both schedules perform the same floating point operations per element
/// in the same order, so their results are bit-identical; the thread count
/// only partitions independent outputs and never changes results either.
class Engine {
 public:
  explicit Engine(NetworkDef net, EngineOptions options = {});
  ~Engine();
  Engine(Engine&&) noexcept;
  Engine& operator=(Engine&&) noexcept;

  const NetworkDef& network() const { return net_; }
  const CondensedGraph& graph() const { return cg_; }
  const EngineOptions& options() const { return options_; }

  /// Fresh zero-context state for `streams` streams that can back a BPTT
  /// window of `history` frames. Input layers listed in `one_hot_inputs`
  /// take token ids.
  StreamState make_state(std::size_t streams, std::size_t history,
                         std::span<const LayerId> one_hot_inputs = {}) const;

  /// Advances every stream by input.frames frames and returns y of each
  /// output layer over those frames, in output_layers() order.
  std::vector<Matrix> forward_chunk(const Params& params, StreamState& state,
                                    const ChunkInput& input) const;

  /// Generalized BPTT over the window. `output_errors` holds, per output
  /// layer, delta for the injected frames (t1 - h', t1] of all streams.
  /// Per-stream partial gradients are merged in stream order.
  GradStore backward_window(const Params& params, const StreamState& state,
                            const BpttWindow& window,
                            std::span<const Matrix> output_errors) const;

 private:
  struct BackwardScratch;

  void forward_layer(const Params& params, StreamState& state, LayerId k, std::int64_t first,
                     std::size_t frames, const std::vector<const Matrix*>& z_cache,
                     std::int64_t cache_first) const;
  void connection_output(const Params& params, const StreamState& state, ConnectionId m,
                         std::int64_t first, std::size_t frames, MatrixView out) const;
  void backward_layer(const Params& params, const StreamState& state, BackwardScratch& scratch,
                      LayerId k, std::int64_t first, std::size_t frames,
                      const std::vector<const Matrix*>& back_cache) const;
  void back_term(const Params& params, const StreamState& state, const BackwardScratch& scratch,
                 ConnectionId n, std::int64_t first, std::size_t frames, MatrixView out) const;

  NetworkDef net_;
  CondensedGraph cg_;
  EngineOptions options_;
  std::unique_ptr<ThreadPool> pool_;
};

}  // namespace rnngraph
