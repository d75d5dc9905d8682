#include "rnngraph/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rnngraph/thread_pool.hpp"

namespace rnngraph {

namespace {

std::size_t as_size(std::int64_t v) { return static_cast<std::size_t>(v); }

}  // namespace

// ---------------------------------------------------------------------------
// StreamState

std::int64_t StreamState::cursor() const {
  if (cursors_.empty()) throw Error("stream state has no streams");
  for (auto c : cursors_)
    if (c != cursors_.front()) throw Error("cursor desync between streams");
  return cursors_.front();
}

void StreamState::reset_stream(std::size_t stream) { pending_reset_.at(stream) = true; }

std::size_t StreamState::frame_slot(const LayerHistory& h, std::int64_t frame) const {
  return as_size(frame - h.first_frame);
}

void StreamState::check_readable(std::int64_t first, std::size_t count) const {
  if (layers_.empty()) return;
  const auto& h = layers_.front();
  const std::int64_t newest = h.first_frame + static_cast<std::int64_t>(h.count) - 1;
  const std::int64_t oldest_allowed =
      std::max(h.first_frame, newest - static_cast<std::int64_t>(history_ + max_delay_) + 1);
  if (first < oldest_allowed || first + static_cast<std::int64_t>(count) - 1 > newest)
    throw Error("missing history: frames [" + std::to_string(first) + ", " +
                std::to_string(first + static_cast<std::int64_t>(count) - 1) +
                "] outside the live window [" + std::to_string(oldest_allowed) + ", " +
                std::to_string(newest) + "]");
}

bool StreamState::read_valid(std::size_t n, std::int64_t t, std::size_t delay) const {
  if (delay == 0) return true;
  for (auto r : resets_[n])
    if (r > t - static_cast<std::int64_t>(delay) && r <= t) return false;
  return true;
}

bool StreamState::any_reset_in(std::int64_t first, std::int64_t last) const {
  for (const auto& list : resets_)
    for (auto r : list)
      if (r >= first && r <= last) return true;
  return false;
}

void StreamState::append_frames(std::size_t frames) {
  const std::size_t n = streams();
  const std::size_t keep_limit = history_ + max_delay_;
  for (auto& h : layers_) {
    if (h.count + frames > h.capacity) {
      const std::size_t keep = std::min(h.count, keep_limit);
      const std::size_t drop = h.count - keep;
      const std::size_t new_capacity = std::max(h.capacity, keep + frames);
      if (h.one_hot) {
        std::vector<std::size_t> ids(new_capacity * n, kNoToken);
        std::copy_n(h.ids.begin() + static_cast<std::ptrdiff_t>(drop * n), keep * n, ids.begin());
        h.ids = std::move(ids);
      } else {
        Matrix values(h.width, new_capacity * n);
        for (std::size_t r = 0; r < h.width; ++r)
          std::copy_n(&h.values(r, drop * n), keep * n, &values(r, 0));
        h.values = std::move(values);
      }
      h.capacity = new_capacity;
      h.first_frame += static_cast<std::int64_t>(drop);
      h.count = keep;
    }
    const std::size_t begin = h.count * n, len = frames * n;
    if (h.one_hot) {
      std::fill_n(h.ids.begin() + static_cast<std::ptrdiff_t>(begin), len, kNoToken);
    } else {
      for (std::size_t r = 0; r < h.width; ++r) std::fill_n(&h.values(r, begin), len, 0.0);
    }
    h.count += frames;
  }
  // Resets older than anything still readable no longer matter.
  if (!layers_.empty()) {
    const std::int64_t horizon = layers_.front().first_frame - static_cast<std::int64_t>(max_delay_);
    for (auto& list : resets_)
      std::erase_if(list, [horizon](std::int64_t r) { return r < horizon; });
  }
}

ConstMatrixView StreamState::activations(LayerId layer, std::int64_t first,
                                         std::size_t count) const {
  const auto& h = layers_.at(layer);
  if (h.one_hot) throw Error("activations: layer " + std::to_string(layer) + " holds token ids");
  if (first < h.first_frame ||
      first + static_cast<std::int64_t>(count) > h.first_frame + static_cast<std::int64_t>(h.count))
    throw Error("activations: frames not in history");
  const std::size_t n = streams();
  return h.values.view().columns(frame_slot(h, first) * n, count * n);
}

void StreamState::scrub_before(std::int64_t frame) {
  const std::size_t n = streams();
  for (auto& h : layers_) {
    if (frame <= h.first_frame) continue;
    const std::size_t frames = std::min(h.count, frame_slot(h, frame));
    if (h.one_hot) {
      std::fill_n(h.ids.begin(), frames * n, kNoToken);
    } else {
      for (std::size_t r = 0; r < h.width; ++r) std::fill_n(&h.values(r, 0), frames * n, 0.0);
    }
  }
}

StreamState StreamState::stack(std::span<const StreamState> parts) {
  if (parts.empty()) throw Error("stack: no states");
  const auto& head = parts.front();
  const auto cursor = head.cursor();
  std::int64_t first = head.layers_.empty() ? 1 : head.layers_.front().first_frame;
  for (const auto& p : parts) {
    if (p.cursor() != cursor) throw Error("cursor desync between streams");
    if (p.history_ != head.history_ || p.max_delay_ != head.max_delay_ ||
        p.layers_.size() != head.layers_.size())
      throw Error("stack: incompatible stream states");
    for (std::size_t k = 0; k < p.layers_.size(); ++k)
      if (p.layers_[k].width != head.layers_[k].width ||
          p.layers_[k].one_hot != head.layers_[k].one_hot)
        throw Error("stack: incompatible stream states");
    if (!p.layers_.empty()) first = std::max(first, p.layers_.front().first_frame);
  }

  StreamState out;
  out.history_ = head.history_;
  out.max_delay_ = head.max_delay_;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.streams();
  out.cursors_.assign(total, cursor);
  out.pending_reset_.assign(total, false);
  for (const auto& p : parts) {
    out.resets_.insert(out.resets_.end(), p.resets_.begin(), p.resets_.end());
    for (std::size_t i = 0; i < p.streams(); ++i)
      if (p.pending_reset_[i]) out.pending_reset_[out.resets_.size() - p.streams() + i] = true;
  }

  const std::size_t count = head.layers_.empty() ? 0 : as_size(cursor - first + 1);
  const std::size_t capacity = 2 * (out.history_ + out.max_delay_) + 1;
  for (std::size_t k = 0; k < head.layers_.size(); ++k) {
    LayerHistory h;
    h.width = head.layers_[k].width;
    h.one_hot = head.layers_[k].one_hot;
    h.capacity = std::max(capacity, count);
    h.first_frame = first;
    h.count = count;
    if (h.one_hot) h.ids.assign(h.capacity * total, kNoToken);
    else h.values = Matrix(h.width, h.capacity * total);
    std::size_t offset = 0;
    for (const auto& p : parts) {
      const auto& src = p.layers_[k];
      const std::size_t pn = p.streams();
      for (std::size_t f = 0; f < count; ++f) {
        const std::size_t from = (p.frame_slot(src, first + static_cast<std::int64_t>(f))) * pn;
        const std::size_t to = f * total + offset;
        for (std::size_t s = 0; s < pn; ++s) {
          if (h.one_hot) {
            h.ids[to + s] = src.ids[from + s];
          } else {
            for (std::size_t r = 0; r < h.width; ++r) h.values(r, to + s) = src.values(r, from + s);
          }
        }
      }
      offset += pn;
    }
    out.layers_.push_back(std::move(h));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Window / criteria

void BpttWindow::check() const {
  if (h_prime < 1 || h_prime > h)
    throw Error("window inconsistent: need 1 <= h' <= h (h=" + std::to_string(h) +
                ", h'=" + std::to_string(h_prime) + ")");
  if (t1 < static_cast<std::int64_t>(h_prime))
    throw Error("window inconsistent: t1=" + std::to_string(t1) + " precedes " +
                std::to_string(h_prime) + " injected frames");
}

Criterion criterion_for(Activation output_activation) {
  switch (output_activation) {
    case Activation::kSoftmax: return Criterion::kCrossEntropySoftmax;
    case Activation::kIdentity: return Criterion::kMseIdentity;
    default: break;
  }
  throw Error("no error criterion pairs with output activation " +
              std::string(to_string(output_activation)));
}

namespace {

void check_target(const Target& target, const Matrix& output) {
  if (target.one_hot()) {
    if (target.ids.size() != output.cols()) throw ShapeError("target: id count mismatch");
    for (auto id : target.ids)
      if (id >= output.rows()) throw ShapeError("target: class id out of range");
  } else if (target.dense.rows() != output.rows() || target.dense.cols() != output.cols()) {
    throw ShapeError("target: shape mismatch");
  }
}

double target_value(const Target& target, std::size_t r, std::size_t c) {
  return target.one_hot() ? (target.ids[c] == r ? 1.0 : 0.0) : target.dense(r, c);
}

}  // namespace

Matrix inject_output_error(const Target& target, const Matrix& output, Criterion criterion,
                           Activation output_activation) {
  if (criterion_for(output_activation) != criterion)
    throw Error("criterion does not match output activation " +
                std::string(to_string(output_activation)));
  check_target(target, output);
  Matrix delta(output.rows(), output.cols());
  for (std::size_t r = 0; r < output.rows(); ++r)
    for (std::size_t c = 0; c < output.cols(); ++c)
      delta(r, c) = target_value(target, r, c) - output(r, c);
  return delta;
}

double output_loss(const Target& target, const Matrix& output, Criterion criterion) {
  check_target(target, output);
  double total = 0.0;
  if (criterion == Criterion::kCrossEntropySoftmax) {
    for (std::size_t c = 0; c < output.cols(); ++c) {
      for (std::size_t r = 0; r < output.rows(); ++r) {
        const double d = target_value(target, r, c);
        if (d != 0.0) total -= d * std::log(std::max(output(r, c), 1e-300));
      }
    }
  } else {
    for (std::size_t r = 0; r < output.rows(); ++r)
      for (std::size_t c = 0; c < output.cols(); ++c) {
        const double e = target_value(target, r, c) - output(r, c);
        total += 0.5 * e * e;
      }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Engine

Engine::Engine(NetworkDef net, EngineOptions options)
    : net_(std::move(net)), options_(options) {
  require_valid(net_);
  cg_ = condense(net_);
  const std::size_t threads = options_.threads == 0 ? ThreadPool::hardware_threads() : options_.threads;
  options_.threads = threads;
  if (threads > 1) pool_ = std::make_unique<ThreadPool>(threads);
}

Engine::~Engine() = default;
Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;

StreamState Engine::make_state(std::size_t streams, std::size_t history,
                               std::span<const LayerId> one_hot_inputs) const {
  if (streams < 1) throw Error("need at least one stream");
  if (history < 1) throw Error("history must be at least one frame");
  StreamState s;
  s.cursors_.assign(streams, 0);
  s.history_ = history;
  s.max_delay_ = net_.max_delay();
  s.resets_.assign(streams, {});
  s.pending_reset_.assign(streams, false);
  const std::size_t capacity = 2 * (history + s.max_delay_) + 1;
  for (const auto& l : net_.layers()) {
    StreamState::LayerHistory h;
    h.width = l.size;
    h.one_hot = std::find(one_hot_inputs.begin(), one_hot_inputs.end(), l.id) != one_hot_inputs.end();
    if (h.one_hot && l.role != Role::kInput)
      throw Error("only input layers can take token ids (layer " + l.name + ")");
    h.capacity = capacity;
    h.first_frame = 1 - static_cast<std::int64_t>(s.max_delay_);
    h.count = s.max_delay_;
    if (h.one_hot) h.ids.assign(capacity * streams, kNoToken);
    else h.values = Matrix(l.size, capacity * streams);
    s.layers_.push_back(std::move(h));
  }
  return s;
}

void Engine::connection_output(const Params& params, const StreamState& state, ConnectionId m,
                               std::int64_t first, std::size_t frames, MatrixView out) const {
  const auto& c = net_.connection(m);
  const auto& src = state.layers_[c.src];
  const std::size_t n = state.streams();
  const std::int64_t read_first = first - static_cast<std::int64_t>(c.delay);
  state.check_readable(read_first, frames);
  const bool masked =
      c.delay > 0 && state.any_reset_in(read_first + 1, first + static_cast<std::int64_t>(frames) - 1);
  auto valid = [&](std::size_t col) {
    return !masked || state.read_valid(col % n, first + static_cast<std::int64_t>(col / n), c.delay);
  };
  const std::size_t base = state.frame_slot(src, read_first) * n;
  const std::size_t cols = frames * n;

  if (src.one_hot) {
    for (std::size_t col = 0; col < cols; ++col) {
      const std::size_t id = src.ids[base + col];
      if (id == kNoToken || !valid(col)) continue;
      if (c.weight == WeightKind::kDense) {
        const auto& w = params.weights[m];
        for (std::size_t r = 0; r < out.rows; ++r) out(r, col) += w(r, id);
      } else {
        out(id, col) += 1.0;
      }
    }
    return;
  }

  ConstMatrixView y = src.values.view().columns(base, cols);
  Matrix masked_copy;
  if (masked) {
    masked_copy = to_matrix(y);
    for (std::size_t col = 0; col < cols; ++col)
      if (!valid(col))
        for (std::size_t r = 0; r < masked_copy.rows(); ++r) masked_copy(r, col) = 0.0;
    y = masked_copy.view();
  }
  if (c.weight == WeightKind::kDense) gemm(params.weights[m].view(), Transpose::kNo, y, out, pool_.get());
  else add_into(y, out);
}

void Engine::forward_layer(const Params& params, StreamState& state, LayerId k, std::int64_t first,
                           std::size_t frames, const std::vector<const Matrix*>& z_cache,
                           std::int64_t cache_first) const {
  const auto& layer = net_.layer(k);
  if (layer.role == Role::kInput) return;
  auto& hist = state.layers_[k];
  const std::size_t n = state.streams();
  const std::size_t cols = frames * n;
  MatrixView out = hist.values.view().columns(state.frame_slot(hist, first) * n, cols);

  const bool additive = layer.aggregation == Aggregation::kAdditive;
  fill(out, additive ? 0.0 : 1.0);
  Matrix z(layer.size, cols);
  for (auto m : net_.anterior(k)) {
    ConstMatrixView zv;
    if (!z_cache.empty() && z_cache[m]) {
      zv = z_cache[m]->view().columns(as_size(first - cache_first) * n, cols);
    } else {
      z.fill(0.0);
      connection_output(params, state, m, first, frames, z.view());
      zv = z.view();
    }
    if (additive) add_into(zv, out);
    else mul_into(zv, out);
  }
  apply_activation(layer.activation, out);
  if (options_.check_finite) check_finite(out, layer.name.c_str());
}

std::vector<Matrix> Engine::forward_chunk(const Params& params, StreamState& state,
                                          const ChunkInput& input) const {
  if (params.weights.size() != net_.num_connections())
    throw ShapeError("params do not match the network");
  if (state.layers_.size() != net_.num_layers()) throw ShapeError("state does not match the network");
  const std::int64_t t0 = state.cursor();
  const std::size_t frames = input.frames;
  const std::size_t n = state.streams();
  if (frames == 0) throw Error("forward_chunk: empty chunk");
  if (frames > state.history_)
    throw Error("forward_chunk: chunk of " + std::to_string(frames) +
                " frames exceeds the history window of " + std::to_string(state.history_));
  const auto inputs = net_.input_layers();
  if (input.layers.size() != inputs.size())
    throw ShapeError("forward_chunk: expected " + std::to_string(inputs.size()) + " input layers");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& in = input.layers[i];
    const auto& hist = state.layers_[inputs[i]];
    if (in.one_hot() != hist.one_hot)
      throw ShapeError("forward_chunk: input " + std::to_string(i) + " representation mismatch");
    if (in.one_hot()) {
      if (in.ids.size() != frames * n) throw ShapeError("forward_chunk: token id count mismatch");
      for (auto id : in.ids)
        if (id != kNoToken && id >= hist.width) throw ShapeError("forward_chunk: token id out of range");
    } else if (in.dense.rows() != hist.width || in.dense.cols() != frames * n) {
      throw ShapeError("forward_chunk: input " + std::to_string(i) + " shape mismatch");
    }
  }
  if (!input.resets.empty() && input.resets.size() != frames * n)
    throw ShapeError("forward_chunk: reset flags must cover frames * streams");

  for (std::size_t s = 0; s < n; ++s) {
    if (state.pending_reset_[s]) {
      state.resets_[s].push_back(t0 + 1);
      state.pending_reset_[s] = false;
    }
  }
  for (std::size_t f = 0; f < frames && !input.resets.empty(); ++f)
    for (std::size_t s = 0; s < n; ++s)
      if (input.resets[batch_column(f, s, n)]) {
        const std::int64_t t = t0 + 1 + static_cast<std::int64_t>(f);
        if (state.resets_[s].empty() || state.resets_[s].back() != t) state.resets_[s].push_back(t);
      }

  state.append_frames(frames);
  const std::int64_t first = t0 + 1;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto& hist = state.layers_[inputs[i]];
    const std::size_t base = state.frame_slot(hist, first) * n;
    if (hist.one_hot) std::copy(input.layers[i].ids.begin(), input.layers[i].ids.end(),
                                hist.ids.begin() + static_cast<std::ptrdiff_t>(base));
    else copy(input.layers[i].dense.view(), hist.values.view().columns(base, frames * n));
  }

  const std::vector<const Matrix*> no_cache;
  if (options_.schedule == Schedule::kFrameParallel) {
    for (auto idx : cg_.topo_order) {
      const auto& node = cg_.nodes[idx];
      if (node.kind == NodeKind::kSimple) {
        forward_layer(params, state, node.members.front(), first, frames, no_cache, 0);
        continue;
      }
      // Connections entering the recurrent node from earlier nodes do not
      // depend on its own frames: evaluate them for the whole chunk up front.
      std::vector<Matrix> storage(net_.num_connections());
      std::vector<const Matrix*> cache(net_.num_connections(), nullptr);
      for (auto k : node.members)
        for (auto m : net_.anterior(k)) {
          if (cg_.node_of_layer[net_.connection(m).src] == idx) continue;
          storage[m] = Matrix(net_.layer(k).size, frames * n);
          connection_output(params, state, m, first, frames, storage[m].view());
          cache[m] = &storage[m];
        }
      for (std::size_t f = 0; f < frames; ++f)
        for (auto k : node.internal_order)
          forward_layer(params, state, k, first + static_cast<std::int64_t>(f), 1, cache, first);
    }
  } else {
    for (std::size_t f = 0; f < frames; ++f)
      for (auto idx : cg_.topo_order)
        for (auto k : cg_.nodes[idx].internal_order)
          forward_layer(params, state, k, first + static_cast<std::int64_t>(f), 1, no_cache, 0);
  }

  for (auto& c : state.cursors_) c += static_cast<std::int64_t>(frames);

  std::vector<Matrix> outputs;
  for (auto k : net_.output_layers()) outputs.push_back(to_matrix(state.activations(k, first, frames)));
  return outputs;
}

// ---------------------------------------------------------------------------
// Backward

struct Engine::BackwardScratch {
  std::int64_t lo = 0;  // deltas cover frames (lo, t1]
  std::int64_t t1 = 0;
  std::size_t frames = 0;
  std::size_t streams = 0;
  std::int64_t first_injected = 0;
  std::vector<Matrix> delta;                 // per layer
  std::vector<Matrix> eps;                   // per connection into a multiplicative layer
  std::vector<const Matrix*> injected;       // per layer, output layers only

  std::size_t column(std::int64_t frame) const { return as_size(frame - lo - 1) * streams; }
};

void Engine::back_term(const Params& params, const StreamState& state,
                       const BackwardScratch& scratch, ConnectionId id, std::int64_t first,
                       std::size_t frames, MatrixView out) const {
  const auto& c = net_.connection(id);
  const std::size_t n = state.streams();
  const std::size_t cols = frames * n;
  const std::int64_t read_first = first + static_cast<std::int64_t>(c.delay);
  const Matrix& source = net_.layer(c.dst).aggregation == Aggregation::kAdditive
                             ? scratch.delta[c.dst]
                             : scratch.eps[id];
  ConstMatrixView e = source.view().columns(scratch.column(read_first), cols);
  Matrix masked_copy;
  if (c.delay > 0 &&
      state.any_reset_in(first + 1, read_first + static_cast<std::int64_t>(frames) - 1)) {
    masked_copy = to_matrix(e);
    for (std::size_t col = 0; col < cols; ++col) {
      const std::int64_t t = read_first + static_cast<std::int64_t>(col / n);
      if (!state.read_valid(col % n, t, c.delay))
        for (std::size_t r = 0; r < masked_copy.rows(); ++r) masked_copy(r, col) = 0.0;
    }
    e = masked_copy.view();
  }
  if (c.weight == WeightKind::kDense)
    gemm(params.weights[id].view(), Transpose::kYes, e, out, pool_.get());
  else
    add_into(e, out);
}

void Engine::backward_layer(const Params& params, const StreamState& state,
                            BackwardScratch& scratch, LayerId k, std::int64_t first,
                            std::size_t frames, const std::vector<const Matrix*>& back_cache) const {
  if (net_.anterior(k).empty()) return;
  const auto& layer = net_.layer(k);
  const std::size_t n = state.streams();
  const std::size_t cols = frames * n;
  const std::int64_t last = first + static_cast<std::int64_t>(frames) - 1;

  Matrix acc(layer.size, cols);
  Matrix term(layer.size, cols);
  const auto posterior = net_.posterior(k);
  for (auto id : posterior) {
    const std::int64_t reach = std::min(last, scratch.t1 - static_cast<std::int64_t>(net_.connection(id).delay));
    if (reach < first) continue;
    const std::size_t span_cols = as_size(reach - first + 1) * n;
    ConstMatrixView tv;
    if (!back_cache.empty() && back_cache[id]) {
      tv = back_cache[id]->view().columns(scratch.column(first), span_cols);
    } else {
      MatrixView t = term.view().columns(0, span_cols);
      fill(t, 0.0);
      back_term(params, state, scratch, id, first, as_size(reach - first + 1), t);
      tv = t;
    }
    add_into(tv, acc.view().columns(0, span_cols));
  }

  MatrixView delta = scratch.delta[k].view().columns(scratch.column(first), cols);
  if (!posterior.empty()) {
    Matrix deriv(layer.size, cols);
    activation_derivative(layer.activation, state.activations(k, first, frames), deriv.view());
    mul_into(deriv.view(), acc.view());
  }
  if (layer.role == Role::kOutput) {
    for (std::size_t col = 0; col < cols; ++col) {
      const std::int64_t t = first + static_cast<std::int64_t>(col / n);
      const bool injected = t >= scratch.first_injected;
      const std::size_t icol = injected ? as_size(t - scratch.first_injected) * n + col % n : 0;
      for (std::size_t r = 0; r < layer.size; ++r) {
        const double inj = injected ? (*scratch.injected[k])(r, icol) : 0.0;
        delta(r, col) = posterior.empty() ? inj : inj + acc(r, col);
      }
    }
  } else {
    copy(acc.view(), delta);
  }
  if (options_.check_finite) check_finite(delta, layer.name.c_str());

  if (layer.aggregation == Aggregation::kMultiplicative) {
    const auto anterior = net_.anterior(k);
    std::vector<Matrix> z;
    for (auto m : anterior) {
      z.emplace_back(layer.size, cols);
      connection_output(params, state, m, first, frames, z.back().view());
    }
    for (std::size_t i = 0; i < anterior.size(); ++i) {
      MatrixView e = scratch.eps[anterior[i]].view().columns(scratch.column(first), cols);
      copy(delta, e);
      for (std::size_t j = 0; j < anterior.size(); ++j)
        if (j != i) mul_into(z[j].view(), e);
    }
  }
}

GradStore Engine::backward_window(const Params& params, const StreamState& state,
                                  const BpttWindow& window,
                                  std::span<const Matrix> output_errors) const {
  window.check();
  if (params.weights.size() != net_.num_connections())
    throw ShapeError("params do not match the network");
  if (state.cursor() != window.t1)
    throw Error("window inconsistent: t1=" + std::to_string(window.t1) +
                " but the streams are at frame " + std::to_string(state.cursor()));
  const std::size_t n = state.streams();
  const auto outputs = net_.output_layers();
  if (output_errors.size() != outputs.size())
    throw ShapeError("backward_window: expected errors for " + std::to_string(outputs.size()) +
                     " output layers");

  BackwardScratch scratch;
  scratch.t1 = window.t1;
  scratch.lo = std::max<std::int64_t>(window.truncation_frame(), 0);
  scratch.frames = as_size(window.t1 - scratch.lo);
  scratch.streams = n;
  scratch.first_injected = window.first_injected();
  state.check_readable(scratch.lo + 1 - static_cast<std::int64_t>(net_.max_delay()),
                       scratch.frames + net_.max_delay());

  scratch.injected.assign(net_.num_layers(), nullptr);
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& e = output_errors[i];
    if (e.rows() != net_.layer(outputs[i]).size || e.cols() != window.h_prime * n)
      throw ShapeError("backward_window: output error " + std::to_string(i) + " has shape " +
                       std::to_string(e.rows()) + "x" + std::to_string(e.cols()));
    scratch.injected[outputs[i]] = &e;
  }
  const std::size_t cols = scratch.frames * n;
  scratch.delta.resize(net_.num_layers());
  for (const auto& l : net_.layers())
    if (!net_.anterior(l.id).empty()) scratch.delta[l.id] = Matrix(l.size, cols);
  scratch.eps.resize(net_.num_connections());
  for (const auto& c : net_.connections())
    if (net_.layer(c.dst).aggregation == Aggregation::kMultiplicative)
      scratch.eps[c.id] = Matrix(net_.layer(c.dst).size, cols);

  const std::int64_t first = scratch.lo + 1;
  const std::vector<const Matrix*> no_cache;
  if (options_.schedule == Schedule::kFrameParallel) {
    for (auto it = cg_.topo_order.rbegin(); it != cg_.topo_order.rend(); ++it) {
      const auto idx = *it;
      const auto& node = cg_.nodes[idx];
      if (node.kind == NodeKind::kSimple) {
        backward_layer(params, state, scratch, node.members.front(), first, scratch.frames, no_cache);
        continue;
      }
      // Errors arriving from later nodes are complete: fold them in one pass.
      std::vector<Matrix> storage(net_.num_connections());
      std::vector<const Matrix*> cache(net_.num_connections(), nullptr);
      for (auto k : node.members) {
        if (net_.anterior(k).empty()) continue;
        for (auto id : net_.posterior(k)) {
          const auto& c = net_.connection(id);
          if (cg_.node_of_layer[c.dst] == idx) continue;
          storage[id] = Matrix(net_.layer(k).size, cols);
          const std::int64_t reach = window.t1 - static_cast<std::int64_t>(c.delay);
          if (reach >= first)
            back_term(params, state, scratch, id, first, as_size(reach - first + 1),
                      storage[id].view().columns(0, as_size(reach - first + 1) * n));
          cache[id] = &storage[id];
        }
      }
      for (std::int64_t t = window.t1; t >= first; --t)
        for (auto k = node.internal_order.rbegin(); k != node.internal_order.rend(); ++k)
          backward_layer(params, state, scratch, *k, t, 1, cache);
    }
  } else {
    for (std::int64_t t = window.t1; t >= first; --t)
      for (auto it = cg_.topo_order.rbegin(); it != cg_.topo_order.rend(); ++it) {
        const auto& order = cg_.nodes[*it].internal_order;
        for (auto k = order.rbegin(); k != order.rend(); ++k)
          backward_layer(params, state, scratch, *k, t, 1, no_cache);
      }
  }

  // Gradients: per-stream partial sums over frames, merged in stream order.
  GradStore store = zero_grads(net_);
  store.contributions = window.h_prime * n;
  for (const auto& c : net_.connections()) {
    if (c.weight != WeightKind::kDense) continue;
    const Matrix& eps_all =
        net_.layer(c.dst).aggregation == Aggregation::kAdditive ? scratch.delta[c.dst] : scratch.eps[c.id];
    const auto& src = state.layers_[c.src];
    const std::int64_t read_first = first - static_cast<std::int64_t>(c.delay);
    const std::size_t base = state.frame_slot(src, read_first) * n;
    const bool masked = c.delay > 0 && state.any_reset_in(read_first + 1, window.t1);
    Matrix partial(net_.layer(c.dst).size, src.width);
    Matrix& total = store.grads[c.id];
    for (std::size_t s = 0; s < n; ++s) {
      partial.fill(0.0);
      ConstMatrixView e = eps_all.view().strided_columns(s, scratch.frames, n);
      auto valid = [&](std::size_t f) {
        return !masked || state.read_valid(s, first + static_cast<std::int64_t>(f), c.delay);
      };
      if (src.one_hot) {
        for (std::size_t f = 0; f < scratch.frames; ++f) {
          const std::size_t id = src.ids[base + f * n + s];
          if (id == kNoToken || !valid(f)) continue;
          for (std::size_t r = 0; r < partial.rows(); ++r) partial(r, id) += e(r, f);
        }
      } else {
        ConstMatrixView y = src.values.view().strided_columns(base + s, scratch.frames, n);
        Matrix masked_copy;
        if (masked) {
          masked_copy = to_matrix(y);
          for (std::size_t f = 0; f < scratch.frames; ++f)
            if (!valid(f))
              for (std::size_t r = 0; r < masked_copy.rows(); ++r) masked_copy(r, f) = 0.0;
          y = masked_copy.view();
        }
        gemm_nt(e, y, partial.view(), pool_.get());
      }
      add_into(partial.view(), total.view());
    }
  }
  return store;
}

}  // namespace rnngraph
