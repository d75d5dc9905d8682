#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rnngraph/engine.hpp"
#include "rnngraph/netdef.hpp"

namespace rnngraph {

/// FLOP accounting that counts only parameter and gradient work: each
/// Dense R x C connection costs 2RC (forward product) + 2RC (transposed
/// error propagation) + 2RC (gradient outer product) = 6RC per frame.
/// Identity connections and element-wise operations count zero.
std::uint64_t count_flops(const NetworkDef& net, std::size_t frames, bool include_bias = true);

struct BenchRecord {
  std::size_t n_streams = 0;
  std::size_t h = 0;
  std::size_t h_prime = 0;
  std::size_t minibatch = 0;
  double seconds = 0.0;
  /// Forward frames processed per stream.
  std::size_t frames = 0;
  double words_per_sec = 0.0;
  std::uint64_t flops = 0;
  double gflops = 0.0;
};

struct BenchConfig {
  std::vector<std::size_t> streams{1};
  std::size_t minibatch = 1024;
  /// Minimum wall time per stream count; at least one iteration always runs.
  double duration_seconds = 1.0;
  std::size_t min_iterations = 1;
  std::size_t threads = 1;
  Schedule schedule = Schedule::kFrameParallel;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  bool include_bias_flops = true;
};

/// h' and h for one stream count: h' = minibatch / N, h = 2h'. Throws if
/// minibatch is not divisible by N.
std::pair<std::size_t, std::size_t> bench_window(std::size_t minibatch, std::size_t streams);

/// Timed training on synthetic tokens, one record per entry of
/// config.streams. The network needs one input and one softmax output.
std::vector<BenchRecord> run_bench(const NetworkDef& net, const BenchConfig& config);

std::string bench_csv_header();
std::string to_csv_row(const BenchRecord& r);

}  // namespace rnngraph
