#include "rnngraph/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "rnngraph/data.hpp"
#include "rnngraph/params.hpp"
#include "rnngraph/trainer.hpp"

namespace rnngraph {

std::uint64_t count_flops(const NetworkDef& net, std::size_t frames, bool include_bias) {
  std::uint64_t per_frame = 0;
  for (const auto& c : net.connections()) {
    if (c.weight != WeightKind::kDense) continue;
    if (!include_bias && net.is_constant_layer(c.src)) continue;
    per_frame += 6ULL * net.layer(c.dst).size * net.layer(c.src).size;
  }
  return per_frame * frames;
}

std::pair<std::size_t, std::size_t> bench_window(std::size_t minibatch, std::size_t streams) {
  if (streams < 1 || minibatch < 1 || minibatch % streams != 0)
    throw Error("mini-batch " + std::to_string(minibatch) + " is not divisible by " +
                std::to_string(streams) + " streams");
  const std::size_t h_prime = minibatch / streams;
  return {h_prime, 2 * h_prime};
}

std::vector<BenchRecord> run_bench(const NetworkDef& net, const BenchConfig& config) {
  for (auto n : config.streams) bench_window(config.minibatch, n);
  const auto inputs = net.input_layers();
  const auto outputs = net.output_layers();
  if (inputs.size() != 1 || outputs.size() != 1) throw Error("bench needs one input and one output layer");
  const std::size_t vocab = std::min(net.layer(inputs.front()).size, net.layer(outputs.front()).size);

  Engine engine(net, {config.threads, config.schedule, false});
  std::vector<BenchRecord> records;
  for (auto n : config.streams) {
    const auto [h_prime, h] = bench_window(config.minibatch, n);
    const auto sequences = synthetic_sequences(std::max<std::size_t>(4 * n, 16), 8, 64, vocab,
                                               config.seed);
    auto tapes = make_streams(sequences, n, config.seed, vocab - 1);
    Params params = init_params(net, config.seed);
    TrainConfig tc;
    tc.streams = n;
    tc.h = h;
    tc.h_prime = h_prime;
    tc.lr = config.lr;
    TrainSession session(engine, params, std::move(tapes), tc);

    // One untimed iteration warms allocations and the history buffers.
    session.step();
    std::size_t iterations = 0;
    const auto start = std::chrono::steady_clock::now();
    double elapsed = 0.0;
    do {
      session.step();
      ++iterations;
      elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    } while (iterations < config.min_iterations || elapsed < config.duration_seconds);

    BenchRecord r;
    r.n_streams = n;
    r.h = h;
    r.h_prime = h_prime;
    r.minibatch = h_prime * n;
    r.seconds = elapsed;
    r.frames = iterations * h_prime;
    r.words_per_sec = static_cast<double>(r.frames * n) / elapsed;
    r.flops = count_flops(net, r.frames * n, config.include_bias_flops);
    r.gflops = static_cast<double>(r.flops) / elapsed * 1e-9;
    records.push_back(r);
  }
  return records;
}

std::string bench_csv_header() {
  return "n_streams,h,h_prime,minibatch,seconds,frames,words_per_sec,flops,gflops";
}

std::string to_csv_row(const BenchRecord& r) {
  char line[256];
  std::snprintf(line, sizeof line, "%zu,%zu,%zu,%zu,%.6f,%zu,%.3f,%llu,%.6f", r.n_streams, r.h,
                r.h_prime, r.minibatch, r.seconds, r.frames, r.words_per_sec,
                static_cast<unsigned long long>(r.flops), r.gflops);
  return line;
}

}  // namespace rnngraph
