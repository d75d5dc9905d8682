#include <benchmark/benchmark.h>

#include "rnngraph/builders.hpp"
#include "rnngraph/data.hpp"
#include "rnngraph/engine.hpp"
#include "rnngraph/params.hpp"
#include "rnngraph/trainer.hpp"

using namespace rnngraph;

namespace {

NetworkDef bench_net(bool lstm, std::size_t vocab, std::size_t hidden) {
  if (lstm) {
    LstmSpec s;
    s.n_in = vocab;
    s.n_cell = hidden;
    s.n_out = vocab;
    return build_lstm(s);
  }
  ElmanSpec s;
  s.n_in = vocab;
  s.n_hidden = hidden;
  s.n_out = vocab;
  return build_elman(s);
}

// One BPTT(2h'; h') SGD iteration with mini-batch N*h' = 64 tokens.
void run_steps(benchmark::State& state, bool lstm, Schedule schedule) {
  const auto streams = static_cast<std::size_t>(state.range(0));
  const std::size_t minibatch = 64, vocab = 200, hidden = 64;
  const NetworkDef net = bench_net(lstm, vocab, hidden);
  Engine engine(net, {1, schedule, false});
  Params params = init_params(net, 1);
  const auto seqs = synthetic_sequences(64, 8, 64, vocab, 1);
  TrainConfig tc;
  tc.streams = streams;
  tc.h_prime = minibatch / streams;
  tc.h = 2 * tc.h_prime;
  tc.lr = 1e-3;
  TrainSession session(engine, params, make_streams(seqs, streams, 1, vocab - 1), tc);
  for (auto _ : state) benchmark::DoNotOptimize(session.step().loss);
  state.counters["words/s"] = benchmark::Counter(static_cast<double>(minibatch),
                                                 benchmark::Counter::kIsIterationInvariantRate);
}

}  // namespace

static void BM_ElmanFrameParallel(benchmark::State& s) { run_steps(s, false, Schedule::kFrameParallel); }
static void BM_ElmanFrameSequential(benchmark::State& s) { run_steps(s, false, Schedule::kFrameSequential); }
static void BM_LstmFrameParallel(benchmark::State& s) { run_steps(s, true, Schedule::kFrameParallel); }
static void BM_LstmFrameSequential(benchmark::State& s) { run_steps(s, true, Schedule::kFrameSequential); }

BENCHMARK(BM_ElmanFrameParallel)->RangeMultiplier(4)->Range(1, 64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ElmanFrameSequential)->RangeMultiplier(4)->Range(1, 64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LstmFrameParallel)->RangeMultiplier(4)->Range(1, 64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LstmFrameSequential)->RangeMultiplier(4)->Range(1, 64)->Unit(benchmark::kMillisecond);
