#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rnngraph/bench.hpp"
#include "rnngraph/builders.hpp"
#include "rnngraph/checkpoint.hpp"
#include "rnngraph/condense.hpp"
#include "rnngraph/data.hpp"
#include "rnngraph/engine.hpp"
#include "rnngraph/gradcheck.hpp"
#include "rnngraph/netdef_io.hpp"
#include "rnngraph/params.hpp"
#include "rnngraph/thread_pool.hpp"
#include "rnngraph/trainer.hpp"

namespace {

using namespace rnngraph;

constexpr int kUsageExit = 2;
constexpr int kRuntimeExit = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Network source flags shared by every subcommand.
struct NetOptions {
  std::string net_file;
  std::string arch;
  std::vector<std::size_t> sizes;
  std::size_t cells = 0;
  bool no_peepholes = false;
  bool no_forget_gate = false;
  bool output_recurrence = false;
  bool no_bias = false;
  std::string output_activation = "softmax";

  void add_to(CLI::App* app) {
    auto* net = app->add_option("--net", net_file, "Network definition file (JSON)")
                    ->check(CLI::ExistingFile);
    auto* a = app->add_option("--arch", arch, "Built-in architecture")
                  ->check(CLI::IsMember({"elman", "lstm"}));
    net->excludes(a);
    app->add_option("--sizes", sizes, "Layer sizes in,hidden,out")->delimiter(',')->expected(1, 3);
    app->add_option("--cells", cells, "Hidden/cell count (overrides the middle size)");
    app->add_flag("--no-peepholes", no_peepholes, "LSTM without peephole connections");
    app->add_flag("--no-forget-gate", no_forget_gate, "LSTM without forget gate");
    app->add_flag("--output-recurrence", output_recurrence,
                  "LSTM with delayed connections from its output to block input and gates");
    app->add_flag("--no-bias", no_bias, "Omit the bias layer");
    app->add_option("--output-activation", output_activation, "Output layer activation")
        ->check(CLI::IsMember({"softmax", "identity"}));
  }

  bool given() const { return !net_file.empty() || !arch.empty(); }

  // in/out override the first and last size (used by train to match a vocabulary).
  NetworkDef build(std::size_t in_override = 0, std::size_t out_override = 0) const {
    if (!net_file.empty()) return load_network_file(net_file);
    if (arch.empty()) throw UsageError("one of --net or --arch is required");
    std::size_t n_in = 2, n_hidden = 3, n_out = 2;
    if (sizes.size() == 3) {
      n_in = sizes[0];
      n_hidden = sizes[1];
      n_out = sizes[2];
    } else if (sizes.size() == 1) {
      n_hidden = sizes[0];
    } else if (!sizes.empty()) {
      throw UsageError("--sizes takes one (hidden) or three (in,hidden,out) values");
    }
    if (cells) n_hidden = cells;
    if (in_override) n_in = in_override;
    if (out_override) n_out = out_override;
    const auto out_act = output_activation == "identity" ? Activation::kIdentity : Activation::kSoftmax;
    if (arch == "elman") {
      ElmanSpec s;
      s.n_in = n_in;
      s.n_hidden = n_hidden;
      s.n_out = n_out;
      s.output_activation = out_act;
      s.bias = !no_bias;
      return build_elman(s);
    }
    LstmSpec s;
    s.n_in = n_in;
    s.n_cell = n_hidden;
    s.n_out = n_out;
    s.peepholes = !no_peepholes;
    s.forget_gate = !no_forget_gate;
    s.output_recurrence = output_recurrence;
    s.output_activation = out_act;
    s.bias = !no_bias;
    return build_lstm(s);
  }
};

std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t flag_value) {
  if (opt->count()) return flag_value;
  if (const char* env = std::getenv("RNN_GRAPH_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("RNN_GRAPH_SEED is not an integer: ") + env);
    }
  }
  return 1;
}

std::size_t resolve_threads(std::size_t t) { return t == 0 ? ThreadPool::hardware_threads() : t; }

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
}

int cmd_validate(const NetOptions& o) {
  NetworkDef net;
  if (!o.net_file.empty()) {
    std::ifstream in(o.net_file);
    std::stringstream text;
    text << in.rdbuf();
    try {
      net = load_network(text.str());
    } catch (const ParseError& e) {
      std::cerr << o.net_file << ": " << e.what() << "\n";
      return kRuntimeExit;
    } catch (const SemanticError& e) {
      std::cerr << o.net_file << ": invalid network\n" << e.what() << "\n";
      return kRuntimeExit;
    }
  } else {
    net = o.build();
  }
  const auto report = validate(net);
  if (!report.ok()) {
    std::cerr << report.to_string();
    return kRuntimeExit;
  }
  std::cout << "ok: " << net.num_layers() << " layers, " << net.num_connections()
            << " connections, " << count_params(net) << " parameters, max delay "
            << net.max_delay() << "\n";
  return 0;
}

int cmd_export(const NetOptions& o, const std::string& out) {
  write_text(out, save_network(o.build()));
  return 0;
}

int cmd_condense(const NetOptions& o, bool dot, bool schedule) {
  const auto cg = condense(o.build());
  if (dot) {
    std::cout << export_dot(cg);
    return 0;
  }
  if (schedule) {
    std::cout << format_schedule(cg);
    return 0;
  }
  const auto& net = cg.source;
  std::cout << cg.nodes.size() << " supernodes, " << cg.num_recurrent() << " recurrent, "
            << cg.frontier_levels.size() << " levels\n";
  for (std::size_t i = 0; i < cg.nodes.size(); ++i) {
    const auto& node = cg.nodes[i];
    std::cout << "  [" << i << "] " << (node.kind == NodeKind::kRecurrent ? "recurrent" : "simple")
              << ":";
    for (auto k : node.internal_order) std::cout << " " << net.layer(k).name;
    std::cout << "\n";
  }
  return 0;
}

struct TrainFlags {
  std::string corpus;
  bool char_mode = false;
  std::size_t vocab_size = 10000;
  std::size_t streams = 1;
  std::size_t h = 0;
  std::size_t h_prime = 8;
  double lr = 0.1;
  std::size_t iterations = 100;
  std::size_t threads = 0;
  std::uint64_t seed = 1;
  std::size_t log_every = 10;
  bool reset_on_eos = false;
  std::string checkpoint;
  bool sequential = false;
};

int cmd_train(const NetOptions& o, const TrainFlags& f, std::uint64_t seed) {
  if (f.corpus.empty()) throw UsageError("train needs --corpus FILE");
  std::ifstream in(f.corpus);
  if (!in) throw Error("cannot open corpus " + f.corpus);
  const auto lines = read_corpus(in, f.char_mode ? TokenMode::kChar : TokenMode::kWord);
  std::vector<std::string> flat;
  for (const auto& l : lines) flat.insert(flat.end(), l.begin(), l.end());
  const Vocab vocab = build_vocab(flat, f.vocab_size);
  std::vector<Sequence> sequences;
  for (const auto& l : lines) sequences.push_back(vocab.encode(l));

  const NetworkDef net = o.net_file.empty() ? o.build(vocab.size(), vocab.size()) : o.build();
  const auto ins = net.input_layers();
  const auto outs = net.output_layers();
  if (ins.size() != 1 || outs.size() != 1 || net.layer(ins[0]).size != vocab.size() ||
      net.layer(outs[0]).size != vocab.size())
    throw Error("network input and output sizes must equal the vocabulary size " +
                std::to_string(vocab.size()));

  EngineOptions eo;
  eo.threads = resolve_threads(f.threads);
  eo.schedule = f.sequential ? Schedule::kFrameSequential : Schedule::kFrameParallel;
  Engine engine(net, eo);
  Params params = init_params(net, seed);
  TrainConfig tc;
  tc.streams = f.streams;
  tc.h_prime = f.h_prime;
  tc.h = f.h ? f.h : 2 * f.h_prime;
  tc.lr = f.lr;
  tc.iterations = f.iterations;
  tc.reset_on_sequence_boundary = f.reset_on_eos;

  std::printf("vocab %zu, %zu sequences, %zu parameters, BPTT(%zu; %zu), N=%zu, threads %zu\n",
              vocab.size(), sequences.size(), count_params(net), tc.h, tc.h_prime, tc.streams,
              eo.threads);
  double first = 0.0, window = 0.0;
  std::size_t in_window = 0;
  auto log = [&](const IterationMetrics& m) {
    if (m.iteration == 1) first = m.mean_loss;
    window += m.mean_loss;
    ++in_window;
    if (m.iteration % std::max<std::size_t>(f.log_every, 1) == 0 || m.iteration == tc.iterations) {
      std::printf("iter %6zu  loss %.5f  avg %.5f  %.0f words/s\n", m.iteration, m.mean_loss,
                  window / static_cast<double>(in_window), m.words_per_sec);
      std::fflush(stdout);
      window = 0.0;
      in_window = 0;
    }
  };
  const auto metrics =
      train_loop(engine, params, make_streams(sequences, tc.streams, seed, vocab.eos()), tc, log);
  if (!metrics.empty())
    std::printf("initial loss %.5f  final loss %.5f\n", first, metrics.back().mean_loss);
  if (!f.checkpoint.empty()) {
    save_checkpoint(std::filesystem::path(f.checkpoint), net, params);
    std::printf("checkpoint written to %s\n", f.checkpoint.c_str());
  }
  return 0;
}

int cmd_gradcheck(const NetOptions& o, std::size_t length, std::size_t streams,
                  double threshold, double step, std::uint64_t seed) {
  const NetworkDef net = o.build();
  Engine engine(net);
  const Params params = init_params(net, seed);
  const auto problem = random_problem(net, length, streams, seed);
  const auto report =
      compare(analytic_grad(engine, params, problem), numeric_grad(engine, params, problem, step),
              threshold);
  std::cout << format_report(report, net);
  return report.pass ? 0 : kRuntimeExit;
}

int cmd_bench(const NetOptions& o, const BenchConfig& config, const std::string& csv,
              bool include_bias_flops) {
  const NetworkDef net = o.build();
  BenchConfig c = config;
  c.include_bias_flops = include_bias_flops;
  for (auto n : c.streams) {
    try {
      bench_window(c.minibatch, n);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  const auto records = run_bench(net, c);
  std::ostringstream out;
  out << bench_csv_header() << "\n";
  for (const auto& r : records) out << to_csv_row(r) << "\n";
  write_text(csv, out.str());
  if (!csv.empty() && csv != "-") std::cout << out.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rnn-graph: graph-defined recurrent networks with truncated BPTT"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rnn-graph 0.1.0");

  NetOptions net_opts;
  std::uint64_t seed_flag = 1;
  std::size_t threads = 0;

  auto* validate_cmd = app.add_subcommand("validate", "Check a network definition");
  net_opts.add_to(validate_cmd);

  std::string export_out;
  auto* export_cmd = app.add_subcommand("export", "Write a network definition as JSON");
  net_opts.add_to(export_cmd);
  export_cmd->add_option("-o,--out", export_out, "Output file (default stdout)");

  bool dot = false, schedule = false;
  auto* condense_cmd = app.add_subcommand("condense", "Condense cycles into recurrent supernodes");
  net_opts.add_to(condense_cmd);
  auto* dot_opt = condense_cmd->add_flag("--dot", dot, "Print Graphviz DOT");
  condense_cmd->add_flag("--schedule", schedule, "Print topological order and frontier levels")
      ->excludes(dot_opt);

  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "Train a language model on a text corpus");
  train_cmd->set_help_flag("--help", "Print this help message and exit");
  net_opts.add_to(train_cmd);
  train_cmd->add_option("--corpus", tf.corpus, "UTF-8 text, one sequence per line")
      ->check(CLI::ExistingFile);
  train_cmd->add_flag("--char", tf.char_mode, "Character tokens instead of words");
  train_cmd->add_option("--vocab-size", tf.vocab_size, "Vocabulary cap (plus <unk> and <eos>)");
  train_cmd->add_option("--streams", tf.streams, "Parallel streams N")->check(CLI::PositiveNumber);
  train_cmd->add_option("--h", tf.h, "Unfolded frames h (default 2h')");
  train_cmd->add_option("--h-prime", tf.h_prime, "Frames advanced per iteration h'")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", tf.lr, "Learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--iterations", tf.iterations, "SGD iterations");
  auto* train_seed = train_cmd->add_option("--seed", seed_flag, "Seed (falls back to RNN_GRAPH_SEED)");
  train_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  train_cmd->add_option("--log-every", tf.log_every, "Print every k iterations");
  train_cmd->add_flag("--reset-on-eos", tf.reset_on_eos, "Restart stream context at <eos>");
  train_cmd->add_flag("--sequential", tf.sequential, "Frame-sequential schedule");
  train_cmd->add_option("--checkpoint", tf.checkpoint, "Write weights here after training");

  std::size_t gc_length = 12, gc_streams = 1;
  double gc_threshold = 1e-4, gc_step = 1e-5;
  auto* gradcheck_cmd =
      app.add_subcommand("gradcheck", "Compare backpropagated and finite-difference gradients");
  net_opts.add_to(gradcheck_cmd);
  gradcheck_cmd->add_option("--length", gc_length, "Sequence length")->check(CLI::PositiveNumber);
  gradcheck_cmd->add_option("--streams", gc_streams, "Streams")->check(CLI::PositiveNumber);
  gradcheck_cmd->add_option("--threshold", gc_threshold, "Max relative error");
  gradcheck_cmd->add_option("--step", gc_step, "Central difference step");
  auto* gc_seed = gradcheck_cmd->add_option("--seed", seed_flag, "Seed (falls back to RNN_GRAPH_SEED)");

  BenchConfig bc;
  std::string csv;
  bool no_bias_flops = false;
  bool bench_sequential = false;
  auto* bench_cmd = app.add_subcommand(
      "bench",
      "Timed training on synthetic tokens. FLOPs count 6*R*C per Dense RxC connection per frame "
      "(forward product, error propagation, gradient accumulation); identity connections and "
      "element-wise work count zero.");
  net_opts.add_to(bench_cmd);
  bench_cmd->add_option("--streams", bc.streams, "Stream counts, e.g. 1,2,4,8")->delimiter(',');
  bench_cmd->add_option("--minibatch", bc.minibatch, "Mini-batch N*h'")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--duration", bc.duration_seconds, "Seconds per stream count");
  bench_cmd->add_option("--min-iterations", bc.min_iterations, "Iterations per stream count");
  bench_cmd->add_option("--lr", bc.lr, "Learning rate")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  bench_cmd->add_flag("--sequential", bench_sequential, "Frame-sequential schedule");
  bench_cmd->add_flag("--exclude-bias-flops", no_bias_flops, "Do not count bias weights");
  bench_cmd->add_option("--csv", csv, "Write CSV here (default stdout)");
  auto* bench_seed = bench_cmd->add_option("--seed", seed_flag, "Seed (falls back to RNN_GRAPH_SEED)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;
  }

  try {
    if (*validate_cmd) return cmd_validate(net_opts);
    if (*export_cmd) return cmd_export(net_opts, export_out);
    if (*condense_cmd) return cmd_condense(net_opts, dot, schedule);
    if (*train_cmd) return cmd_train(net_opts, tf, resolve_seed(train_seed, seed_flag));
    if (*gradcheck_cmd)
      return cmd_gradcheck(net_opts, gc_length, gc_streams, gc_threshold, gc_step,
                           resolve_seed(gc_seed, seed_flag));
    if (*bench_cmd) {
      bc.threads = resolve_threads(threads);
      bc.schedule = bench_sequential ? Schedule::kFrameSequential : Schedule::kFrameParallel;
      bc.seed = resolve_seed(bench_seed, seed_flag);
      return cmd_bench(net_opts, bc, csv, !no_bias_flops);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeExit;
  }
  return kUsageExit;
}
