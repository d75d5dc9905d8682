#include "rnngraph/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace rnngraph {

SequenceProblem random_problem(const NetworkDef& net, std::size_t frames, std::size_t streams,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  SequenceProblem p;
  p.streams = streams;
  p.input.frames = frames;
  for (auto k : net.input_layers()) {
    Matrix m(net.layer(k).size, frames * streams);
    for (auto& v : m.values()) v = value(rng);
    p.input.layers.push_back(LayerInput::from_dense(std::move(m)));
  }
  for (auto k : net.output_layers()) {
    const auto& layer = net.layer(k);
    if (criterion_for(layer.activation) == Criterion::kCrossEntropySoftmax) {
      std::uniform_int_distribution<std::size_t> cls(0, layer.size - 1);
      std::vector<std::size_t> ids(frames * streams);
      for (auto& id : ids) id = cls(rng);
      p.targets.push_back(Target::from_ids(std::move(ids)));
    } else {
      Matrix m(layer.size, frames * streams);
      for (auto& v : m.values()) v = value(rng);
      p.targets.push_back(Target::from_dense(std::move(m)));
    }
  }
  return p;
}

namespace {

std::vector<Matrix> run_forward(const Engine& engine, const Params& params,
                                const SequenceProblem& problem, StreamState& state) {
  state = engine.make_state(problem.streams, problem.input.frames, problem.one_hot_inputs);
  return engine.forward_chunk(params, state, problem.input);
}

}  // namespace

double total_loss(const Engine& engine, const Params& params, const SequenceProblem& problem) {
  StreamState state;
  const auto outputs = run_forward(engine, params, problem, state);
  const auto layers = engine.network().output_layers();
  double total = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i)
    total += output_loss(problem.targets[i], outputs[i],
                         criterion_for(engine.network().layer(layers[i]).activation));
  return total;
}

GradStore analytic_grad(const Engine& engine, const Params& params, const SequenceProblem& problem) {
  StreamState state;
  const auto outputs = run_forward(engine, params, problem, state);
  const auto layers = engine.network().output_layers();
  std::vector<Matrix> errors;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto act = engine.network().layer(layers[i]).activation;
    errors.push_back(inject_output_error(problem.targets[i], outputs[i], criterion_for(act), act));
  }
  const BpttWindow window{problem.input.frames, problem.input.frames, state.cursor()};
  return engine.backward_window(params, state, window, errors);
}

GradStore numeric_grad(const Engine& engine, const Params& params, const SequenceProblem& problem,
                       double step) {
  const auto& net = engine.network();
  GradStore out = zero_grads(net);
  out.contributions = problem.input.frames * problem.streams;
  Params probe = params;
  for (const auto& c : net.connections()) {
    if (c.weight != WeightKind::kDense) continue;
    auto w = probe.weights[c.id].values();
    auto g = out.grads[c.id].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + step;
      const double up = total_loss(engine, probe, problem);
      w[i] = saved - step;
      const double down = total_loss(engine, probe, problem);
      w[i] = saved;
      g[i] = -(up - down) / (2.0 * step);
    }
  }
  return out;
}

double GradReport::max_rel() const {
  double worst = 0.0;
  for (const auto& c : connections) worst = std::max(worst, c.max_rel);
  return worst;
}

GradReport compare(const GradStore& analytic, const GradStore& numeric, double threshold) {
  if (analytic.grads.size() != numeric.grads.size())
    throw ShapeError("compare: connection count mismatch");
  GradReport report;
  report.threshold = threshold;
  for (std::size_t m = 0; m < analytic.grads.size(); ++m) {
    const auto& a = analytic.grads[m];
    const auto& n = numeric.grads[m];
    if (a.rows() != n.rows() || a.cols() != n.cols())
      throw ShapeError("compare: shape mismatch on connection " + std::to_string(m));
    if (a.empty()) continue;
    ConnectionError e;
    e.connection = m;
    const auto av = a.values(), nv = n.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
      const double diff = std::abs(av[i] - nv[i]);
      const double scale = std::max({std::abs(av[i]), std::abs(nv[i]), 1e-8});
      e.max_abs = std::max(e.max_abs, diff);
      e.max_rel = std::max(e.max_rel, diff / scale);
    }
    e.pass = e.max_rel < threshold;
    report.pass = report.pass && e.pass;
    report.connections.push_back(e);
  }
  return report;
}

std::string format_report(const GradReport& report, const NetworkDef& net) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-4s %-16s %-16s %9s %12s %12s  %s\n", "id", "src", "dst",
                "shape", "max_rel", "max_abs", "status");
  out << line;
  for (const auto& e : report.connections) {
    const auto& c = net.connection(e.connection);
    const std::string shape =
        std::to_string(net.layer(c.dst).size) + "x" + std::to_string(net.layer(c.src).size);
    std::snprintf(line, sizeof line, "%-4zu %-16s %-16s %9s %12.3e %12.3e  %s\n", e.connection,
                  net.layer(c.src).name.c_str(), net.layer(c.dst).name.c_str(), shape.c_str(),
                  e.max_rel, e.max_abs, e.pass ? "ok" : "FAIL");
    out << line;
  }
  std::snprintf(line, sizeof line, "max relative error %.3e (threshold %.1e): %s\n",
                report.max_rel(), report.threshold, report.pass ? "PASS" : "FAIL");
  out << line;
  return out.str();
}

}  // namespace rnngraph
