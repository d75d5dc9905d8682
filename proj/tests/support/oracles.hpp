#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the engine's forward/backward code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rnngraph/engine.hpp"
#include "rnngraph/netdef.hpp"
#include "rnngraph/params.hpp"

namespace oracle {

using rnngraph::Matrix;
using Edge = std::pair<std::size_t, std::size_t>;
using Vec = std::vector<double>;

// SCCs by pairwise reachability (Floyd-Warshall closure). Canonical form:
// each component sorted, components sorted by first element.
inline std::vector<std::vector<std::size_t>> brute_force_scc(std::size_t n,
                                                             const std::vector<Edge>& edges) {
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t v = 0; v < n; ++v) reach[v][v] = true;
  for (auto [a, b] : edges) reach[a][b] = true;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (reach[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = true;
  std::vector<bool> taken(n, false);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (taken[i]) continue;
    std::vector<std::size_t> comp;
    for (std::size_t j = i; j < n; ++j)
      if (reach[i][j] && reach[j][i]) {
        comp.push_back(j);
        taken[j] = true;
      }
    out.push_back(comp);
  }
  return out;
}

inline std::vector<std::vector<std::size_t>> canonical(std::vector<std::vector<std::size_t>> comps) {
  for (auto& c : comps) std::sort(c.begin(), c.end());
  std::sort(comps.begin(), comps.end());
  return comps;
}

// Kahn's algorithm; true when every vertex gets removed.
inline bool kahn_acyclic(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::size_t> indeg(n, 0);
  std::vector<std::vector<std::size_t>> out(n);
  for (auto [a, b] : edges) {
    out[a].push_back(b);
    ++indeg[b];
  }
  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  std::size_t removed = 0;
  while (!ready.empty()) {
    const auto v = ready.back();
    ready.pop_back();
    ++removed;
    for (auto w : out[v])
      if (--indeg[w] == 0) ready.push_back(w);
  }
  return removed == n;
}

// Random directed graph on n vertices; self loops allowed.
inline std::vector<Edge> random_edges(std::mt19937_64& rng, std::size_t n, double p) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (coin(rng)) edges.emplace_back(a, b);
  return edges;
}

// Hidden size-1 layers with every edge delayed, so any topology is valid.
inline rnngraph::NetworkDef network_from_edges(std::size_t n, const std::vector<Edge>& edges) {
  rnngraph::NetworkBuilder b;
  for (std::size_t v = 0; v < n; ++v)
    b.add_layer("v" + std::to_string(v), 1, rnngraph::Aggregation::kAdditive,
                rnngraph::Activation::kTanh, rnngraph::Role::kHidden);
  for (auto [a, c] : edges) b.connect(a, c, 1);
  return b.build();
}

inline const Matrix& weight(const rnngraph::NetworkDef& net, const rnngraph::Params& params,
                            const std::string& src, const std::string& dst) {
  const auto s = net.find_layer(src), d = net.find_layer(dst);
  if (!s || !d) throw std::logic_error("no layer " + src + " or " + dst);
  for (const auto& c : net.connections())
    if (c.src == *s && c.dst == *d) return params.weights[c.id];
  throw std::logic_error("no connection " + src + " -> " + dst);
}

inline Vec matvec(const Matrix& w, const Vec& x) {
  Vec out(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols(); ++c) acc += w(r, c) * x[c];
    out[r] = acc;
  }
  return out;
}

inline Vec bias_of(const Matrix& w) {
  Vec b(w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) b[r] = w(r, 0);
  return b;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec softmax(Vec s) {
  double m = s[0];
  for (double v : s) m = std::max(m, v);
  double z = 0.0;
  for (double& v : s) z += (v = std::exp(v - m));
  for (double& v : s) v /= z;
  return s;
}

// Column (frame t) of a (width, frames) single-stream batch.
inline Vec column(const Matrix& m, std::size_t t) {
  Vec v(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) v[r] = m(r, t);
  return v;
}

// Direct Elman recurrence with a tanh hidden layer and softmax output,
// bias included. Returns one output vector per frame.
inline std::vector<Vec> elman_forward(const rnngraph::NetworkDef& net, const rnngraph::Params& p,
                                      const Matrix& x) {
  const auto& wxh = weight(net, p, "input", "hidden");
  const auto& whh = weight(net, p, "hidden", "hidden");
  const auto& why = weight(net, p, "hidden", "output");
  const Vec bh = bias_of(weight(net, p, "bias", "hidden"));
  const Vec by = bias_of(weight(net, p, "bias", "output"));
  Vec h(whh.rows(), 0.0);
  std::vector<Vec> ys;
  for (std::size_t t = 0; t < x.cols(); ++t) {
    const Vec a = matvec(wxh, column(x, t));
    const Vec r = matvec(whh, h);
    Vec next(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) next[j] = std::tanh(a[j] + r[j] + bh[j]);
    h = next;
    Vec s = matvec(why, h);
    for (std::size_t j = 0; j < s.size(); ++j) s[j] += by[j];
    ys.push_back(softmax(s));
  }
  return ys;
}

struct LstmTrace {
  std::vector<Vec> cell;
  std::vector<Vec> hidden;
  std::vector<Vec> output;
};

// Textbook peephole LSTM with forget gate, written out gate by gate:
//   g = tanh(Wg x + bg)
//   i = sigm(Wi x + bi + Pi c(t-1))
//   f = sigm(Wf x + bf + Pf c(t-1))
//   c = g * i + f * c(t-1)
//   o = sigm(Wo x + bo + Po c(t))
//   h = o * tanh(c);  y = softmax(Wy h + by)
// With forget = false the cell update is c = c(t-1) + g * i; peepholes and
// bias can each be switched off.
inline LstmTrace lstm_forward(const rnngraph::NetworkDef& net, const rnngraph::Params& p,
                              const Matrix& x, bool peepholes, bool forget, bool bias) {
  const std::size_t n = net.layer(*net.find_layer("cell")).size;
  auto bias_for = [&](const char* dst) {
    return bias ? bias_of(weight(net, p, "bias", dst)) : Vec(net.layer(*net.find_layer(dst)).size, 0.0);
  };
  const Vec bg = bias_for("block_input"), bi = bias_for("input_gate"), bo = bias_for("output_gate");
  const Vec bf = forget ? bias_for("forget_gate") : Vec(n, 0.0);
  const Vec by = bias_for("output");
  Vec c(n, 0.0);
  LstmTrace trace;
  for (std::size_t t = 0; t < x.cols(); ++t) {
    const Vec xt = column(x, t);
    const Vec zg = matvec(weight(net, p, "input", "block_input"), xt);
    const Vec zi = matvec(weight(net, p, "input", "input_gate"), xt);
    const Vec zo = matvec(weight(net, p, "input", "output_gate"), xt);
    const Vec pi = peepholes ? matvec(weight(net, p, "cell", "input_gate"), c) : Vec(n, 0.0);
    Vec zf(n, 0.0), pf(n, 0.0);
    if (forget) {
      zf = matvec(weight(net, p, "input", "forget_gate"), xt);
      if (peepholes) pf = matvec(weight(net, p, "cell", "forget_gate"), c);
    }
    Vec next(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double g = std::tanh(zg[j] + bg[j]);
      const double i = sigmoid(zi[j] + bi[j] + pi[j]);
      if (forget) {
        const double f = sigmoid(zf[j] + bf[j] + pf[j]);
        next[j] = g * i + f * c[j];
      } else {
        next[j] = c[j] + g * i;
      }
    }
    c = next;
    const Vec po = peepholes ? matvec(weight(net, p, "cell", "output_gate"), c) : Vec(n, 0.0);
    Vec h(n);
    for (std::size_t j = 0; j < n; ++j) h[j] = sigmoid(zo[j] + bo[j] + po[j]) * std::tanh(c[j]);
    Vec s = matvec(weight(net, p, "hidden_product", "output"), h);
    for (std::size_t j = 0; j < s.size(); ++j) s[j] += by[j];
    trace.cell.push_back(c);
    trace.hidden.push_back(h);
    trace.output.push_back(net.layer(*net.find_layer("output")).activation ==
                                   rnngraph::Activation::kSoftmax
                               ? softmax(s)
                               : s);
  }
  return trace;
}

inline double max_abs_diff(const std::vector<Vec>& expected, const Matrix& got) {
  double worst = 0.0;
  for (std::size_t t = 0; t < expected.size(); ++t)
    for (std::size_t r = 0; r < expected[t].size(); ++r)
      worst = std::max(worst, std::abs(expected[t][r] - got(r, t)));
  return worst;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = u(rng);
  return m;
}

// Forward a single dense-input sequence through the engine in one chunk.
inline std::vector<Matrix> run_sequence(const rnngraph::Engine& engine, const rnngraph::Params& p,
                                        const Matrix& x) {
  auto state = engine.make_state(1, x.cols());
  rnngraph::ChunkInput in;
  in.frames = x.cols();
  in.layers.push_back(rnngraph::LayerInput::from_dense(x));
  return engine.forward_chunk(p, state, in);
}

}  // namespace oracle
