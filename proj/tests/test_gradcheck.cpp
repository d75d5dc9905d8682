#include <gtest/gtest.h>

#include "rnngraph/builders.hpp"
#include "rnngraph/gradcheck.hpp"

using namespace rnngraph;

namespace {

// y = w * x with an identity output and squared error: E = 0.5 (d - w x)^2.
NetworkDef scalar_net() {
  NetworkBuilder nb;
  const auto x = nb.add_layer("x", 1, Aggregation::kAdditive, Activation::kIdentity, Role::kInput);
  const auto y = nb.add_layer("y", 1, Aggregation::kAdditive, Activation::kIdentity, Role::kOutput);
  nb.connect(x, y);
  return nb.build();
}

}  // namespace

TEST(NumericGrad, ScalarQuadratic) {
  const auto net = scalar_net();
  Engine engine(net);
  Params p = zero_params(net);
  p.weights[0](0, 0) = 0.7;
  SequenceProblem problem;
  problem.input.frames = 1;
  problem.input.layers.push_back(LayerInput::from_dense(Matrix(1, 1, 1.5)));
  problem.targets.push_back(Target::from_dense(Matrix(1, 1, 0.0)));
  // With d = 0: E = 0.5 w^2 x^2, dE/dw = w x^2; the store holds -dE/dw.
  const GradStore numeric = numeric_grad(engine, p, problem);
  EXPECT_NEAR(numeric.grads[0](0, 0), -0.7 * 1.5 * 1.5, 1e-8);
  EXPECT_NEAR(analytic_grad(engine, p, problem).grads[0](0, 0), -0.7 * 1.5 * 1.5, 1e-15);
}

TEST(Compare, IdenticalAndPerturbed) {
  const auto net = build_elman({2, 3, 2});
  Engine engine(net);
  const auto p = init_params(net, 3);
  const auto problem = random_problem(net, 5, 1, 4);
  const auto g = analytic_grad(engine, p, problem);
  const auto same = compare(g, g);
  EXPECT_TRUE(same.pass);
  EXPECT_EQ(same.max_rel(), 0.0);
  EXPECT_EQ(same.connections.size(), 5u);

  GradStore bad = g;
  bad.grads[1](2, 1) += 1.0;
  const auto report = compare(g, bad);
  EXPECT_FALSE(report.pass);
  for (const auto& c : report.connections) EXPECT_EQ(c.pass, c.connection != 1) << c.connection;
  EXPECT_NE(format_report(report, net).find("FAIL"), std::string::npos);

  GradStore wrong_shape = g;
  wrong_shape.grads[0] = Matrix(1, 1);
  EXPECT_THROW(compare(g, wrong_shape), ShapeError);
}

TEST(GradCheck, BuilderNetworks) {
  std::vector<NetworkDef> nets{build_elman({2, 3, 2}), build_lstm({3, 3, 3}), build_lstm({2, 4, 3})};
  LstmSpec s{3, 3, 2};
  s.output_recurrence = true;
  s.output_activation = Activation::kIdentity;
  nets.push_back(build_lstm(s));
  s = LstmSpec{2, 2, 2};
  s.forget_gate = false;
  s.output_peephole_delay = 1;
  nets.push_back(build_lstm(s));
  for (const auto& net : nets) {
    Engine engine(net);
    for (std::uint64_t seed : {1, 2}) {
      const auto p = init_params(net, seed);
      const auto problem = random_problem(net, 10, 2, seed + 100);
      const auto report = compare(analytic_grad(engine, p, problem), numeric_grad(engine, p, problem));
      EXPECT_TRUE(report.pass) << format_report(report, net);
    }
  }
}

TEST(GradCheck, SignStepDecreasesLoss) {
  const auto net = build_lstm({3, 3, 3});
  Engine engine(net);
  int decreased = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Params p = init_params(net, trial);
    const auto problem = random_problem(net, 6, 1, 1000 + trial);
    const double before = total_loss(engine, p, problem);
    sgd_update(p, analytic_grad(engine, p, problem), 1e-3);
    decreased += total_loss(engine, p, problem) < before;
  }
  EXPECT_EQ(decreased, 100);
}

TEST(GradCheck, ReportFormat) {
  const auto net = build_elman({2, 3, 2});
  Engine engine(net);
  const auto p = init_params(net, 1);
  const auto problem = random_problem(net, 4, 1, 1);
  const auto text = format_report(compare(analytic_grad(engine, p, problem), numeric_grad(engine, p, problem)), net);
  EXPECT_EQ(text.rfind("id", 0), 0u);
  EXPECT_NE(text.find("input            hidden"), std::string::npos);
  EXPECT_NE(text.find("PASS"), std::string::npos);
}
