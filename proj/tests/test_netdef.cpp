#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "rnngraph/builders.hpp"
#include "rnngraph/netdef.hpp"
#include "rnngraph/netdef_io.hpp"

using namespace rnngraph;

namespace {

using enum Aggregation;

NetworkDef two_layer(std::size_t a, std::size_t b, WeightKind w) {
  NetworkBuilder nb;
  const auto x = nb.add_layer("x", a, kAdditive, Activation::kIdentity, Role::kInput);
  const auto y = nb.add_layer("y", b, kAdditive, Activation::kIdentity, Role::kOutput);
  nb.connect(x, y, 0, w);
  return nb.build();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Validate, ZeroDelaySelfLoopIsAlgebraicLoop) {
  NetworkBuilder nb;
  const auto x = nb.add_layer("x", 2, kAdditive, Activation::kIdentity, Role::kInput);
  const auto h = nb.add_layer("h", 2, kAdditive, Activation::kTanh, Role::kOutput);
  nb.connect(x, h);
  nb.connect(h, h, 0);
  const auto report = validate(nb.build());
  ASSERT_FALSE(report.ok());
  EXPECT_TRUE(report.has(ViolationKind::kAlgebraicLoop));
  EXPECT_NE(report.to_string().find("algebraic loop"), std::string::npos);
}

TEST(Validate, ZeroDelayCycleThroughTwoLayers) {
  NetworkBuilder nb;
  const auto x = nb.add_layer("x", 2, kAdditive, Activation::kIdentity, Role::kInput);
  const auto a = nb.add_layer("a", 2, kAdditive, Activation::kTanh, Role::kHidden);
  const auto b = nb.add_layer("b", 2, kAdditive, Activation::kTanh, Role::kOutput);
  nb.connect(x, a);
  nb.connect(a, b);
  nb.connect(b, a);
  EXPECT_TRUE(validate(nb.build()).has(ViolationKind::kAlgebraicLoop));

  NetworkBuilder ok;
  ok.add_layer("x", 2, kAdditive, Activation::kIdentity, Role::kInput);
  ok.add_layer("a", 2, kAdditive, Activation::kTanh, Role::kHidden);
  ok.add_layer("b", 2, kAdditive, Activation::kTanh, Role::kOutput);
  ok.connect(0, 1);
  ok.connect(1, 2);
  ok.connect(2, 1, 1);
  EXPECT_TRUE(validate(ok.build()).ok());
}

TEST(Validate, IdentitySizeMismatch) {
  const auto report = validate(two_layer(3, 4, WeightKind::kIdentity));
  ASSERT_TRUE(report.has(ViolationKind::kSizeMismatch));
  EXPECT_NE(report.to_string().find("size mismatch"), std::string::npos);
  EXPECT_TRUE(validate(two_layer(3, 4, WeightKind::kDense)).ok());
}

TEST(Validate, BuilderLstmIsValid) {
  EXPECT_TRUE(validate(build_lstm({})).ok());
  LstmSpec s;
  s.n_cell = 4;
  s.output_recurrence = true;
  EXPECT_TRUE(validate(build_lstm(s)).ok());
}

TEST(Validate, StructuralViolations) {
  EXPECT_TRUE(validate(NetworkDef{}).has(ViolationKind::kEmptyNetwork));

  NetworkBuilder nb;
  nb.add_layer("x", 2, kAdditive, Activation::kIdentity, Role::kInput);
  nb.add_layer("x", 0, kMultiplicative, Activation::kTanh, Role::kOutput);
  nb.add_layer("s", 2, kAdditive, Activation::kSoftmax, Role::kHidden);
  nb.connect(1, 0);
  const auto r = validate(nb.build());
  EXPECT_TRUE(r.has(ViolationKind::kDuplicateName));
  EXPECT_TRUE(r.has(ViolationKind::kInvalidSize));
  EXPECT_TRUE(r.has(ViolationKind::kMultiplicativeActivation));
  EXPECT_TRUE(r.has(ViolationKind::kSoftmaxNotOutput));
  EXPECT_TRUE(r.has(ViolationKind::kInputHasAnterior));
  EXPECT_TRUE(r.has(ViolationKind::kOutputWithoutAnterior));

  NetworkDef dangling({{0, "x", 1, kAdditive, Activation::kIdentity, Role::kInput}},
                      {{0, 0, 5, 0, WeightKind::kDense}});
  EXPECT_TRUE(validate(dangling).has(ViolationKind::kDanglingReference));
  EXPECT_THROW(require_valid(dangling), SemanticError);
}

TEST(InferShapes, DenseAndIdentity) {
  const auto dense = infer_shapes(two_layer(512, 20000, WeightKind::kDense));
  EXPECT_EQ(dense[0], (WeightShape{20000, 512, false}));
  const auto ident = infer_shapes(two_layer(7, 7, WeightKind::kIdentity));
  EXPECT_EQ(ident[0], (WeightShape{7, 7, true}));
}

TEST(InferShapes, LstmGateInputs) {
  LstmSpec s;
  s.n_in = 5;
  s.n_cell = 4;
  const auto net = build_lstm(s);
  const auto shapes = infer_shapes(net);
  const auto x = *net.find_layer("input");
  int gates = 0;
  for (const auto& c : net.connections())
    if (c.src == x) {
      EXPECT_EQ(shapes[c.id], (WeightShape{4, 5, false}));
      ++gates;
    }
  EXPECT_EQ(gates, 4);
}

TEST(InferShapes, InvalidNetworkThrows) {
  EXPECT_THROW(infer_shapes(two_layer(3, 4, WeightKind::kIdentity)), SemanticError);
}

TEST(NetworkDef, AnteriorPosteriorSorted) {
  const auto net = build_elman({2, 3, 2});
  const auto h = *net.find_layer("hidden");
  const auto ant = net.anterior(h);
  EXPECT_TRUE(std::is_sorted(ant.begin(), ant.end()));
  EXPECT_EQ(ant.size(), 3u);
  EXPECT_EQ(net.posterior(h).size(), 2u);
  EXPECT_EQ(net.max_delay(), 1u);
  EXPECT_TRUE(net.is_constant_layer(*net.find_layer("bias")));
  EXPECT_FALSE(net.is_constant_layer(h));
}

TEST(NetworkIo, ElmanRoundTrip) {
  ElmanSpec s{2, 3, 2};
  s.bias = false;
  const auto net = build_elman(s);
  const auto loaded = load_network(save_network(net));
  EXPECT_EQ(loaded.num_layers(), 3u);
  EXPECT_EQ(loaded.num_connections(), 3u);
  EXPECT_EQ(loaded, net);

  const auto lstm = build_lstm({});
  EXPECT_EQ(load_network(save_network(lstm)), lstm);
}

TEST(NetworkIo, FixtureFileLoads) {
  const auto net = load_network_file(RNNGRAPH_TEST_DATA "/elman.json");
  EXPECT_EQ(net, build_elman({2, 3, 2}));
}

TEST(NetworkIo, EmptyLayerListIsSemanticError) {
  EXPECT_THROW(load_network(R"({"layers": [], "connections": []})"), SemanticError);
}

TEST(NetworkIo, UnknownActivationIsParseError) {
  const char* doc = R"({"layers": [{"name": "x", "size": 2, "aggregation": "additive",
                        "activation": "relu", "role": "input"}], "connections": []})";
  try {
    load_network(doc);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), "/layers/0/activation");
  }
}

TEST(NetworkIo, ParseErrorLocations) {
  auto location = [](const char* doc) {
    try {
      load_network(doc);
    } catch (const ParseError& e) {
      return e.location();
    }
    return std::string("no error");
  };
  EXPECT_EQ(location(R"({"layers": [], "connections": [], "extra": 1})"), "/extra");
  EXPECT_EQ(location(R"({"layers": {}, "connections": []})"), "/layers");
  EXPECT_EQ(location(R"({"layers": [{"name": "x", "size": -1, "aggregation": "additive",
                        "activation": "identity", "role": "input"}], "connections": []})"),
            "/layers/0/size");
  EXPECT_EQ(location(R"({"layers": [{"name": "x", "size": 1, "aggregation": "additive",
                        "activation": "identity", "role": "input"}],
                        "connections": [{"src": "x", "dst": "nope", "delay": 0, "weight": "dense"}]})"),
            "/connections/0/dst");
  EXPECT_NE(location("{not json"), "no error");
}

TEST(NetworkIo, SemanticErrorNamesConnection) {
  try {
    load_network(read_file(RNNGRAPH_TEST_DATA "/algebraic_loop.json"));
    FAIL() << "expected SemanticError";
  } catch (const SemanticError& e) {
    EXPECT_NE(std::string(e.what()).find("algebraic loop"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("/layers/1"), std::string::npos);
  }
}
