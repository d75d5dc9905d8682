#include "rnngraph/netdef_io.hpp"

#include <array>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace rnngraph {

namespace {

using nlohmann::json;

template <typename Enum, std::size_t N>
Enum parse_enum(const json& node, const std::string& where,
                const std::array<std::pair<std::string_view, Enum>, N>& table) {
  if (!node.is_string()) throw ParseError(where, "expected a string");
  const auto value = node.get<std::string>();
  for (const auto& [name, e] : table)
    if (name == value) return e;
  throw ParseError(where, "unknown value '" + value + "'");
}

constexpr std::array<std::pair<std::string_view, Aggregation>, 2> kAggregations{{
    {"additive", Aggregation::kAdditive},
    {"multiplicative", Aggregation::kMultiplicative},
}};
constexpr std::array<std::pair<std::string_view, Activation>, 4> kActivations{{
    {"identity", Activation::kIdentity},
    {"sigmoid", Activation::kSigmoid},
    {"tanh", Activation::kTanh},
    {"softmax", Activation::kSoftmax},
}};
constexpr std::array<std::pair<std::string_view, Role>, 3> kRoles{{
    {"input", Role::kInput},
    {"hidden", Role::kHidden},
    {"output", Role::kOutput},
}};
constexpr std::array<std::pair<std::string_view, WeightKind>, 2> kWeights{{
    {"dense", WeightKind::kDense},
    {"identity", WeightKind::kIdentity},
}};

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ParseError(where, "expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto k : allowed) known = known || item.key() == k;
    if (!known) throw ParseError(where + "/" + item.key(), "unknown key");
  }
  for (auto k : allowed)
    if (!obj.contains(std::string(k)))
      throw ParseError(where, "missing key '" + std::string(k) + "'");
}

std::size_t parse_count(const json& node, const std::string& where) {
  if (!node.is_number_integer() || node.get<long long>() < 0)
    throw ParseError(where, "expected a non-negative integer");
  return node.get<std::size_t>();
}

}  // namespace

NetworkDef load_network(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), e.what());
  }
  check_keys(doc, "", {"layers", "connections"});
  if (!doc["layers"].is_array()) throw ParseError("/layers", "expected an array");
  if (!doc["connections"].is_array()) throw ParseError("/connections", "expected an array");

  NetworkBuilder builder;
  std::vector<std::string> names;
  const auto& layers = doc["layers"];
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto where = "/layers/" + std::to_string(i);
    const auto& l = layers[i];
    check_keys(l, where, {"name", "size", "aggregation", "activation", "role"});
    if (!l["name"].is_string()) throw ParseError(where + "/name", "expected a string");
    names.push_back(l["name"].get<std::string>());
    builder.add_layer(names.back(), parse_count(l["size"], where + "/size"),
                      parse_enum(l["aggregation"], where + "/aggregation", kAggregations),
                      parse_enum(l["activation"], where + "/activation", kActivations),
                      parse_enum(l["role"], where + "/role", kRoles));
  }

  auto resolve = [&names](const json& node, const std::string& where) -> LayerId {
    if (!node.is_string()) throw ParseError(where, "expected a layer name");
    const auto name = node.get<std::string>();
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    throw ParseError(where, "unknown layer '" + name + "'");
  };

  const auto& connections = doc["connections"];
  for (std::size_t i = 0; i < connections.size(); ++i) {
    const auto where = "/connections/" + std::to_string(i);
    const auto& c = connections[i];
    check_keys(c, where, {"src", "dst", "delay", "weight"});
    builder.connect(resolve(c["src"], where + "/src"), resolve(c["dst"], where + "/dst"),
                    parse_count(c["delay"], where + "/delay"),
                    parse_enum(c["weight"], where + "/weight", kWeights));
  }

  auto net = builder.build();
  const auto report = validate(net);
  if (!report.ok()) {
    std::ostringstream msg;
    msg << "invalid network";
    for (const auto& v : report.violations) {
      msg << "\n  ";
      if (v.connection) msg << "/connections/" << *v.connection << ": ";
      else if (v.layer) msg << "/layers/" << *v.layer << ": ";
      msg << v.message;
    }
    throw SemanticError(msg.str());
  }
  return net;
}

NetworkDef load_network_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open network file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_network(buffer.str());
}

std::string save_network(const NetworkDef& net) {
  json doc;
  doc["layers"] = json::array();
  for (const auto& l : net.layers()) {
    doc["layers"].push_back({{"name", l.name},
                             {"size", l.size},
                             {"aggregation", to_string(l.aggregation)},
                             {"activation", to_string(l.activation)},
                             {"role", to_string(l.role)}});
  }
  doc["connections"] = json::array();
  for (const auto& c : net.connections()) {
    doc["connections"].push_back({{"src", net.layer(c.src).name},
                                  {"dst", net.layer(c.dst).name},
                                  {"delay", c.delay},
                                  {"weight", to_string(c.weight)}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace rnngraph
