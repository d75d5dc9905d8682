#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "rnngraph/netdef.hpp"

namespace rnngraph {

/// Malformed network document. `location` is a JSON pointer into the
/// document (or a byte offset for syntax errors).
class ParseError : public Error {
 public:
  ParseError(std::string location, const std::string& what)
      : Error(location + ": " + what), location_(std::move(location)) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

/// Network description document:
///
///   {
///     "layers": [{"name": "x", "size": 2, "aggregation": "additive",
///                 "activation": "identity", "role": "input"}, ...],
///     "connections": [{"src": "x", "dst": "h", "delay": 0,
///                      "weight": "dense"}, ...]
///   }
///
/// Layers are referenced by name; unknown keys are rejected. The loaded
/// network is validated and a SemanticError names the offending entries.
NetworkDef load_network(std::string_view text);
NetworkDef load_network_file(const std::filesystem::path& path);

std::string save_network(const NetworkDef& net);

}  // namespace rnngraph
