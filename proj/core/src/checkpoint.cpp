#include "rnngraph/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace rnngraph {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

constexpr std::array<char, 8> kMagic{'R', 'N', 'N', 'G', 'C', 'K', 'P', 'T'};

class Fnv1a {
 public:
  void add(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void add_u64(std::uint64_t v) { add(&v, sizeof v); }
  void add_string(const std::string& s) {
    add_u64(s.size());
    add(s.data(), s.size());
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error("checkpoint: truncated file");
  return v;
}

}  // namespace

std::uint64_t network_hash(const NetworkDef& net) {
  Fnv1a h;
  h.add_u64(net.num_layers());
  for (const auto& l : net.layers()) {
    h.add_string(l.name);
    h.add_u64(l.size);
    h.add_u64(static_cast<std::uint64_t>(l.aggregation));
    h.add_u64(static_cast<std::uint64_t>(l.activation));
    h.add_u64(static_cast<std::uint64_t>(l.role));
  }
  h.add_u64(net.num_connections());
  for (const auto& c : net.connections()) {
    h.add_u64(c.src);
    h.add_u64(c.dst);
    h.add_u64(c.delay);
    h.add_u64(static_cast<std::uint64_t>(c.weight));
  }
  return h.value();
}

void save_checkpoint(std::ostream& out, const NetworkDef& net, const Params& params) {
  if (params.weights.size() != net.num_connections())
    throw ShapeError("checkpoint: params do not match the network");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, network_hash(net));
  std::uint32_t dense = 0;
  for (const auto& c : net.connections()) dense += c.weight == WeightKind::kDense;
  put<std::uint32_t>(out, dense);
  for (const auto& c : net.connections()) {
    if (c.weight != WeightKind::kDense) continue;
    const auto& w = params.weights[c.id];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.id));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(w.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(w.cols()));
    out.write(reinterpret_cast<const char*>(w.values().data()),
              static_cast<std::streamsize>(w.values().size_bytes()));
  }
  if (!out) throw Error("checkpoint: write failed");
}

void save_checkpoint(const std::filesystem::path& path, const NetworkDef& net,
                     const Params& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  save_checkpoint(out, net, params);
}

Params load_checkpoint(std::istream& in, const NetworkDef& net) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw Error("checkpoint: bad magic");
  if (get<std::uint32_t>(in) != kCheckpointVersion) throw Error("checkpoint: unsupported version");
  if (get<std::uint64_t>(in) != network_hash(net))
    throw Error("checkpoint: network hash mismatch (checkpoint was saved for a different network)");
  Params params = zero_params(net);
  const auto dense = get<std::uint32_t>(in);
  std::uint32_t expected = 0;
  for (const auto& c : net.connections()) expected += c.weight == WeightKind::kDense;
  if (dense != expected) throw Error("checkpoint: dense connection count mismatch");
  for (std::uint32_t i = 0; i < dense; ++i) {
    const auto id = get<std::uint32_t>(in);
    const auto rows = get<std::uint32_t>(in);
    const auto cols = get<std::uint32_t>(in);
    if (id >= net.num_connections() || net.connection(id).weight != WeightKind::kDense)
      throw Error("checkpoint: unexpected connection id " + std::to_string(id));
    auto& w = params.weights[id];
    if (w.rows() != rows || w.cols() != cols) throw Error("checkpoint: weight shape mismatch");
    if (!in.read(reinterpret_cast<char*>(w.values().data()),
                 static_cast<std::streamsize>(w.values().size_bytes())))
      throw Error("checkpoint: truncated file");
  }
  return params;
}

Params load_checkpoint(const std::filesystem::path& path, const NetworkDef& net) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  return load_checkpoint(in, net);
}

}  // namespace rnngraph
