#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "rnngraph/netdef.hpp"
#include "rnngraph/params.hpp"

namespace rnngraph {

/// Binary checkpoint layout (little-endian):
///
///   char[8]  magic "RNNGCKPT"
///   u32      version (1)
///   u64      FNV-1a hash of the layer/connection table
///   u32      number of Dense connections
///   per Dense connection, ascending id:
///     u32 connection id, u32 rows, u32 cols, rows*cols float64 row-major
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t network_hash(const NetworkDef& net);

void save_checkpoint(std::ostream& out, const NetworkDef& net, const Params& params);
void save_checkpoint(const std::filesystem::path& path, const NetworkDef& net, const Params& params);

/// Throws if the magic, version or network hash do not match `net`.
Params load_checkpoint(std::istream& in, const NetworkDef& net);
Params load_checkpoint(const std::filesystem::path& path, const NetworkDef& net);

}  // namespace rnngraph
