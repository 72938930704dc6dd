#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spikecpc {

/// Versioned binary checkpoint container: a manifest of named float64 arrays.
/// Layout (all integers and floats little-endian):
///   8 bytes  magic "SPKCKPT1"
///   u32      entry count
///   per entry: u32 name length, name bytes, u32 ndims, ndims x u32 dims
///   per entry, in manifest order: numel x f64 payload
struct CheckpointEntry {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;
};

void write_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> read_checkpoint(const std::string& path);

/// Lookup by name; throws IoError when absent.
const CheckpointEntry& checkpoint_entry(const std::vector<CheckpointEntry>& entries,
                                        const std::string& name);

}  // namespace spikecpc
