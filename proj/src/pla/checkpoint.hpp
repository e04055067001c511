#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pla/tensor.hpp"

namespace pla {

// Flat binary checkpoint: magic, config hash, then ordered
// (name, shape, raw 32-bit values) records. Native little-endian.
void save_checkpoint(
    const std::string& path, std::uint64_t config_hash,
    const std::vector<std::pair<std::string, DiffTensor<float>>>& params);

struct CheckpointRecord {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;
};

// Rejects files whose config hash differs from `expected_hash`.
std::vector<CheckpointRecord> load_checkpoint(const std::string& path,
                                              std::uint64_t expected_hash);

// Copies loaded records into the named parameters; names and shapes must
// match exactly.
void apply_checkpoint(
    const std::vector<CheckpointRecord>& records,
    std::vector<std::pair<std::string, DiffTensor<float>>> params);

}  // namespace pla
