#pragma once

#include <string>
#include <utility>
#include <vector>

#include "racnn/tensor.hpp"

namespace racnn {

// Parameter checkpoint file. Layout:
//   magic "RACNN1"
//   per tensor: name length (LE u64), name bytes (UTF-8), rank (LE u64),
//               extents (LE u64 each), values (LE f32 each, row-major)
// Values are stored as 32-bit floats; a save/load/save cycle is bit-exact.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& tensors);

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path);

// Loads into existing tensors matched by name; every destination name must be
// present with identical extents.
void load_checkpoint_into(const std::string& path,
                          std::vector<std::pair<std::string, Tensor>> dests);

}  // namespace racnn
