#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "daal/survival.hpp"

namespace daal {

/// A saved model: `manifest.json` (method, dims, seed, block layout) plus
/// `params.bin`, the parameters as raw little-endian f32 in Model::blocks()
/// order with no header.
struct Checkpoint {
  Model model;
  std::uint64_t seed = 0;
  std::optional<double> risk_threshold;  // training-set median risk
};

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace daal
