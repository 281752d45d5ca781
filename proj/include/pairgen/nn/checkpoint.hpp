#pragma once

#include <filesystem>

#include "pairgen/nn/parameters.hpp"

namespace pairgen::nn {

inline constexpr int kCheckpointVersion = 1;

// Text header (format_version, config as key=value, blank line), then per
// parameter: name line, "rows cols" line, row-major little-endian float32.
void save_checkpoint(const Model<float>& model, const std::filesystem::path& path);

// Rejects unknown versions, unknown config keys and missing or misshapen parameters.
Model<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace pairgen::nn
