#pragma once

#include <cstdint>
#include <string>

#include "graylearn/network.hpp"

namespace graylearn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Little-endian layout:
///   "GLCK" | u32 version | u32 layer count |
///   per layer: u32 rows | u32 cols | rows*cols f64 weights | rows f64 biases
std::string encode_checkpoint(const ModelParams& params);
ModelParams decode_checkpoint(const std::string& bytes);

void checkpoint_save(const ModelParams& params, const std::string& path);
ModelParams checkpoint_load(const std::string& path);

}  // namespace graylearn
