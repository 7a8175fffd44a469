#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stnet/models.hpp"

namespace stnet {

// Layout: "STNET1", then per tensor: u32 name length, name bytes, u32 rank,
// rank × u32 extents, raw f32 values. All integers and floats little-endian.
std::vector<std::uint8_t> serialize_checkpoint(std::span<const NamedTensor> tensors);
std::vector<NamedTensor> parse_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace stnet
