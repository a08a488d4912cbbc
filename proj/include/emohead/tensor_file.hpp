#pragma once

// SERT tensor container.
//
//   offset  size       field
//   0       4          magic "SERT"
//   4       1          format version (1)
//   5       1          dtype code (1 = float32)
//   6       1          rank r (1..3)
//   7       4*r        dims, uint32 little-endian, each > 0
//   7+4r    4*prod     payload, float32 little-endian, row-major
//
// No padding, no trailer.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "emohead/tensor.hpp"

namespace emohead {

inline constexpr char kTensorMagic[4] = {'S', 'E', 'R', 'T'};
inline constexpr std::uint8_t kTensorFormatVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;

std::vector<std::uint8_t> encode_tensor(const Tensor& t);

// Throws FormatError on bad magic/version/dtype/rank/dims and
// CorruptionError when the byte count disagrees with the header.
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace emohead
