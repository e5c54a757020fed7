#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace tsrules {

using Rgb = std::array<std::uint8_t, 3>;

// 8-bit palette PNG, one palette index per pixel in row-major order.
// Deflate and CRC come from zlib; output is byte-stable for a given input.
std::vector<std::uint8_t> encode_png(std::uint32_t width, std::uint32_t height, std::span<const Rgb> palette,
                                     std::span<const std::uint8_t> pixels);

}  // namespace tsrules
