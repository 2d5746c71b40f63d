#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cvfp {

/// Low 24 bits of the Mode S generator x^24 + ... (0x1FFF409).
inline constexpr std::uint32_t kModeSGenerator = 0xFFF409;

/// Remainder of bits(x) * x^24 divided by the Mode S generator, MSB-first bits (0/1 values).
inline std::uint32_t crc24(std::span<const std::uint8_t> bits) {
  std::uint32_t reg = 0;
  for (auto bit : bits) {
    const std::uint32_t top = ((reg >> 23) & 1u) ^ (bit & 1u);
    reg = (reg << 1) & 0xFFFFFFu;
    if (top) reg ^= kModeSGenerator;
  }
  return reg;
}

/// True when the trailing 24 bits are the parity of everything before them.
inline bool crc24_valid(std::span<const std::uint8_t> frame) {
  if (frame.size() <= 24) return false;
  std::uint32_t parity = 0;
  for (auto bit : frame.last(24)) parity = (parity << 1) | (bit & 1u);
  return crc24(frame.first(frame.size() - 24)) == parity;
}

/// MSB-first expansion of the low `width` bits.
inline std::vector<std::uint8_t> to_bits(std::uint64_t value, std::size_t width) {
  std::vector<std::uint8_t> bits(width);
  for (std::size_t i = 0; i < width; ++i) bits[i] = static_cast<std::uint8_t>((value >> (width - 1 - i)) & 1u);
  return bits;
}

}  // namespace cvfp
