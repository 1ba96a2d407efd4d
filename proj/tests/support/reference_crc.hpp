#pragma once

#include <cstdint>
#include <span>

namespace gasduino::testing {

// Independent bit-at-a-time CRC-16/CCITT-FALSE, kept separate from the
// table-driven implementation it cross-checks.
inline std::uint16_t reference_crc16(std::span<const std::uint8_t> data) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t byte : data) {
    crc ^= static_cast<std::uint16_t>(byte) << 8;
    for (int bit = 0; bit < 8; ++bit) {
      if (crc & 0x8000) {
        crc = static_cast<std::uint16_t>((crc << 1) ^ 0x1021);
      } else {
        crc = static_cast<std::uint16_t>(crc << 1);
      }
    }
  }
  return crc;
}

}  // namespace gasduino::testing
