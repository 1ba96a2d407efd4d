#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "gasduino/aqi.hpp"

namespace gasduino {

inline constexpr std::uint8_t kMagic0 = 0x47;  // 'G'
inline constexpr std::uint8_t kMagic1 = 0x44;  // 'D'
inline constexpr std::uint8_t kProtocolVersion = 1;

enum class FrameKind : std::uint8_t { hello = 0x01, telemetry = 0x02, ack = 0x03 };

inline constexpr bool is_valid_kind(std::uint8_t k) { return k >= 0x01 && k <= 0x03; }

// Telemetry payload. ppm_centi is PPM * 100 rounded, so values are exact and
// endianness-unambiguous on the wire. status_code must match the
// classification of ppm_centi / 100 (see aqi.hpp).
struct TelemetryPayload {
  std::uint16_t raw_adc = 0;
  std::uint32_t ppm_centi = 0;
  std::uint8_t status_code = 0;

  friend bool operator==(const TelemetryPayload&, const TelemetryPayload&) = default;
};

struct Frame {
  std::uint8_t version = kProtocolVersion;
  FrameKind kind = FrameKind::hello;
  std::uint16_t node_id = 0;
  std::uint32_t seq = 0;
  std::uint64_t ts_ms = 0;                  // milliseconds since Unix epoch
  TelemetryPayload payload{};               // meaningful for telemetry only

  friend bool operator==(const Frame& a, const Frame& b) {
    if (a.version != b.version || a.kind != b.kind || a.node_id != b.node_id ||
        a.seq != b.seq || a.ts_ms != b.ts_ms) {
      return false;
    }
    return a.kind != FrameKind::telemetry || a.payload == b.payload;
  }
};

inline constexpr std::size_t kHeaderSize = 18;  // magic..ts_ms
inline constexpr std::size_t kCrcSize = 2;

constexpr std::size_t frame_size(FrameKind kind) {
  return kind == FrameKind::telemetry ? 27 : 20;
}

inline constexpr std::size_t kMinFrameSize = frame_size(FrameKind::hello);
inline constexpr std::size_t kMaxFrameSize = frame_size(FrameKind::telemetry);

namespace detail {

inline constexpr std::array<std::uint16_t, 256> make_crc16_table() {
  std::array<std::uint16_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t crc = i << 8;
    for (int bit = 0; bit < 8; ++bit) {
      crc = (crc & 0x8000u) ? ((crc << 1) ^ 0x1021u) : (crc << 1);
    }
    table[i] = static_cast<std::uint16_t>(crc & 0xFFFFu);
  }
  return table;
}

inline constexpr std::array<std::uint16_t, 256> kCrc16Table = make_crc16_table();

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

inline std::uint16_t get_u16(std::span<const std::uint8_t> in, std::size_t at) {
  return static_cast<std::uint16_t>((std::uint16_t{in[at]} << 8) | in[at + 1]);
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | in[at + i];
  return v;
}

inline std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | in[at + i];
  return v;
}

}  // namespace detail

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
inline std::uint16_t crc16_ccitt(std::span<const std::uint8_t> data) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t byte : data) {
    crc = static_cast<std::uint16_t>((crc << 8) ^
                                     detail::kCrc16Table[((crc >> 8) ^ byte) & 0xFF]);
  }
  return crc;
}

inline std::uint32_t ppm_to_centi(double ppm) {
  if (!(ppm >= 0.0) || !std::isfinite(ppm)) {
    throw std::domain_error("ppm_to_centi: ppm must be finite and non-negative");
  }
  const double scaled = std::round(ppm * 100.0);
  if (scaled > 4294967295.0) {
    throw std::out_of_range("ppm_to_centi: value does not fit the wire field");
  }
  return static_cast<std::uint32_t>(scaled);
}

// Big-endian serialization:
//   0-1 magic "GD", 2 version, 3 kind, 4-5 node_id, 6-9 seq, 10-17 ts_ms,
//   telemetry adds 18-19 raw_adc, 20-23 ppm_centi, 24 status_code,
//   final 2 bytes CRC-16 over everything before them.
inline std::vector<std::uint8_t> encode(const Frame& frame) {
  if (frame.version != kProtocolVersion) {
    throw std::invalid_argument("encode: unsupported version");
  }
  if (!is_valid_kind(static_cast<std::uint8_t>(frame.kind))) {
    throw std::invalid_argument("encode: unknown frame kind");
  }
  if (frame.kind == FrameKind::telemetry) {
    const double ppm = static_cast<double>(frame.payload.ppm_centi) / 100.0;
    if (frame.payload.status_code != status_code(classify(ppm))) {
      throw std::invalid_argument("encode: status_code inconsistent with ppm_centi");
    }
  }
  std::vector<std::uint8_t> out;
  out.reserve(frame_size(frame.kind));
  out.push_back(kMagic0);
  out.push_back(kMagic1);
  out.push_back(frame.version);
  out.push_back(static_cast<std::uint8_t>(frame.kind));
  detail::put_u16(out, frame.node_id);
  detail::put_u32(out, frame.seq);
  detail::put_u64(out, frame.ts_ms);
  if (frame.kind == FrameKind::telemetry) {
    detail::put_u16(out, frame.payload.raw_adc);
    detail::put_u32(out, frame.payload.ppm_centi);
    out.push_back(frame.payload.status_code);
  }
  detail::put_u16(out, crc16_ccitt(out));
  return out;
}

enum class DecodeStatus : std::uint8_t {
  ok,
  need_more,         // truncated; `needed` holds the required total byte count
  bad_magic,         // resync: skip a byte and retry
  bad_version,
  bad_kind,
  bad_crc,
  adc_out_of_range,  // raw_adc beyond the expected ADC width
  status_mismatch,   // status_code disagrees with classify(ppm_centi / 100)
};

struct DecodeResult {
  DecodeStatus status = DecodeStatus::need_more;
  Frame frame{};            // valid when status == ok
  std::size_t consumed = 0; // bytes consumed when status == ok
  std::size_t needed = 0;   // total bytes required when status == need_more
};

inline DecodeResult decode(std::span<const std::uint8_t> buf, int expected_adc_bits = 10) {
  if (expected_adc_bits < 8 || expected_adc_bits > 16) {
    throw std::invalid_argument("decode: expected_adc_bits must be in [8, 16]");
  }
  DecodeResult result;
  if (!buf.empty() && buf[0] != kMagic0) {
    result.status = DecodeStatus::bad_magic;
    return result;
  }
  if (buf.size() >= 2 && buf[1] != kMagic1) {
    result.status = DecodeStatus::bad_magic;
    return result;
  }
  if (buf.size() < 4) {
    result.status = DecodeStatus::need_more;
    result.needed = kMinFrameSize;
    return result;
  }
  if (buf[2] != kProtocolVersion) {
    result.status = DecodeStatus::bad_version;
    return result;
  }
  if (!is_valid_kind(buf[3])) {
    result.status = DecodeStatus::bad_kind;
    return result;
  }
  const FrameKind kind = static_cast<FrameKind>(buf[3]);
  const std::size_t size = frame_size(kind);
  if (buf.size() < size) {
    result.status = DecodeStatus::need_more;
    result.needed = size;
    return result;
  }
  const auto body = buf.first(size - kCrcSize);
  if (crc16_ccitt(body) != detail::get_u16(buf, size - kCrcSize)) {
    result.status = DecodeStatus::bad_crc;
    return result;
  }

  Frame frame;
  frame.version = buf[2];
  frame.kind = kind;
  frame.node_id = detail::get_u16(buf, 4);
  frame.seq = detail::get_u32(buf, 6);
  frame.ts_ms = detail::get_u64(buf, 10);
  if (kind == FrameKind::telemetry) {
    frame.payload.raw_adc = detail::get_u16(buf, 18);
    frame.payload.ppm_centi = detail::get_u32(buf, 20);
    frame.payload.status_code = buf[24];
    const std::uint32_t adc_max = (std::uint32_t{1} << expected_adc_bits) - 1;
    if (frame.payload.raw_adc > adc_max) {
      result.status = DecodeStatus::adc_out_of_range;
      return result;
    }
    const double ppm = static_cast<double>(frame.payload.ppm_centi) / 100.0;
    if (frame.payload.status_code != status_code(classify(ppm))) {
      result.status = DecodeStatus::status_mismatch;
      return result;
    }
  }
  result.status = DecodeStatus::ok;
  result.frame = frame;
  result.consumed = size;
  return result;
}

// Smallest offset where the frame magic appears, or buf.size() when absent.
inline std::size_t resync_scan(std::span<const std::uint8_t> buf) {
  if (buf.size() < 2) return buf.size();
  for (std::size_t i = 0; i + 1 < buf.size(); ++i) {
    if (buf[i] == kMagic0 && buf[i + 1] == kMagic1) return i;
  }
  return buf.size();
}

inline Frame make_hello(std::uint16_t node_id, std::uint32_t seq, std::uint64_t ts_ms) {
  Frame frame;
  frame.kind = FrameKind::hello;
  frame.node_id = node_id;
  frame.seq = seq;
  frame.ts_ms = ts_ms;
  return frame;
}

inline Frame make_ack(std::uint16_t node_id, std::uint32_t seq, std::uint64_t ts_ms) {
  Frame frame = make_hello(node_id, seq, ts_ms);
  frame.kind = FrameKind::ack;
  return frame;
}

// Builds a consistent telemetry frame; the status byte is derived from the
// quantized centi-PPM value, which is what receivers verify against.
inline Frame make_telemetry(std::uint16_t node_id, std::uint32_t seq, std::uint64_t ts_ms,
                            std::uint16_t raw_adc, std::uint32_t ppm_centi) {
  Frame frame;
  frame.kind = FrameKind::telemetry;
  frame.node_id = node_id;
  frame.seq = seq;
  frame.ts_ms = ts_ms;
  frame.payload.raw_adc = raw_adc;
  frame.payload.ppm_centi = ppm_centi;
  frame.payload.status_code = status_code(classify(static_cast<double>(ppm_centi) / 100.0));
  return frame;
}

}  // namespace gasduino
