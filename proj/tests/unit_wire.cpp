#include <catch2/catch_amalgamated.hpp>

#include "gasduino/wire.hpp"

#include <cstring>
#include <random>
#include <string_view>
#include <vector>

#include "support/reference_crc.hpp"

using namespace gasduino;
using gasduino::testing::reference_crc16;

namespace {

Frame random_frame(std::mt19937& rng) {
  std::uniform_int_distribution<int> kind_dist(1, 3);
  std::uniform_int_distribution<std::uint32_t> u16(0, 0xFFFF);
  std::uniform_int_distribution<std::uint32_t> u32;
  std::uniform_int_distribution<std::uint64_t> u64;
  const FrameKind kind = static_cast<FrameKind>(kind_dist(rng));
  if (kind == FrameKind::telemetry) {
    std::uniform_int_distribution<std::uint32_t> adc(0, 1023);
    std::uniform_int_distribution<std::uint32_t> centi(0, 40'000);  // up to 400 ppm
    return make_telemetry(static_cast<std::uint16_t>(u16(rng)), u32(rng), u64(rng),
                          static_cast<std::uint16_t>(adc(rng)), centi(rng));
  }
  Frame f = make_hello(static_cast<std::uint16_t>(u16(rng)), u32(rng), u64(rng));
  f.kind = kind;
  return f;
}

}  // namespace

TEST_CASE("crc16 matches the independent reference implementation") {
  const std::string_view check = "123456789";
  std::vector<std::uint8_t> bytes(check.begin(), check.end());
  CHECK(crc16_ccitt(bytes) == 0x29B1);
  CHECK(reference_crc16(bytes) == 0x29B1);

  CHECK(crc16_ccitt({}) == 0xFFFF);
  CHECK(reference_crc16({}) == 0xFFFF);

  std::mt19937 rng(11);
  std::uniform_int_distribution<int> len_dist(0, 64);
  std::uniform_int_distribution<int> byte_dist(0, 255);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::uint8_t> data(static_cast<std::size_t>(len_dist(rng)));
    for (auto& b : data) b = static_cast<std::uint8_t>(byte_dist(rng));
    REQUIRE(crc16_ccitt(data) == reference_crc16(data));
    REQUIRE(crc16_ccitt(data) == crc16_ccitt(data));
  }
}

TEST_CASE("hello frame layout is bit exact") {
  const auto bytes = encode(make_hello(1, 0, 0));
  REQUIRE(bytes.size() == 20);
  const std::uint8_t expected_prefix[] = {0x47, 0x44, 0x01, 0x01, 0x00, 0x01};
  CHECK(std::memcmp(bytes.data(), expected_prefix, sizeof(expected_prefix)) == 0);
  for (std::size_t i = 6; i < 18; ++i) CHECK(bytes[i] == 0x00);
  const std::uint16_t crc = reference_crc16({bytes.data(), 18});
  CHECK(bytes[18] == static_cast<std::uint8_t>(crc >> 8));
  CHECK(bytes[19] == static_cast<std::uint8_t>(crc & 0xFF));
}

TEST_CASE("telemetry carries centi-ppm big endian") {
  const Frame frame = make_telemetry(7, 1, 0, 512, 10'000);  // 100.00 ppm
  const auto bytes = encode(frame);
  REQUIRE(bytes.size() == 27);
  CHECK(bytes[20] == 0x00);
  CHECK(bytes[21] == 0x00);
  CHECK(bytes[22] == 0x27);
  CHECK(bytes[23] == 0x10);
  CHECK(bytes[24] == 0x01);  // 100 ppm is moderate
}

TEST_CASE("frame sizes are fixed per kind") {
  CHECK(encode(make_hello(1, 2, 3)).size() == 20);
  CHECK(encode(make_ack(1, 2, 3)).size() == 20);
  CHECK(encode(make_telemetry(1, 2, 3, 4, 5)).size() == 27);
}

TEST_CASE("encode rejects invariant violations") {
  Frame frame = make_telemetry(1, 2, 3, 4, 17'500);
  frame.payload.status_code = status_code({AqiCategory::good, false});  // 175 ppm is unhealthy
  CHECK_THROWS_AS(encode(frame), std::invalid_argument);

  Frame bad_version = make_hello(1, 2, 3);
  bad_version.version = 2;
  CHECK_THROWS_AS(encode(bad_version), std::invalid_argument);

  Frame bad_kind = make_hello(1, 2, 3);
  bad_kind.kind = static_cast<FrameKind>(0x09);
  CHECK_THROWS_AS(encode(bad_kind), std::invalid_argument);
}

TEST_CASE("decode round trips every kind") {
  std::mt19937 rng(20240811);
  for (int i = 0; i < 10'000; ++i) {
    const Frame frame = random_frame(rng);
    const auto bytes = encode(frame);
    const DecodeResult r = decode(bytes, 10);
    REQUIRE(r.status == DecodeStatus::ok);
    REQUIRE(r.consumed == bytes.size());
    REQUIRE(r.frame == frame);
  }
}

TEST_CASE("every single-bit corruption of a reference frame is rejected") {
  const Frame frame = make_telemetry(42, 1'000'001, 1'700'000'123'456ull, 463, 7'000);
  const auto bytes = encode(frame);
  for (std::size_t byte = 0; byte < bytes.size(); ++byte) {
    for (int bit = 0; bit < 8; ++bit) {
      auto corrupted = bytes;
      corrupted[byte] ^= static_cast<std::uint8_t>(1u << bit);
      const DecodeResult r = decode(corrupted, 10);
      REQUIRE(r.status != DecodeStatus::ok);
    }
  }
}

TEST_CASE("concatenated frames decode in order") {
  std::mt19937 rng(5);
  std::vector<Frame> frames;
  std::vector<std::uint8_t> stream;
  for (int i = 0; i < 100; ++i) {
    frames.push_back(random_frame(rng));
    const auto bytes = encode(frames.back());
    stream.insert(stream.end(), bytes.begin(), bytes.end());
  }
  std::size_t offset = 0;
  for (const Frame& expected : frames) {
    const DecodeResult r =
        decode({stream.data() + offset, stream.size() - offset}, 10);
    REQUIRE(r.status == DecodeStatus::ok);
    REQUIRE(r.frame == expected);
    offset += r.consumed;
  }
  REQUIRE(offset == stream.size());
}

TEST_CASE("decode reports truncation with the required count") {
  const auto bytes = encode(make_telemetry(1, 2, 3, 4, 5));
  for (std::size_t len = 0; len < bytes.size(); ++len) {
    const DecodeResult r = decode({bytes.data(), len}, 10);
    REQUIRE(r.status == DecodeStatus::need_more);
    if (len >= 4) REQUIRE(r.needed == bytes.size());
  }
  CHECK(decode({}, 10).status == DecodeStatus::need_more);
  CHECK(decode({}, 10).needed == kMinFrameSize);
}

TEST_CASE("decode flags the documented error classes") {
  auto bytes = encode(make_telemetry(9, 1, 2, 3, 4));

  SECTION("bad magic") {
    bytes[0] = 0x00;
    CHECK(decode(bytes, 10).status == DecodeStatus::bad_magic);
  }
  SECTION("bad version") {
    bytes[2] = 9;
    CHECK(decode(bytes, 10).status == DecodeStatus::bad_version);
  }
  SECTION("bad kind") {
    bytes[3] = 0x7F;
    CHECK(decode(bytes, 10).status == DecodeStatus::bad_kind);
  }
  SECTION("crc mismatch") {
    bytes[26] ^= 0xFF;
    CHECK(decode(bytes, 10).status == DecodeStatus::bad_crc);
  }
  SECTION("adc range check uses the expected width") {
    const auto wide = encode(make_telemetry(9, 1, 2, 4'000, 4));
    CHECK(decode(wide, 12).status == DecodeStatus::ok);
    CHECK(decode(wide, 10).status == DecodeStatus::adc_out_of_range);
  }
  SECTION("status consistency") {
    Frame lying = make_telemetry(9, 1, 2, 3, 17'500);
    lying.payload.status_code = 0x00;  // claims good at 175 ppm
    std::vector<std::uint8_t> raw;
    raw.insert(raw.end(), {kMagic0, kMagic1, 0x01, 0x02});
    raw.push_back(0x00);
    raw.push_back(0x09);
    for (int i = 0; i < 4; ++i) raw.push_back(i == 3 ? 0x01 : 0x00);
    for (int i = 0; i < 8; ++i) raw.push_back(i == 7 ? 0x02 : 0x00);
    raw.push_back(0x00);
    raw.push_back(0x03);
    raw.insert(raw.end(), {0x00, 0x00, 0x44, 0x5C});  // 17500
    raw.push_back(0x00);
    const std::uint16_t crc = crc16_ccitt(raw);
    raw.push_back(static_cast<std::uint8_t>(crc >> 8));
    raw.push_back(static_cast<std::uint8_t>(crc & 0xFF));
    CHECK(decode(raw, 10).status == DecodeStatus::status_mismatch);
  }
}

TEST_CASE("resync_scan finds the next plausible frame") {
  const auto frame = encode(make_hello(3, 4, 5));
  std::vector<std::uint8_t> garbage{0x00, 0x13, 0x47, 0x43, 0xFF};

  std::vector<std::uint8_t> stream = garbage;
  stream.insert(stream.end(), frame.begin(), frame.end());
  CHECK(resync_scan(stream) == garbage.size());

  CHECK(resync_scan(frame) == 0);
  CHECK(resync_scan(garbage) == garbage.size());
  CHECK(resync_scan({}) == 0);

  const DecodeResult r = decode({stream.data() + garbage.size(),
                                 stream.size() - garbage.size()}, 10);
  CHECK(r.status == DecodeStatus::ok);
}

TEST_CASE("ppm_to_centi rounds and bounds") {
  CHECK(ppm_to_centi(100.0) == 10'000);
  CHECK(ppm_to_centi(0.004) == 0);
  CHECK(ppm_to_centi(0.005) == 1);
  CHECK(ppm_to_centi(0.0) == 0);
  CHECK_THROWS_AS(ppm_to_centi(-0.1), std::domain_error);
  CHECK_THROWS_AS(ppm_to_centi(1e18), std::out_of_range);
}
