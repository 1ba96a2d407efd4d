#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "gasduino/node.hpp"
#include "gasduino/wire.hpp"

namespace gasduino::testing {

// Deterministic clock: sleeping advances time instantly.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::int64_t start_ms = 1'700'000'000'000) : now_(start_ms), start_(start_ms) {}
  std::int64_t now_ms() override { return now_; }
  void sleep_ms(std::int64_t ms) override {
    if (ms > 0) now_ += ms;
  }
  std::int64_t elapsed_ms() const { return now_ - start_; }

 private:
  std::int64_t now_;
  std::int64_t start_;
};

// Collects every frame the fake link delivered, in arrival order.
struct FakeServer {
  std::vector<std::vector<std::uint8_t>> raw_frames;

  std::vector<Frame> frames(int adc_bits = 10) const {
    std::vector<Frame> out;
    for (const auto& bytes : raw_frames) {
      const DecodeResult r = decode(bytes, adc_bits);
      if (r.status == DecodeStatus::ok) out.push_back(r.frame);
    }
    return out;
  }

  std::vector<Frame> telemetry(int adc_bits = 10) const {
    std::vector<Frame> out;
    for (const Frame& f : frames(adc_bits)) {
      if (f.kind == FrameKind::telemetry) out.push_back(f);
    }
    return out;
  }
};

class FakeConnection final : public Connection {
 public:
  // fail_after_sends < 0 never fails; otherwise the (fail_after_sends+1)-th
  // send on this connection (hello included) returns false.
  FakeConnection(FakeServer& server, int fail_after_sends)
      : server_(server), fail_after_sends_(fail_after_sends) {}

  bool send(std::span<const std::uint8_t> bytes) override {
    if (dead_) return false;
    if (fail_after_sends_ >= 0 && sends_ >= fail_after_sends_) {
      dead_ = true;
      return false;
    }
    ++sends_;
    const DecodeResult r = decode(bytes, 16);
    if (r.status == DecodeStatus::ok && r.frame.kind == FrameKind::hello) {
      const auto ack = encode(make_ack(r.frame.node_id, r.frame.seq, r.frame.ts_ms));
      ack_bytes_.insert(ack_bytes_.end(), ack.begin(), ack.end());
    }
    server_.raw_frames.emplace_back(bytes.begin(), bytes.end());
    return true;
  }

  bool recv_exact(std::span<std::uint8_t> out, std::int64_t) override {
    if (dead_ || ack_bytes_.size() < out.size()) return false;
    std::copy_n(ack_bytes_.begin(), out.size(), out.begin());
    ack_bytes_.erase(ack_bytes_.begin(), ack_bytes_.begin() + static_cast<long>(out.size()));
    return true;
  }

 private:
  FakeServer& server_;
  int fail_after_sends_;
  int sends_ = 0;
  bool dead_ = false;
  std::vector<std::uint8_t> ack_bytes_;
};

class FakeTransport final : public Transport {
 public:
  FakeServer server;
  int fail_first_connects = 0;   // first N connect() calls return nullptr
  int fail_send_at = -1;         // per-connection send failure point
  std::function<bool()> online;  // optional extra gate
  int connect_attempts = 0;

  std::unique_ptr<Connection> connect(const std::string&, std::uint16_t) override {
    ++connect_attempts;
    if (connect_attempts <= fail_first_connects) return nullptr;
    if (online && !online()) return nullptr;
    return std::make_unique<FakeConnection>(server, fail_send_at);
  }
};

}  // namespace gasduino::testing
