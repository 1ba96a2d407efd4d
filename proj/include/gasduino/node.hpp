#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gasduino/sensor.hpp"
#include "gasduino/wire.hpp"

namespace gasduino {

// Injectable time source so agent runs are testable without real sleeps.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() = 0;
  virtual void sleep_ms(std::int64_t ms) = 0;
};

class SystemClock final : public Clock {
 public:
  std::int64_t now_ms() override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }
  void sleep_ms(std::int64_t ms) override {
    if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  }
};

// One established uplink. send() returns false once the link is dead.
class Connection {
 public:
  virtual ~Connection() = default;
  virtual bool send(std::span<const std::uint8_t> bytes) = 0;
  virtual bool recv_exact(std::span<std::uint8_t> out, std::int64_t timeout_ms) = 0;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::unique_ptr<Connection> connect(const std::string& host, std::uint16_t port) = 0;
};

struct NodeConfig {
  std::uint16_t node_id = 1;
  std::string server_host = "127.0.0.1";
  std::uint16_t server_port = 7474;
  std::int64_t interval_ms = 1000;   // sampling period in simulated time
  double time_scale = 1.0;           // simulated seconds per real second
  std::size_t buffer_capacity = 1024;
  std::int64_t backoff_base_ms = 500;
  std::int64_t backoff_cap_ms = 30'000;
  double backoff_jitter = 0.1;       // fraction in [0, 1]
  std::uint64_t backoff_seed = 0xB0FF;
  std::int64_t ack_timeout_ms = 5000;

  void validate() const {
    if (interval_ms <= 0) throw std::invalid_argument("NodeConfig: interval_ms must be > 0");
    if (!(time_scale >= 1.0)) throw std::invalid_argument("NodeConfig: time_scale must be >= 1");
    if (buffer_capacity < 1) throw std::invalid_argument("NodeConfig: buffer_capacity must be >= 1");
    if (backoff_base_ms <= 0 || backoff_cap_ms <= 0 || backoff_base_ms > backoff_cap_ms) {
      throw std::invalid_argument("NodeConfig: need 0 < backoff_base_ms <= backoff_cap_ms");
    }
    if (!(backoff_jitter >= 0.0 && backoff_jitter <= 1.0)) {
      throw std::invalid_argument("NodeConfig: backoff_jitter must be in [0, 1]");
    }
  }
};

// min(base * 2^attempt, cap) scaled by a uniform factor in [1-jitter, 1+jitter].
inline std::int64_t backoff_delay_ms(unsigned attempt, const NodeConfig& config,
                                     std::mt19937_64& rng) {
  std::int64_t delay = config.backoff_base_ms;
  for (unsigned i = 0; i < attempt && delay < config.backoff_cap_ms; ++i) delay *= 2;
  delay = std::min(delay, config.backoff_cap_ms);
  if (config.backoff_jitter > 0.0) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    const double factor = 1.0 - config.backoff_jitter + 2.0 * config.backoff_jitter * unit;
    delay = std::llround(static_cast<double>(delay) * factor);
  }
  return std::max<std::int64_t>(delay, 0);
}

// Bounded FIFO of encoded frames. When full the oldest frame is dropped;
// fresh data matters most for an alarm feed.
class SendBuffer {
 public:
  explicit SendBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 1) throw std::invalid_argument("SendBuffer: capacity must be >= 1");
  }

  void push(std::vector<std::uint8_t> frame) {
    if (queue_.size() == capacity_) {
      queue_.pop_front();
      ++dropped_;
    }
    queue_.push_back(std::move(frame));
  }

  bool empty() const { return queue_.empty(); }
  std::size_t size() const { return queue_.size(); }
  const std::vector<std::uint8_t>& front() const { return queue_.front(); }
  void pop() { queue_.pop_front(); }
  std::uint64_t dropped() const { return dropped_; }

 private:
  std::size_t capacity_;
  std::deque<std::vector<std::uint8_t>> queue_;
  std::uint64_t dropped_ = 0;
};

struct RunSummary {
  std::uint64_t sampled = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t buffered = 0;   // still queued when the run ended
  std::uint32_t reconnects = 0;
  std::uint32_t failed_connects = 0;
};

// Simulated device: samples the sensor chain on a schedule, classifies
// locally, and streams telemetry with buffering and reconnect.
class NodeAgent {
 public:
  NodeAgent(NodeConfig config, AmbientProfile profile, SensorCurve curve)
      : config_(std::move(config)), profile_(std::move(profile)), curve_(curve) {
    config_.validate();
    profile_.validate();
    curve_.validate();
  }

  // Runs for duration_s simulated seconds (negative = until stop). Sampling
  // tick k happens at simulated time k * interval_ms; real time is scaled by
  // 1 / time_scale. Network trouble is handled, never thrown.
  RunSummary run(double duration_s, Clock& clock, Transport& transport,
                 const std::atomic<bool>& stop) {
    SensorSimulator simulator(profile_, curve_);
    SendBuffer buffer(config_.buffer_capacity);
    RunSummary summary;
    std::mt19937_64 backoff_rng(config_.backoff_seed);

    const std::int64_t epoch_ms = clock.now_ms();
    const bool bounded = duration_s >= 0.0;
    const std::int64_t duration_ms = bounded ? std::llround(duration_s * 1000.0) : 0;

    std::unique_ptr<Connection> conn;
    unsigned attempt = 0;
    std::int64_t next_connect_ms = epoch_ms;  // first attempt is immediate
    bool had_interruption = false;
    std::uint32_t seq = 0;
    std::int64_t t_sim_ms = 0;

    auto try_connect = [&]() {
      conn = transport.connect(config_.server_host, config_.server_port);
      if (conn) {
        const Frame hello = make_hello(config_.node_id, seq,
                                       static_cast<std::uint64_t>(epoch_ms + t_sim_ms));
        std::array<std::uint8_t, kMinFrameSize> ack_buf{};
        bool ok = conn->send(encode(hello)) &&
                  conn->recv_exact(ack_buf, config_.ack_timeout_ms);
        if (ok) {
          const DecodeResult ack = decode(ack_buf, curve_.adc_bits);
          ok = ack.status == DecodeStatus::ok && ack.frame.kind == FrameKind::ack &&
               ack.frame.node_id == config_.node_id;
        }
        if (!ok) conn.reset();
      }
      if (conn) {
        if (had_interruption) ++summary.reconnects;
        attempt = 0;
        return true;
      }
      had_interruption = true;
      ++summary.failed_connects;
      next_connect_ms = clock.now_ms() + backoff_delay_ms(attempt++, config_, backoff_rng);
      return false;
    };

    auto pump = [&]() {
      if (!conn && clock.now_ms() >= next_connect_ms) try_connect();
      if (!conn) return;
      while (!buffer.empty()) {
        if (conn->send(buffer.front())) {
          buffer.pop();
          ++summary.delivered;
        } else {
          conn.reset();
          had_interruption = true;
          next_connect_ms = clock.now_ms() + backoff_delay_ms(attempt++, config_, backoff_rng);
          break;
        }
      }
    };

    for (std::uint64_t tick = 0;; ++tick) {
      t_sim_ms = static_cast<std::int64_t>(tick) * config_.interval_ms;
      if (bounded && t_sim_ms >= duration_ms) break;
      if (stop.load(std::memory_order_relaxed)) break;

      const std::int64_t target_real =
          epoch_ms + std::llround(static_cast<double>(t_sim_ms) / config_.time_scale);
      const std::int64_t now = clock.now_ms();
      if (now < target_real) clock.sleep_ms(target_real - now);
      if (stop.load(std::memory_order_relaxed)) break;

      const AdcReading reading = simulator.sample(static_cast<double>(t_sim_ms) / 1000.0);
      const double ppm = adc_to_ppm(reading.raw, curve_);
      const Frame frame =
          make_telemetry(config_.node_id, seq++, static_cast<std::uint64_t>(epoch_ms + t_sim_ms),
                         static_cast<std::uint16_t>(reading.raw), ppm_to_centi(ppm));
      buffer.push(encode(frame));
      ++summary.sampled;
      pump();
    }

    // Best-effort flush within one backoff period of the stop point.
    if (!buffer.empty()) {
      const std::int64_t deadline =
          clock.now_ms() + backoff_delay_ms(attempt, config_, backoff_rng);
      if (!conn) try_connect();
      while (!buffer.empty() && clock.now_ms() < deadline) {
        pump();
        if (buffer.empty()) break;
        const std::int64_t wake = std::min(deadline, std::max(next_connect_ms,
                                                              clock.now_ms() + 10));
        const std::int64_t wait = wake - clock.now_ms();
        if (wait > 0) clock.sleep_ms(wait);
      }
    }

    summary.buffered = buffer.size();
    summary.dropped = buffer.dropped();
    return summary;
  }

  const NodeConfig& config() const { return config_; }

 private:
  NodeConfig config_;
  AmbientProfile profile_;
  SensorCurve curve_;
};

}  // namespace gasduino
