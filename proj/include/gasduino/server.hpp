#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "gasduino/net.hpp"
#include "gasduino/store.hpp"
#include "gasduino/wire.hpp"

namespace gasduino {

inline std::int64_t wall_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// TCP listener speaking the telemetry wire protocol. One reader thread per
// connection; a node's second connection supersedes (and kicks) its first.
class IngestServer {
 public:
  struct Counters {
    std::uint64_t frames_stored = 0;
    std::uint64_t frames_duplicate = 0;
    std::uint64_t frames_inconsistent = 0;
    std::uint64_t frames_out_of_range = 0;
    std::uint64_t frames_storage_error = 0;
    std::uint64_t decode_errors = 0;
    std::uint64_t protocol_errors = 0;  // telemetry before hello, stray acks
    std::uint64_t hellos = 0;
  };

  IngestServer(TelemetryStore& store, bool verbose = false)
      : store_(store), verbose_(verbose) {}

  ~IngestServer() { stop(); }

  bool start(const std::string& host, std::uint16_t port) {
    if (running_.exchange(true)) return false;
    if (!listener_.bind_listen(host, port)) {
      running_ = false;
      return false;
    }
    accept_thread_ = std::thread([this] { accept_loop(); });
    return true;
  }

  std::uint16_t port() const { return listener_.port(); }

  void stop() {
    if (!running_.exchange(false)) return;
    listener_.wake();
    {
      std::lock_guard<std::mutex> lock(mutex_);
      for (auto& [conn_id, fd] : live_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    for (std::thread& t : conn_threads_) {
      if (t.joinable()) t.join();
    }
    conn_threads_.clear();
    listener_.close();
  }

  Counters counters() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return counters_;
  }

 private:
  void accept_loop() {
    while (running_) {
      auto conn = listener_.accept_next();
      if (!conn) break;
      std::lock_guard<std::mutex> lock(mutex_);
      if (!running_) break;
      const std::uint64_t conn_id = next_conn_id_++;
      live_fds_[conn_id] = conn->get();
      conn_threads_.emplace_back(
          [this, conn_id, fd = std::move(*conn)]() mutable { handle_connection(conn_id, std::move(fd)); });
    }
  }

  void handle_connection(std::uint64_t conn_id, SocketFd fd) {
    std::vector<std::uint8_t> pending;
    std::uint8_t chunk[4096];
    bool got_hello = false;

    while (running_) {
      const ssize_t n = ::recv(fd.get(), chunk, sizeof(chunk), 0);
      if (n <= 0) break;
      pending.insert(pending.end(), chunk, chunk + n);

      std::size_t offset = 0;
      for (;;) {
        const std::span<const std::uint8_t> view(pending.data() + offset,
                                                 pending.size() - offset);
        const DecodeResult r = decode(view, store_.adc_bits());
        if (r.status == DecodeStatus::ok) {
          handle_frame(conn_id, fd.get(), r.frame, got_hello);
          offset += r.consumed;
          continue;
        }
        if (r.status == DecodeStatus::need_more) break;
        // Any other error: count it, skip one byte, and hunt for the next magic.
        note_decode_error(r.status);
        const std::span<const std::uint8_t> rest(pending.data() + offset + 1,
                                                 pending.size() - offset - 1);
        std::size_t skip = 1 + resync_scan(rest);
        // keep a trailing half magic; the next read may complete it
        if (offset + skip == pending.size() && !pending.empty() && pending.back() == kMagic0) {
          --skip;
        }
        offset += skip;
        if (offset >= pending.size()) break;
      }
      pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(offset));
    }

    std::lock_guard<std::mutex> lock(mutex_);
    live_fds_.erase(conn_id);
    for (auto it = active_session_.begin(); it != active_session_.end();) {
      it = it->second == conn_id ? active_session_.erase(it) : std::next(it);
    }
  }

  void handle_frame(std::uint64_t conn_id, int fd, const Frame& frame, bool& got_hello) {
    switch (frame.kind) {
      case FrameKind::hello: {
        got_hello = true;
        register_session(frame.node_id, conn_id);
        const Frame ack =
            make_ack(frame.node_id, frame.seq, static_cast<std::uint64_t>(wall_clock_ms()));
        send_all(fd, encode(ack));
        std::lock_guard<std::mutex> lock(mutex_);
        ++counters_.hellos;
        return;
      }
      case FrameKind::telemetry: {
        if (!got_hello) {
          std::lock_guard<std::mutex> lock(mutex_);
          ++counters_.protocol_errors;
          return;
        }
        const IngestOutcome outcome = store_.ingest(frame, wall_clock_ms());
        std::lock_guard<std::mutex> lock(mutex_);
        switch (outcome) {
          case IngestOutcome::stored: ++counters_.frames_stored; break;
          case IngestOutcome::duplicate: ++counters_.frames_duplicate; break;
          case IngestOutcome::inconsistent: ++counters_.frames_inconsistent; break;
          case IngestOutcome::out_of_range: ++counters_.frames_out_of_range; break;
          case IngestOutcome::storage_error: ++counters_.frames_storage_error; break;
        }
        return;
      }
      case FrameKind::ack: {
        std::lock_guard<std::mutex> lock(mutex_);
        ++counters_.protocol_errors;
        return;
      }
    }
  }

  void register_session(std::uint16_t node_id, std::uint64_t conn_id) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = active_session_.find(node_id);
    if (it != active_session_.end() && it->second != conn_id) {
      const auto old_fd = live_fds_.find(it->second);
      if (old_fd != live_fds_.end()) ::shutdown(old_fd->second, SHUT_RDWR);
      if (verbose_) {
        std::cerr << "gasduino-server: node " << node_id
                  << " reconnected, superseding its previous session\n";
      }
    }
    active_session_[node_id] = conn_id;
  }

  void note_decode_error(DecodeStatus status) {
    std::lock_guard<std::mutex> lock(mutex_);
    ++counters_.decode_errors;
    if (verbose_) {
      std::cerr << "gasduino-server: dropped bytes (decode status "
                << static_cast<int>(status) << ")\n";
    }
  }

  TelemetryStore& store_;
  bool verbose_;
  TcpListener listener_;
  std::thread accept_thread_;
  mutable std::mutex mutex_;
  std::vector<std::thread> conn_threads_;
  std::unordered_map<std::uint64_t, int> live_fds_;
  std::unordered_map<std::uint16_t, std::uint64_t> active_session_;
  std::uint64_t next_conn_id_ = 1;
  Counters counters_;
  std::atomic<bool> running_{false};
};

// JSON query API over HTTP.
//   GET /healthz                      -> {"status":"ok"}
//   GET /nodes                        -> [{"node_id":..,"last_seen_ms":..,"record_count":..}]
//   GET /nodes/{id}/latest            -> one record
//   GET /nodes/{id}/range?from=&to=   -> {"records":[...]}
//   GET /nodes/{id}/alerts            -> {"alerts":[...]}
class QueryServer {
 public:
  explicit QueryServer(TelemetryStore& store) : store_(store) { install_routes(); }

  ~QueryServer() { stop(); }

  bool start(const std::string& host, std::uint16_t port) {
    if (running_.exchange(true)) return false;
    if (port == 0) {
      const int bound = server_.bind_to_any_port(host);
      if (bound <= 0) {
        running_ = false;
        return false;
      }
      port_ = static_cast<std::uint16_t>(bound);
    } else {
      if (!server_.bind_to_port(host, port)) {
        running_ = false;
        return false;
      }
      port_ = port;
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    return true;
  }

  std::uint16_t port() const { return port_; }

  void stop() {
    if (!running_.exchange(false)) return;
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  static void reply_json(httplib::Response& res, int code, const std::string& body) {
    res.status = code;
    res.set_content(body, "application/json");
  }

  static std::optional<std::uint64_t> parse_u64(const std::string& text) {
    if (text.empty()) return std::nullopt;
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
  }

  static std::optional<std::uint16_t> parse_node_id(const std::string& text) {
    const auto value = parse_u64(text);
    if (!value || *value > 0xFFFF) return std::nullopt;
    return static_cast<std::uint16_t>(*value);
  }

  void install_routes() {
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      reply_json(res, 200, R"({"status":"ok"})");
    });

    server_.Get("/nodes", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::ordered_json out = nlohmann::ordered_json::array();
      for (const NodeSummary& n : store_.nodes()) {
        out.push_back({{"node_id", n.node_id},
                       {"last_seen_ms", n.last_seen_ms},
                       {"record_count", n.record_count}});
      }
      reply_json(res, 200, out.dump());
    });

    server_.Get(R"(/nodes/(\d+)/latest)", [this](const httplib::Request& req,
                                                 httplib::Response& res) {
      const auto node_id = parse_node_id(req.matches[1]);
      const auto record = node_id ? store_.latest(*node_id) : std::nullopt;
      if (!record) {
        reply_json(res, 404, R"({"error":"unknown node"})");
        return;
      }
      reply_json(res, 200, record_to_json(*record).dump());
    });

    server_.Get(R"(/nodes/(\d+)/range)", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      const auto node_id = parse_node_id(req.matches[1]);
      if (!node_id) {
        reply_json(res, 404, R"({"error":"unknown node"})");
        return;
      }
      std::uint64_t from_ms = 0;
      std::uint64_t to_ms = UINT64_MAX;
      if (req.has_param("from")) {
        const auto v = parse_u64(req.get_param_value("from"));
        if (!v) {
          reply_json(res, 400, R"({"error":"bad range"})");
          return;
        }
        from_ms = *v;
      }
      if (req.has_param("to")) {
        const auto v = parse_u64(req.get_param_value("to"));
        if (!v) {
          reply_json(res, 400, R"({"error":"bad range"})");
          return;
        }
        to_ms = *v;
      }
      if (from_ms > to_ms) {
        reply_json(res, 400, R"({"error":"bad range"})");
        return;
      }
      nlohmann::ordered_json records = nlohmann::ordered_json::array();
      for (const ReadingRecord& r : store_.range(*node_id, from_ms, to_ms)) {
        records.push_back(record_to_json(r));
      }
      reply_json(res, 200, nlohmann::ordered_json{{"records", std::move(records)}}.dump());
    });

    server_.Get(R"(/nodes/(\d+)/alerts)", [this](const httplib::Request& req,
                                                 httplib::Response& res) {
      const auto node_id = parse_node_id(req.matches[1]);
      if (!node_id || !store_.has_node(*node_id)) {
        reply_json(res, 404, R"({"error":"unknown node"})");
        return;
      }
      nlohmann::ordered_json alerts = nlohmann::ordered_json::array();
      for (const AlertRecord& a : store_.alerts(*node_id)) {
        alerts.push_back(alert_to_json(a));
      }
      reply_json(res, 200, nlohmann::ordered_json{{"alerts", std::move(alerts)}}.dump());
    });
  }

  TelemetryStore& store_;
  httplib::Server server_;
  std::thread thread_;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
};

struct ServiceConfig {
  std::string ingest_host = "0.0.0.0";
  std::uint16_t ingest_port = 7474;
  std::string http_host = "0.0.0.0";
  std::uint16_t http_port = 8080;
  std::filesystem::path data_dir = "./data";
  int adc_bits = 10;
  bool verbose = false;
};

// The whole service: store + TCP ingestion + HTTP queries.
class CloudService {
 public:
  explicit CloudService(ServiceConfig config)
      : config_(std::move(config)),
        store_({config_.data_dir, config_.adc_bits, 4096, config_.verbose}),
        ingest_(store_, config_.verbose),
        query_(store_) {}

  ~CloudService() { stop(); }

  bool start(std::string* error = nullptr) {
    if (!ingest_.start(config_.ingest_host, config_.ingest_port)) {
      if (error) {
        *error = "cannot listen on " + config_.ingest_host + ":" +
                 std::to_string(config_.ingest_port);
      }
      return false;
    }
    if (!query_.start(config_.http_host, config_.http_port)) {
      if (error) {
        *error = "cannot serve http on " + config_.http_host + ":" +
                 std::to_string(config_.http_port);
      }
      ingest_.stop();
      return false;
    }
    return true;
  }

  void stop() {
    ingest_.stop();
    query_.stop();
  }

  TelemetryStore& store() { return store_; }
  IngestServer& ingest_server() { return ingest_; }
  std::uint16_t ingest_port() const { return ingest_.port(); }
  std::uint16_t http_port() const { return query_.port(); }

 private:
  ServiceConfig config_;
  TelemetryStore store_;
  IngestServer ingest_;
  QueryServer query_;
};

}  // namespace gasduino
