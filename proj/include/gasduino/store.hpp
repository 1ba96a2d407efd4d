#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gasduino/aqi.hpp"
#include "gasduino/wire.hpp"

namespace gasduino {

// One stored telemetry point. `status` is the server-side classification of
// ppm; frames whose in-band status disagrees are never stored.
struct ReadingRecord {
  std::uint16_t node_id = 0;
  std::uint32_t seq = 0;
  std::uint64_t ts_ms = 0;
  std::uint16_t raw_adc = 0;
  double ppm = 0.0;
  AqiStatus status{};
  std::int64_t received_at_ms = 0;  // in-memory only, not part of the record schema
  bool out_of_order = false;        // ts_ms older than the node's newest stored ts
};

// Category boundary crossing in a node's in-order stream.
struct AlertRecord {
  std::uint16_t node_id = 0;
  std::uint64_t ts_ms = 0;
  AqiCategory from = AqiCategory::good;
  AqiCategory to = AqiCategory::good;
  double ppm = 0.0;
};

struct NodeSummary {
  std::uint16_t node_id = 0;
  std::uint64_t last_seen_ms = 0;
  std::uint64_t record_count = 0;
};

enum class IngestOutcome : std::uint8_t {
  stored,
  duplicate,      // seq already in the node's replay window
  inconsistent,   // in-band status disagrees with classify(ppm)
  out_of_range,   // raw_adc beyond the configured ADC width
  storage_error,  // write-through append failed; frame lost and counted
};

inline nlohmann::ordered_json record_to_json(const ReadingRecord& r) {
  return nlohmann::ordered_json{
      {"node_id", r.node_id},
      {"seq", r.seq},
      {"ts_ms", r.ts_ms},
      {"raw_adc", r.raw_adc},
      {"ppm", r.ppm},
      {"status", std::string(to_string(r.status.category))},
      {"out_of_scale", r.status.out_of_scale},
      {"indicator", std::string(to_string(indicator_for(r.status)))},
      {"out_of_order", r.out_of_order},
  };
}

inline nlohmann::ordered_json alert_to_json(const AlertRecord& a) {
  return nlohmann::ordered_json{
      {"ts_ms", a.ts_ms},
      {"from", std::string(to_string(a.from))},
      {"to", std::string(to_string(a.to))},
      {"ppm", a.ppm},
  };
}

// Strict parse; throws on missing fields, bad types, or values that violate
// the record invariants (used to spot corrupted log lines).
inline ReadingRecord record_from_json(const nlohmann::json& j) {
  ReadingRecord r;
  const std::uint64_t node_id = j.at("node_id").get<std::uint64_t>();
  const std::uint64_t seq = j.at("seq").get<std::uint64_t>();
  const std::uint64_t raw_adc = j.at("raw_adc").get<std::uint64_t>();
  if (node_id > 0xFFFF || raw_adc > 0xFFFF || seq > 0xFFFFFFFFull) {
    throw std::invalid_argument("record_from_json: field out of range");
  }
  r.node_id = static_cast<std::uint16_t>(node_id);
  r.seq = static_cast<std::uint32_t>(seq);
  r.ts_ms = j.at("ts_ms").get<std::uint64_t>();
  r.raw_adc = static_cast<std::uint16_t>(raw_adc);
  r.ppm = j.at("ppm").get<double>();
  r.status.category = category_from_string(j.at("status").get<std::string>());
  r.status.out_of_scale = j.at("out_of_scale").get<bool>();
  r.out_of_order = j.at("out_of_order").get<bool>();
  if (r.status != classify(r.ppm)) {
    throw std::invalid_argument("record_from_json: status does not match ppm");
  }
  if (j.at("indicator").get<std::string>() != to_string(indicator_for(r.status))) {
    throw std::invalid_argument("record_from_json: indicator does not match status");
  }
  return r;
}

inline AlertRecord alert_from_json(std::uint16_t node_id, const nlohmann::json& j) {
  AlertRecord a;
  a.node_id = node_id;
  a.ts_ms = j.at("ts_ms").get<std::uint64_t>();
  a.from = category_from_string(j.at("from").get<std::string>());
  a.to = category_from_string(j.at("to").get<std::string>());
  a.ppm = j.at("ppm").get<double>();
  if (a.from == a.to) throw std::invalid_argument("alert_from_json: from == to");
  return a;
}

// Validated, deduplicated, persisted time series per node. Records are
// write-through: the log line is flushed before ingest() returns. Recovery
// replays the newline-delimited logs and truncates a torn trailing line.
class TelemetryStore {
 public:
  struct Options {
    std::filesystem::path data_dir;
    int adc_bits = 10;
    std::size_t dedup_window = 4096;
    bool verbose = false;
  };

  explicit TelemetryStore(Options options) : options_(std::move(options)) {
    if (options_.adc_bits < 8 || options_.adc_bits > 16) {
      throw std::invalid_argument("TelemetryStore: adc_bits must be in [8, 16]");
    }
    if (options_.dedup_window < 1) {
      throw std::invalid_argument("TelemetryStore: dedup_window must be >= 1");
    }
    std::error_code ec;
    std::filesystem::create_directories(options_.data_dir, ec);
    if (ec && !std::filesystem::is_directory(options_.data_dir)) {
      throw std::runtime_error("TelemetryStore: cannot create data dir: " + ec.message());
    }
    probe_writable();
    recover();
  }

  IngestOutcome ingest(const Frame& frame, std::int64_t received_at_ms) {
    if (frame.kind != FrameKind::telemetry) {
      throw std::invalid_argument("ingest: telemetry frame required");
    }
    std::lock_guard<std::mutex> lock(mutex_);
    const std::uint32_t adc_max = (std::uint32_t{1} << options_.adc_bits) - 1;
    if (frame.payload.raw_adc > adc_max) {
      ++out_of_range_count_;
      return IngestOutcome::out_of_range;
    }
    const double ppm = static_cast<double>(frame.payload.ppm_centi) / 100.0;
    const AqiStatus status = classify(ppm);
    if (frame.payload.status_code != status_code(status)) {
      ++inconsistent_count_;
      return IngestOutcome::inconsistent;
    }
    auto it = nodes_.find(frame.node_id);
    if (it != nodes_.end() && it->second.seen.contains(frame.seq)) {
      ++duplicate_count_;
      return IngestOutcome::duplicate;
    }
    NodeState& state = it != nodes_.end() ? it->second : open_node(frame.node_id);

    ReadingRecord record;
    record.node_id = frame.node_id;
    record.seq = frame.seq;
    record.ts_ms = frame.ts_ms;
    record.raw_adc = frame.payload.raw_adc;
    record.ppm = ppm;
    record.status = status;
    record.received_at_ms = received_at_ms;
    record.out_of_order = !state.records.empty() && frame.ts_ms < state.max_ts;

    if (!append_line(state.readings_log, record_to_json(record).dump())) {
      ++storage_error_count_;
      return IngestOutcome::storage_error;
    }

    state.records.push_back(record);
    remember_seq(state, record.seq);
    state.max_ts = std::max(state.max_ts, record.ts_ms);

    if (!record.out_of_order) {
      if (state.last_in_order_category &&
          *state.last_in_order_category != record.status.category) {
        AlertRecord alert{record.node_id, record.ts_ms, *state.last_in_order_category,
                          record.status.category, record.ppm};
        if (append_line(state.alerts_log, alert_to_json(alert).dump())) {
          state.alerts.push_back(alert);
        } else {
          ++storage_error_count_;
        }
      }
      state.last_in_order_category = record.status.category;
    }
    return IngestOutcome::stored;
  }

  std::optional<ReadingRecord> latest(std::uint16_t node_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = nodes_.find(node_id);
    if (it == nodes_.end() || it->second.records.empty()) return std::nullopt;
    const auto best = std::max_element(
        it->second.records.begin(), it->second.records.end(),
        [](const ReadingRecord& a, const ReadingRecord& b) {
          return std::pair(a.ts_ms, a.seq) < std::pair(b.ts_ms, b.seq);
        });
    return *best;
  }

  // Records with from_ms <= ts_ms <= to_ms sorted by (ts_ms, seq). An unknown
  // node yields an empty list; an inverted range is an error.
  std::vector<ReadingRecord> range(std::uint16_t node_id, std::uint64_t from_ms,
                                   std::uint64_t to_ms) const {
    if (from_ms > to_ms) throw std::invalid_argument("range: from_ms > to_ms");
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<ReadingRecord> out;
    const auto it = nodes_.find(node_id);
    if (it == nodes_.end()) return out;
    for (const ReadingRecord& r : it->second.records) {
      if (r.ts_ms >= from_ms && r.ts_ms <= to_ms) out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const ReadingRecord& a, const ReadingRecord& b) {
      return std::pair(a.ts_ms, a.seq) < std::pair(b.ts_ms, b.seq);
    });
    return out;
  }

  std::vector<AlertRecord> alerts(std::uint16_t node_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = nodes_.find(node_id);
    if (it == nodes_.end()) return {};
    return it->second.alerts;
  }

  bool has_node(std::uint16_t node_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return nodes_.contains(node_id);
  }

  std::vector<NodeSummary> nodes() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<NodeSummary> out;
    out.reserve(nodes_.size());
    for (const auto& [id, state] : nodes_) {
      out.push_back({id, state.max_ts, state.records.size()});
    }
    return out;  // std::map keeps ids sorted
  }

  int adc_bits() const { return options_.adc_bits; }
  std::uint64_t duplicate_count() const { return locked_value(duplicate_count_); }
  std::uint64_t inconsistent_count() const { return locked_value(inconsistent_count_); }
  std::uint64_t out_of_range_count() const { return locked_value(out_of_range_count_); }
  std::uint64_t storage_error_count() const { return locked_value(storage_error_count_); }
  int recovery_warnings() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return recovery_warnings_;
  }

 private:
  struct NodeState {
    std::vector<ReadingRecord> records;  // arrival order
    std::vector<AlertRecord> alerts;
    std::unordered_set<std::uint32_t> seen;
    std::deque<std::uint32_t> seen_order;
    std::uint64_t max_ts = 0;
    std::optional<AqiCategory> last_in_order_category;
    std::ofstream readings_log;
    std::ofstream alerts_log;
  };

  std::uint64_t locked_value(const std::uint64_t& v) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return v;
  }

  std::filesystem::path readings_path(std::uint16_t node_id) const {
    return options_.data_dir / (std::to_string(node_id) + ".readings.jsonl");
  }
  std::filesystem::path alerts_path(std::uint16_t node_id) const {
    return options_.data_dir / (std::to_string(node_id) + ".alerts.jsonl");
  }

  void probe_writable() const {
    const auto probe = options_.data_dir / ".write-probe";
    std::ofstream out(probe, std::ios::trunc);
    out << "ok";
    out.flush();
    if (!out.good()) {
      throw std::runtime_error("TelemetryStore: data dir is not writable: " +
                               options_.data_dir.string());
    }
    out.close();
    std::error_code ec;
    std::filesystem::remove(probe, ec);
  }

  NodeState& open_node(std::uint16_t node_id) {
    NodeState& state = nodes_[node_id];
    if (!state.readings_log.is_open()) {
      state.readings_log.open(readings_path(node_id), std::ios::app);
    }
    if (!state.alerts_log.is_open()) {
      state.alerts_log.open(alerts_path(node_id), std::ios::app);
    }
    return state;
  }

  static bool append_line(std::ofstream& out, const std::string& line) {
    if (!out.is_open()) return false;
    out << line << '\n';
    out.flush();
    return out.good();
  }

  void remember_seq(NodeState& state, std::uint32_t seq) {
    state.seen.insert(seq);
    state.seen_order.push_back(seq);
    while (state.seen_order.size() > options_.dedup_window) {
      state.seen.erase(state.seen_order.front());
      state.seen_order.pop_front();
    }
  }

  // Reads a jsonl file, invoking on_line for each complete line. On the first
  // malformed line the file is truncated to the bytes before it and a warning
  // is emitted; everything after a torn write is dropped.
  template <typename Fn>
  void replay_file(const std::filesystem::path& path, Fn&& on_line) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) return;
    std::string line;
    std::uint64_t good_end = 0;
    bool corrupt = false;
    while (std::getline(in, line)) {
      if (in.eof()) {  // no trailing newline: torn write, never index it
        corrupt = true;
        break;
      }
      try {
        on_line(line);
      } catch (const std::exception&) {
        corrupt = true;
        break;
      }
      good_end += line.size() + 1;
    }
    in.close();
    if (corrupt) {
      ++recovery_warnings_;
      std::cerr << "gasduino-store: warning: truncating corrupt tail of " << path.string()
                << " at byte " << good_end << "\n";
      std::error_code ec;
      std::filesystem::resize_file(path, good_end, ec);
    }
  }

  void recover() {
    std::error_code ec;
    std::filesystem::directory_iterator it(options_.data_dir, ec);
    if (ec) return;
    std::vector<std::pair<std::uint16_t, bool>> found;  // (node, is_alerts)
    for (const auto& entry : it) {
      if (!entry.is_regular_file()) continue;
      const std::string name = entry.path().filename().string();
      bool is_alerts = false;
      std::string id_part;
      if (name.ends_with(".readings.jsonl")) {
        id_part = name.substr(0, name.size() - std::string(".readings.jsonl").size());
      } else if (name.ends_with(".alerts.jsonl")) {
        id_part = name.substr(0, name.size() - std::string(".alerts.jsonl").size());
        is_alerts = true;
      } else {
        continue;
      }
      try {
        const unsigned long id = std::stoul(id_part);
        if (id > 0xFFFF) continue;
        found.emplace_back(static_cast<std::uint16_t>(id), is_alerts);
      } catch (const std::exception&) {
        continue;
      }
    }
    std::sort(found.begin(), found.end());
    for (const auto& [node_id, is_alerts] : found) {
      if (is_alerts) {
        replay_file(alerts_path(node_id), [&](const std::string& line) {
          const AlertRecord alert = alert_from_json(node_id, nlohmann::json::parse(line));
          nodes_[node_id].alerts.push_back(alert);
        });
      } else {
        replay_file(readings_path(node_id), [&](const std::string& line) {
          ReadingRecord record = record_from_json(nlohmann::json::parse(line));
          if (record.node_id != node_id) {
            throw std::invalid_argument("recover: node id mismatch in log");
          }
          NodeState& state = nodes_[node_id];
          state.records.push_back(record);
          remember_seq(state, record.seq);
          state.max_ts = std::max(state.max_ts, record.ts_ms);
          if (!record.out_of_order) {
            state.last_in_order_category = record.status.category;
          }
        });
      }
    }
    // Reopen append streams for every recovered node.
    for (auto& [node_id, state] : nodes_) {
      state.readings_log.open(readings_path(node_id), std::ios::app);
      state.alerts_log.open(alerts_path(node_id), std::ios::app);
    }
    if (options_.verbose) {
      std::cerr << "gasduino-store: recovered " << nodes_.size() << " node(s) from "
                << options_.data_dir.string() << "\n";
    }
  }

  Options options_;
  mutable std::mutex mutex_;
  std::map<std::uint16_t, NodeState> nodes_;
  std::uint64_t duplicate_count_ = 0;
  std::uint64_t inconsistent_count_ = 0;
  std::uint64_t out_of_range_count_ = 0;
  std::uint64_t storage_error_count_ = 0;
  int recovery_warnings_ = 0;
};

}  // namespace gasduino
