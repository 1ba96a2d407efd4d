// gasduino: simulated MQ-135 air-quality telemetry stack.
//   server    run the ingestion + query service
//   node      run a simulated sensor node streaming telemetry
//   query     fetch readings/alerts as json, csv, or an ascii chart
//   classify  classify a ppm value offline
//
// Exit codes: 0 success, 1 usage/input error, 2 environment/connection
// error, 3 not found.

#include <atomic>
#include <chrono>
#include <clocale>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "gasduino/aqi.hpp"
#include "gasduino/chart.hpp"
#include "gasduino/config.hpp"
#include "gasduino/net.hpp"
#include "gasduino/node.hpp"
#include "gasduino/sensor.hpp"
#include "gasduino/server.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitEnvironment = 2;
constexpr int kExitNotFound = 3;

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

void install_signal_handlers() {
  struct sigaction sa{};
  sa.sa_handler = handle_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

std::pair<std::string, std::uint16_t> parse_hostport(const std::string& text,
                                                     std::uint16_t default_port) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) {
    return {text.empty() ? std::string("127.0.0.1") : text, default_port};
  }
  std::string host = text.substr(0, colon);
  if (host.empty()) host = "0.0.0.0";
  const std::string port_text = text.substr(colon + 1);
  char* end = nullptr;
  const unsigned long port = std::strtoul(port_text.c_str(), &end, 10);
  if (end == port_text.c_str() || *end != '\0' || port > 0xFFFF) {
    throw std::invalid_argument("bad port in address '" + text + "'");
  }
  return {host, static_cast<std::uint16_t>(port)};
}

std::optional<gasduino::FileConfig> load_config(const std::string& flag_path) {
  std::string path = flag_path;
  if (path.empty()) {
    if (const char* env = std::getenv("GASDUINO_CONFIG")) path = env;
  }
  if (path.empty()) return std::nullopt;
  return gasduino::load_config_file(path);
}

gasduino::AmbientProfile profile_from_spec(const std::string& spec) {
  using gasduino::AmbientProfile;
  if (spec == "night") return gasduino::night_profile();
  if (spec == "day") return gasduino::day_profile();
  if (spec.starts_with("constant:")) {
    const std::string value = spec.substr(std::string("constant:").size());
    char* end = nullptr;
    const double ppm = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0' || !std::isfinite(ppm) || ppm < 0.0) {
      throw std::invalid_argument("bad constant profile value '" + value + "'");
    }
    return gasduino::constant_profile(ppm);
  }
  if (spec.starts_with("file:")) {
    return gasduino::load_profile_file(spec.substr(std::string("file:").size()));
  }
  throw std::invalid_argument("unknown profile '" + spec +
                              "' (expected night|day|constant:<ppm>|file:<path>)");
}

struct ServerArgs {
  std::string listen = "0.0.0.0:7474";
  std::string http = "0.0.0.0:8080";
  std::string data_dir = "./data";
};

int cmd_server(const ServerArgs& args, bool verbose) {
  gasduino::ServiceConfig config;
  try {
    std::tie(config.ingest_host, config.ingest_port) = parse_hostport(args.listen, 7474);
    std::tie(config.http_host, config.http_port) = parse_hostport(args.http, 8080);
  } catch (const std::exception& e) {
    std::cerr << "gasduino server: " << e.what() << "\n";
    return kExitUsage;
  }
  config.data_dir = args.data_dir;
  config.verbose = verbose;

  std::optional<gasduino::CloudService> service;
  try {
    service.emplace(config);
  } catch (const std::exception& e) {
    std::cerr << "gasduino server: " << e.what() << "\n";
    return kExitEnvironment;
  }
  std::string error;
  if (!service->start(&error)) {
    std::cerr << "gasduino server: " << error << "\n";
    return kExitEnvironment;
  }
  std::cerr << "gasduino server: ingest on " << config.ingest_host << ":"
            << service->ingest_port() << ", http on " << config.http_host << ":"
            << service->http_port() << ", data in " << config.data_dir.string() << "\n";
  while (!g_stop.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  service->stop();
  if (verbose) std::cerr << "gasduino server: stopped\n";
  return kExitOk;
}

struct NodeArgs {
  std::uint16_t id = 1;
  std::string server = "127.0.0.1:7474";
  std::string profile;
  std::int64_t interval_ms = 1000;
  double time_scale = 1.0;
  double duration_s = -1.0;  // < 0: run until interrupted
  std::optional<std::uint64_t> seed;
  std::optional<double> noise_sigma;
  bool profile_given = false;
};

int cmd_node(const NodeArgs& args, const std::optional<gasduino::FileConfig>& file_config,
             bool verbose) {
  gasduino::SensorCurve curve;
  gasduino::AmbientProfile profile;
  gasduino::NodeConfig node_config;
  try {
    const gasduino::FileConfig fc = file_config.value_or(gasduino::FileConfig{});
    curve = gasduino::curve_from_config(fc);
    if (args.profile_given) {
      profile = profile_from_spec(args.profile);
    } else if (fc.profile_points) {
      profile.points = *fc.profile_points;
    } else if (fc.profile_name) {
      profile = profile_from_spec(*fc.profile_name);
    } else {
      profile = gasduino::night_profile();
    }
    if (args.noise_sigma) {
      profile.noise_sigma = *args.noise_sigma;
    } else if (fc.profile_noise_sigma) {
      profile.noise_sigma = *fc.profile_noise_sigma;
    }
    if (args.seed) {
      profile.seed = *args.seed;
    } else if (fc.profile_seed) {
      profile.seed = *fc.profile_seed;
    }
    profile.validate();

    node_config.node_id = args.id;
    std::tie(node_config.server_host, node_config.server_port) =
        parse_hostport(args.server, 7474);
    node_config.interval_ms = args.interval_ms;
    node_config.time_scale = args.time_scale;
    node_config.backoff_seed = profile.seed ^ 0xB0FF;
    node_config.validate();
  } catch (const std::exception& e) {
    std::cerr << "gasduino node: " << e.what() << "\n";
    return kExitUsage;
  }

  if (verbose) {
    std::cerr << "gasduino node " << node_config.node_id << ": streaming to "
              << node_config.server_host << ":" << node_config.server_port << "\n";
  }
  try {
    gasduino::SystemClock clock;
    gasduino::TcpTransport transport;
    gasduino::NodeAgent agent(node_config, profile, curve);
    const gasduino::RunSummary summary = agent.run(args.duration_s, clock, transport, g_stop);
    std::printf("sampled=%llu delivered=%llu dropped=%llu buffered=%llu reconnects=%u\n",
                static_cast<unsigned long long>(summary.sampled),
                static_cast<unsigned long long>(summary.delivered),
                static_cast<unsigned long long>(summary.dropped),
                static_cast<unsigned long long>(summary.buffered), summary.reconnects);
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "gasduino node: " << e.what() << "\n";
    return kExitUsage;
  }
}

struct QueryArgs {
  std::string mode;  // latest | range | alerts
  std::string http = "127.0.0.1:8080";
  std::uint16_t node = 0;
  std::uint64_t from_ms = 0;
  std::uint64_t to_ms = UINT64_MAX;
  std::string format = "json";
};

void print_records_csv(const nlohmann::json& records) {
  std::printf("ts_ms,node_id,seq,raw_adc,ppm,status,out_of_scale\n");
  for (const auto& r : records) {
    std::printf("%s,%s,%s,%s,%s,%s,%s\n", r.at("ts_ms").dump().c_str(),
                r.at("node_id").dump().c_str(), r.at("seq").dump().c_str(),
                r.at("raw_adc").dump().c_str(), r.at("ppm").dump().c_str(),
                r.at("status").get<std::string>().c_str(),
                r.at("out_of_scale").get<bool>() ? "true" : "false");
  }
}

void print_alerts_csv(const nlohmann::json& alerts, std::uint16_t node_id) {
  std::printf("ts_ms,node_id,from,to,ppm\n");
  for (const auto& a : alerts) {
    std::printf("%s,%u,%s,%s,%s\n", a.at("ts_ms").dump().c_str(), node_id,
                a.at("from").get<std::string>().c_str(),
                a.at("to").get<std::string>().c_str(), a.at("ppm").dump().c_str());
  }
}

int print_records_chart(const nlohmann::json& records) {
  std::vector<std::pair<double, double>> points;
  points.reserve(records.size());
  for (const auto& r : records) {
    points.emplace_back(r.at("ts_ms").get<double>(), r.at("ppm").get<double>());
  }
  std::fputs(gasduino::render_chart(points).c_str(), stdout);
  if (!records.empty()) {
    const auto& last = records.back();
    const gasduino::AqiStatus status{
        gasduino::category_from_string(last.at("status").get<std::string>()),
        last.at("out_of_scale").get<bool>()};
    std::printf("latest: %s %s %s\n", last.at("ppm").dump().c_str(),
                std::string(gasduino::to_string(status.category)).c_str(),
                std::string(gasduino::to_string(gasduino::indicator_for(status))).c_str());
  }
  return kExitOk;
}

int cmd_query(const QueryArgs& args) {
  if (args.from_ms > args.to_ms) {
    std::cerr << "gasduino query: --from must not exceed --to\n";
    return kExitUsage;
  }
  if (args.format == "chart" && args.mode == "alerts") {
    std::cerr << "gasduino query: chart format applies to latest/range only\n";
    return kExitUsage;
  }

  std::string host;
  std::uint16_t port = 0;
  try {
    std::tie(host, port) = parse_hostport(args.http, 8080);
  } catch (const std::exception& e) {
    std::cerr << "gasduino query: " << e.what() << "\n";
    return kExitUsage;
  }

  std::string path = "/nodes/" + std::to_string(args.node);
  if (args.mode == "latest") {
    path += "/latest";
  } else if (args.mode == "alerts") {
    path += "/alerts";
  } else {
    path += "/range?from=" + std::to_string(args.from_ms) + "&to=" + std::to_string(args.to_ms);
  }

  httplib::Client client(host, port);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(30, 0);
  const httplib::Result res = client.Get(path);
  if (!res) {
    std::cerr << "gasduino query: cannot reach http://" << host << ":" << port << "\n";
    return kExitEnvironment;
  }
  if (res->status == 404) {
    std::cerr << res->body << "\n";
    return kExitNotFound;
  }
  if (res->status == 400) {
    std::cerr << res->body << "\n";
    return kExitUsage;
  }
  if (res->status != 200) {
    std::cerr << "gasduino query: server returned status " << res->status << "\n";
    return kExitEnvironment;
  }

  if (args.format == "json") {
    std::printf("%s\n", res->body.c_str());
    return kExitOk;
  }

  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "gasduino query: bad response: " << e.what() << "\n";
    return kExitEnvironment;
  }
  nlohmann::json records = nlohmann::json::array();
  if (args.mode == "latest") {
    records.push_back(body);
  } else if (args.mode == "range") {
    records = body.at("records");
  }

  if (args.format == "csv") {
    if (args.mode == "alerts") {
      print_alerts_csv(body.at("alerts"), args.node);
    } else {
      print_records_csv(records);
    }
    return kExitOk;
  }
  return print_records_chart(records);
}

int cmd_classify(const std::string& ppm_text) {
  char* end = nullptr;
  const double ppm = std::strtod(ppm_text.c_str(), &end);
  if (end == ppm_text.c_str() || *end != '\0' || !std::isfinite(ppm) || ppm < 0.0) {
    std::cerr << "gasduino classify: ppm must be a non-negative number\n";
    return kExitUsage;
  }
  const gasduino::AqiStatus status = gasduino::classify(ppm);
  std::printf("%s %s %s\n", ppm_text.c_str(),
              std::string(gasduino::to_string(status.category)).c_str(),
              std::string(gasduino::to_string(gasduino::indicator_for(status))).c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  install_signal_handlers();

  CLI::App app{"gasduino: simulated air-quality telemetry stack"};
  app.require_subcommand(1);
  std::string config_path;
  bool verbose = false;
  app.add_option("--config", config_path,
                 "JSON config file (sensor.*, profile.*); env GASDUINO_CONFIG");
  app.add_flag("--verbose", verbose, "diagnostics on stderr");

  ServerArgs server_args;
  auto* server = app.add_subcommand("server", "run the ingestion + query service");
  server->add_option("--listen", server_args.listen, "telemetry listener address")
      ->capture_default_str();
  server->add_option("--http", server_args.http, "query API address")->capture_default_str();
  server->add_option("--data-dir", server_args.data_dir, "persistence directory")
      ->capture_default_str();

  NodeArgs node_args;
  auto* node = app.add_subcommand("node", "run a simulated sensor node");
  node->add_option("--id", node_args.id, "node id")->capture_default_str();
  node->add_option("--server", node_args.server, "telemetry server address")
      ->capture_default_str();
  node->add_option("--profile", node_args.profile,
                   "night|day|constant:<ppm>|file:<path> (default night)");
  node->add_option("--interval-ms", node_args.interval_ms, "sampling period, simulated ms")
      ->capture_default_str();
  node->add_option("--time-scale", node_args.time_scale, "simulated seconds per real second")
      ->capture_default_str();
  node->add_option("--duration-s", node_args.duration_s,
                   "simulated seconds to run (omit: until interrupted)");
  std::uint64_t seed_value = 0;
  auto* seed_opt = node->add_option("--seed", seed_value, "noise RNG seed");
  double noise_value = 0.0;
  auto* noise_opt = node->add_option("--noise-sigma", noise_value, "ambient noise std-dev, PPM");

  QueryArgs query_args;
  auto* query = app.add_subcommand("query", "query the service");
  query->add_option("mode", query_args.mode, "latest|range|alerts")
      ->required()
      ->check(CLI::IsMember({"latest", "range", "alerts"}));
  query->add_option("--http", query_args.http, "query API address")->capture_default_str();
  query->add_option("--node", query_args.node, "node id")->required();
  query->add_option("--from", query_args.from_ms, "range start, ms since epoch");
  query->add_option("--to", query_args.to_ms, "range end, ms since epoch");
  query->add_option("--format", query_args.format, "json|csv|chart")
      ->capture_default_str()
      ->check(CLI::IsMember({"json", "csv", "chart"}));

  std::string classify_ppm;
  auto* classify = app.add_subcommand("classify", "classify a ppm value offline");
  classify->add_option("ppm", classify_ppm, "ppm value")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  std::optional<gasduino::FileConfig> file_config;
  try {
    file_config = load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "gasduino: " << e.what() << "\n";
    return kExitUsage;
  }

  if (server->parsed()) return cmd_server(server_args, verbose);
  if (node->parsed()) {
    node_args.profile_given = node->count("--profile") > 0;
    if (*seed_opt) node_args.seed = seed_value;
    if (*noise_opt) node_args.noise_sigma = noise_value;
    return cmd_node(node_args, file_config, verbose);
  }
  if (query->parsed()) return cmd_query(query_args);
  if (classify->parsed()) return cmd_classify(classify_ppm);
  return kExitUsage;
}
