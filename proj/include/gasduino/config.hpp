#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gasduino/sensor.hpp"

namespace gasduino {

// Values loadable from a JSON config file:
//   {"sensor": {"a":.., "b":.., "r0_ohms":.., "rl_ohms":.., "vcc_volts":.., "adc_bits":..},
//    "profile": {"name":"night"|"day", "points":[[t,ppm],...], "noise_sigma":.., "seed":..}}
// Every key is optional; command-line flags override file values.
struct FileConfig {
  std::optional<double> sensor_a;
  std::optional<double> sensor_b;
  std::optional<double> sensor_r0_ohms;
  std::optional<double> sensor_rl_ohms;
  std::optional<double> sensor_vcc_volts;
  std::optional<int> sensor_adc_bits;
  std::optional<std::string> profile_name;
  std::optional<std::vector<std::pair<double, double>>> profile_points;
  std::optional<double> profile_noise_sigma;
  std::optional<std::uint64_t> profile_seed;
};

inline std::vector<std::pair<double, double>> parse_profile_points(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument("profile points must be a non-empty list of [t, ppm] pairs");
  }
  std::vector<std::pair<double, double>> points;
  points.reserve(j.size());
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      throw std::invalid_argument("profile points must be [t_seconds, ppm] number pairs");
    }
    points.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  return points;
}

inline FileConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.is_open()) {
    throw std::runtime_error("cannot open config file: " + path.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config file " + path.string() + ": " + e.what());
  }

  FileConfig config;
  if (j.contains("sensor")) {
    const auto& s = j.at("sensor");
    if (s.contains("a")) config.sensor_a = s.at("a").get<double>();
    if (s.contains("b")) config.sensor_b = s.at("b").get<double>();
    if (s.contains("r0_ohms")) config.sensor_r0_ohms = s.at("r0_ohms").get<double>();
    if (s.contains("rl_ohms")) config.sensor_rl_ohms = s.at("rl_ohms").get<double>();
    if (s.contains("vcc_volts")) config.sensor_vcc_volts = s.at("vcc_volts").get<double>();
    if (s.contains("adc_bits")) config.sensor_adc_bits = s.at("adc_bits").get<int>();
  }
  if (j.contains("profile")) {
    const auto& p = j.at("profile");
    if (p.contains("name")) config.profile_name = p.at("name").get<std::string>();
    if (p.contains("points")) config.profile_points = parse_profile_points(p.at("points"));
    if (p.contains("noise_sigma")) config.profile_noise_sigma = p.at("noise_sigma").get<double>();
    if (p.contains("seed")) config.profile_seed = p.at("seed").get<std::uint64_t>();
  }
  return config;
}

// Profile file for `--profile file:<path>`: a JSON list of [t_seconds, ppm].
inline AmbientProfile load_profile_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.is_open()) {
    throw std::runtime_error("cannot open profile file: " + path.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("profile file " + path.string() + ": " + e.what());
  }
  AmbientProfile profile;
  profile.points = parse_profile_points(j);
  profile.validate();
  return profile;
}

inline SensorCurve curve_from_config(const FileConfig& config) {
  SensorCurve curve = default_curve();
  if (config.sensor_a) curve.a = *config.sensor_a;
  if (config.sensor_b) curve.b = *config.sensor_b;
  if (config.sensor_r0_ohms) curve.r0_ohms = *config.sensor_r0_ohms;
  if (config.sensor_rl_ohms) curve.rl_ohms = *config.sensor_rl_ohms;
  if (config.sensor_vcc_volts) curve.vcc_volts = *config.sensor_vcc_volts;
  if (config.sensor_adc_bits) curve.adc_bits = *config.sensor_adc_bits;
  curve.validate();
  return curve;
}

}  // namespace gasduino
