#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gasduino {

// Air quality categories, ordered by severity.
enum class AqiCategory : std::uint8_t { good = 0, moderate = 1, unhealthy = 2 };

// Classification result. out_of_scale marks readings beyond the 200 PPM
// top of the defined scale; it only occurs together with unhealthy.
struct AqiStatus {
  AqiCategory category = AqiCategory::good;
  bool out_of_scale = false;

  friend bool operator==(const AqiStatus&, const AqiStatus&) = default;
};

enum class IndicatorColor : std::uint8_t { green = 0, blue = 1, red = 2 };

inline constexpr double kGoodMaxPpm = 50.0;
inline constexpr double kModerateMaxPpm = 150.0;
inline constexpr double kScaleMaxPpm = 200.0;

// Threshold classification over real PPM values:
//   [0, 50] good, (50, 150] moderate, (150, inf) unhealthy, > 200 out of scale.
inline AqiStatus classify(double ppm) {
  if (!std::isfinite(ppm) || ppm < 0.0) {
    throw std::domain_error("classify: ppm must be finite and non-negative");
  }
  AqiStatus status;
  if (ppm <= kGoodMaxPpm) {
    status.category = AqiCategory::good;
  } else if (ppm <= kModerateMaxPpm) {
    status.category = AqiCategory::moderate;
  } else {
    status.category = AqiCategory::unhealthy;
  }
  status.out_of_scale = ppm > kScaleMaxPpm;
  return status;
}

inline IndicatorColor indicator_for(AqiStatus status) {
  switch (status.category) {
    case AqiCategory::good: return IndicatorColor::green;
    case AqiCategory::moderate: return IndicatorColor::blue;
    case AqiCategory::unhealthy: return IndicatorColor::red;
  }
  throw std::domain_error("indicator_for: invalid category");
}

inline std::string_view to_string(AqiCategory category) {
  switch (category) {
    case AqiCategory::good: return "good";
    case AqiCategory::moderate: return "moderate";
    case AqiCategory::unhealthy: return "unhealthy";
  }
  throw std::domain_error("to_string: invalid category");
}

inline std::string_view to_string(IndicatorColor color) {
  switch (color) {
    case IndicatorColor::green: return "green";
    case IndicatorColor::blue: return "blue";
    case IndicatorColor::red: return "red";
  }
  throw std::domain_error("to_string: invalid color");
}

inline AqiCategory category_from_string(std::string_view text) {
  if (text == "good") return AqiCategory::good;
  if (text == "moderate") return AqiCategory::moderate;
  if (text == "unhealthy") return AqiCategory::unhealthy;
  throw std::invalid_argument("category_from_string: unknown category '" + std::string(text) + "'");
}

// Human-readable description for display surfaces.
inline std::string describe(AqiStatus status) {
  std::string text;
  switch (status.category) {
    case AqiCategory::good:
      text = "Air pollution is little with no risk. The cleanness of the air is satisfied.";
      break;
    case AqiCategory::moderate:
      text =
          "Accepted quality of the air conditions, but some pollutants may cause diseases for "
          "sensitive people.";
      break;
    case AqiCategory::unhealthy:
      text = "Very harmful and may cause death.";
      break;
  }
  if (status.out_of_scale) {
    text += " Reading is above the measurable scale (200 PPM).";
  }
  return text;
}

inline constexpr std::uint8_t kOutOfScaleBit = 0x80;

// Wire/status byte: low bits carry the category, bit 7 the out-of-scale flag.
inline std::uint8_t status_code(AqiStatus status) {
  return static_cast<std::uint8_t>(status.category) |
         (status.out_of_scale ? kOutOfScaleBit : std::uint8_t{0});
}

inline AqiStatus status_from_code(std::uint8_t code) {
  const std::uint8_t raw_category = code & static_cast<std::uint8_t>(~kOutOfScaleBit);
  if (raw_category > static_cast<std::uint8_t>(AqiCategory::unhealthy)) {
    throw std::invalid_argument("status_from_code: unknown category bits");
  }
  AqiStatus status{static_cast<AqiCategory>(raw_category), (code & kOutOfScaleBit) != 0};
  if (status.out_of_scale && status.category != AqiCategory::unhealthy) {
    throw std::invalid_argument("status_from_code: out-of-scale flag requires unhealthy");
  }
  return status;
}

}  // namespace gasduino
