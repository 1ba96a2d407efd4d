#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace gasduino {

// Sensor voltage collapsed to or below zero; the divider inversion is undefined.
struct SaturationError : std::domain_error {
  using std::domain_error::domain_error;
};

// Power-law sensitivity curve ppm = a * (Rs/R0)^b plus the electrical
// configuration of the measuring chain (voltage divider into an ADC).
struct SensorCurve {
  double a = 0.0;        // PPM at Rs/R0 = 1
  double b = 0.0;        // exponent, negative for MQ-family sensors
  double r0_ohms = 0.0;  // clean-air calibration resistance
  double rl_ohms = 0.0;  // load resistance of the divider
  double vcc_volts = 0.0;
  int adc_bits = 10;

  std::uint32_t adc_max() const { return (std::uint32_t{1} << adc_bits) - 1; }

  void validate() const {
    if (!(a > 0.0)) throw std::invalid_argument("SensorCurve: a must be > 0");
    if (!(b < 0.0)) throw std::invalid_argument("SensorCurve: b must be < 0");
    if (!(r0_ohms > 0.0)) throw std::invalid_argument("SensorCurve: r0_ohms must be > 0");
    if (!(rl_ohms > 0.0)) throw std::invalid_argument("SensorCurve: rl_ohms must be > 0");
    if (!(vcc_volts > 0.0)) throw std::invalid_argument("SensorCurve: vcc_volts must be > 0");
    if (adc_bits < 8 || adc_bits > 16) {
      throw std::invalid_argument("SensorCurve: adc_bits must be in [8, 16]");
    }
  }
};

struct CurveAnchor {
  double ratio = 0.0;  // Rs/R0
  double ppm = 0.0;
};

// ADC count -> divider voltage.
inline double adc_to_voltage(std::uint32_t raw, const SensorCurve& curve) {
  if (raw > curve.adc_max()) {
    throw std::out_of_range("adc_to_voltage: raw count beyond ADC range");
  }
  return static_cast<double>(raw) / static_cast<double>(curve.adc_max()) * curve.vcc_volts;
}

// Divider voltage -> sensor resistance. The load sits on the low side, so
// Rs = RL * (Vcc - V) / V.
inline double voltage_to_rs(double v, const SensorCurve& curve) {
  if (!(v > 0.0)) {
    throw SaturationError("voltage_to_rs: non-positive voltage (shorted or open sensor)");
  }
  if (v > curve.vcc_volts) {
    throw std::out_of_range("voltage_to_rs: voltage above vcc");
  }
  return curve.rl_ohms * (curve.vcc_volts - v) / v;
}

inline double ratio_to_ppm(double ratio, const SensorCurve& curve) {
  if (!(ratio > 0.0)) {
    throw std::domain_error("ratio_to_ppm: ratio must be > 0");
  }
  return curve.a * std::pow(ratio, curve.b);
}

// Full forward chain: ADC count -> PPM.
inline double adc_to_ppm(std::uint32_t raw, const SensorCurve& curve) {
  const double v = adc_to_voltage(raw, curve);
  const double rs = voltage_to_rs(v, curve);
  return ratio_to_ppm(rs / curve.r0_ohms, curve);
}

// Two-point log-log fit. Returns (a, b) such that ppm = a * ratio^b passes
// through both anchors.
inline std::pair<double, double> fit_curve(CurveAnchor first, CurveAnchor second) {
  if (!(first.ratio > 0.0) || !(second.ratio > 0.0) || !(first.ppm > 0.0) ||
      !(second.ppm > 0.0)) {
    throw std::domain_error("fit_curve: anchors must have positive ratio and ppm");
  }
  if (first.ratio == second.ratio) {
    throw std::invalid_argument("fit_curve: degenerate fit, anchor ratios are equal");
  }
  const double b = std::log(first.ppm / second.ppm) / std::log(first.ratio / second.ratio);
  const double a = first.ppm / std::pow(first.ratio, b);
  return {a, b};
}

// Noise-free inverse chain: PPM -> quantized ADC count, clamped to range.
inline std::uint32_t ppm_to_adc(double ppm, const SensorCurve& curve) {
  if (!(ppm > 0.0)) {
    throw std::domain_error("ppm_to_adc: ppm must be > 0");
  }
  const double ratio = std::pow(ppm / curve.a, 1.0 / curve.b);
  const double rs = ratio * curve.r0_ohms;
  const double v = curve.vcc_volts * curve.rl_ohms / (curve.rl_ohms + rs);
  const double scaled = v / curve.vcc_volts * static_cast<double>(curve.adc_max());
  const long long raw = std::llround(scaled);
  return static_cast<std::uint32_t>(
      std::clamp<long long>(raw, 0, static_cast<long long>(curve.adc_max())));
}

// PPM width of one ADC step at the operating point of `ppm`. Used as the
// quantization bound for inverse-chain roundtrips.
inline double lsb_ppm_width(double ppm, const SensorCurve& curve) {
  const std::uint32_t raw = ppm_to_adc(ppm, curve);
  const std::uint32_t neighbor = raw < curve.adc_max() ? raw + 1 : raw - 1;
  return std::abs(adc_to_ppm(neighbor, curve) - adc_to_ppm(raw, curve));
}

// Clean-air calibration: R0 = mean(Rs) / clean-air ratio.
inline double calibrate_r0(std::span<const double> rs_samples, double clean_air_ratio) {
  if (rs_samples.empty()) {
    throw std::invalid_argument("calibrate_r0: no samples");
  }
  if (!(clean_air_ratio > 0.0)) {
    throw std::invalid_argument("calibrate_r0: clean_air_ratio must be > 0");
  }
  double sum = 0.0;
  for (double rs : rs_samples) {
    if (!(rs > 0.0)) {
      throw std::invalid_argument("calibrate_r0: non-positive sample");
    }
    sum += rs;
  }
  return sum / static_cast<double>(rs_samples.size()) / clean_air_ratio;
}

// Default MQ-135 configuration: curve fitted from two points read off the
// sensitivity chart (Rs/R0 2.6 at 10 PPM, 0.8 at 200 PPM), 10 kohm load,
// 5 V supply, 10-bit ADC, R0 calibrated to 10 kohm.
inline SensorCurve default_curve() {
  const auto [a, b] = fit_curve({2.6, 10.0}, {0.8, 200.0});
  SensorCurve curve{a, b, 10'000.0, 10'000.0, 5.0, 10};
  curve.validate();
  return curve;
}

// Piecewise-linear PPM schedule with additive Gaussian noise.
struct AmbientProfile {
  std::vector<std::pair<double, double>> points;  // (t seconds, ppm), t strictly increasing
  double noise_sigma = 1.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (points.empty()) throw std::invalid_argument("AmbientProfile: empty schedule");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("AmbientProfile: negative noise_sigma");
    double prev_t = -1.0;
    bool first = true;
    for (const auto& [t, ppm] : points) {
      if (!std::isfinite(t) || !std::isfinite(ppm)) {
        throw std::invalid_argument("AmbientProfile: non-finite point");
      }
      if (!first && !(t > prev_t)) {
        throw std::invalid_argument("AmbientProfile: times must be strictly increasing");
      }
      if (ppm < 0.0) throw std::invalid_argument("AmbientProfile: negative ppm");
      prev_t = t;
      first = false;
    }
  }
};

inline AmbientProfile night_profile() { return {{{0.0, 70.0}, {7200.0, 40.0}}, 1.0, 1}; }
inline AmbientProfile day_profile() { return {{{0.0, 30.0}, {7200.0, 44.0}}, 1.0, 1}; }
inline AmbientProfile constant_profile(double ppm) { return {{{0.0, ppm}}, 1.0, 1}; }

// Noise-free schedule lookup; clamps outside [t_first, t_last].
inline double profile_ppm_at(const AmbientProfile& profile, double t) {
  const auto& pts = profile.points;
  if (pts.empty()) throw std::invalid_argument("profile_ppm_at: empty schedule");
  if (t <= pts.front().first) return pts.front().second;
  if (t >= pts.back().first) return pts.back().second;
  const auto after = std::upper_bound(
      pts.begin(), pts.end(), t,
      [](double value, const std::pair<double, double>& p) { return value < p.first; });
  const auto before = std::prev(after);
  const double span = after->first - before->first;
  const double frac = (t - before->first) / span;
  return before->second + frac * (after->second - before->second);
}

// One simulated ADC reading.
struct AdcReading {
  std::uint32_t raw = 0;
  double t = 0.0;  // seconds from simulation start
};

// Owns the profile's RNG; one instance per sampling sequence. Noise draws are
// a Box-Muller transform over mt19937_64 so the sequence is reproducible for
// a given seed on any platform.
class SensorSimulator {
 public:
  SensorSimulator(AmbientProfile profile, SensorCurve curve)
      : profile_(std::move(profile)), curve_(curve), rng_(profile_.seed) {
    profile_.validate();
    curve_.validate();
  }

  AdcReading sample(double t) {
    double ambient = profile_ppm_at(profile_, t);
    if (profile_.noise_sigma > 0.0) {
      ambient += profile_.noise_sigma * next_gaussian();
    }
    ambient = std::max(ambient, 0.01);
    return {ppm_to_adc(ambient, curve_), t};
  }

  const SensorCurve& curve() const { return curve_; }
  const AmbientProfile& profile() const { return profile_; }

 private:
  double uniform01() {  // [0, 1), 53-bit
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  }

  double next_gaussian() {
    const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643 * u2);
  }

  AmbientProfile profile_;
  SensorCurve curve_;
  std::mt19937_64 rng_;
};

}  // namespace gasduino
