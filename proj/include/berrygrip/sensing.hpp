#pragma once

#include <cstdint>

#include "berrygrip/rng.hpp"

namespace berrygrip {

// Linear force-to-voltage model of the fingertip sensor plus its amplifier:
// V = v_ref + slope * F, clamped to the output range.
struct SensorCalibration {
  double v_ref = 3.0;
  double v_supply = 5.0;
  double slope_v_per_n = 0.0;
  double v_min = 0.0;
  double v_max = 5.0;

  void validate() const;

  // Smallest force that rails the output; readings at or above are lossy.
  double saturation_force_n() const { return (v_max - v_ref) / slope_v_per_n; }
  bool saturates(double force_n) const { return v_ref + slope_v_per_n * force_n >= v_max; }

  // Amplifier tuned on the bench: the 3.9 N span load (120% of the expected
  // working maximum) maps to 90% of the 5 V supply.
  static SensorCalibration procedure();
  // Gain used during the 2020 field season; rails just above 0.38 N.
  static SensorCalibration field2020();
};

// Derives a calibration from a zero-load reading and one span point.
SensorCalibration two_point_calibrate(double span_force_n, double zero_voltage_v,
                                      double span_voltage_v);

double force_to_voltage(double force_n, const SensorCalibration& cal);

enum class ReadingStatus { ok, saturated, under_reference };

struct ForceReading {
  double force_n = 0.0;  // for saturated readings, the smallest force consistent with the rail
  ReadingStatus status = ReadingStatus::ok;
};

// Classifies a voltage without throwing; saturated readings are lower bounds.
ForceReading interpret_voltage(double voltage_v, const SensorCalibration& cal);

// Strict conversion; throws unless the reading is unambiguous.
double voltage_to_force(double voltage_v, const SensorCalibration& cal);

struct AdcModel {
  int bits = 10;
  double full_scale_v = 5.0;

  void validate() const;
  int max_count() const { return (1 << bits) - 1; }
};

int adc_quantize(double voltage_v, const AdcModel& adc);
double adc_dequantize(int counts, const AdcModel& adc);

// Additive Gaussian amplifier noise; one stream per sensor channel.
struct NoiseModel {
  double std_dev_v = 0.005;
  std::uint64_t stream = 0;

  void validate() const;
};

class NoiseStream {
 public:
  NoiseStream(const NoiseModel& model, std::uint64_t seed)
      : rng_(seed, model.stream), std_dev_v_(model.std_dev_v) {}

  double apply(double voltage_v) {
    if (std_dev_v_ == 0.0) return voltage_v;
    return voltage_v + std_dev_v_ * rng_.gaussian();
  }

 private:
  RandomStream rng_;
  double std_dev_v_;
};

// Full measurement chain: transduce, add noise, clamp to the rails, and
// optionally round-trip through the ADC.
double measure_voltage(double force_n, const SensorCalibration& cal, NoiseStream* noise,
                       const AdcModel* adc);

}  // namespace berrygrip
