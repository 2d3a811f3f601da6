#include "berrygrip/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace berrygrip {

void SensorCalibration::validate() const {
  if (!(slope_v_per_n > 0.0)) throw std::invalid_argument("sensor slope must be positive");
  if (!(v_supply > 0.0)) throw std::invalid_argument("sensor supply must be positive");
  if (!(v_min < v_max)) throw std::invalid_argument("sensor range requires v_min < v_max");
  if (v_ref < v_min || v_ref > v_max)
    throw std::invalid_argument("sensor reference voltage outside output range");
}

SensorCalibration SensorCalibration::procedure() {
  return two_point_calibrate(3.9, 3.0, 0.9 * 5.0);
}

SensorCalibration SensorCalibration::field2020() {
  SensorCalibration cal;
  cal.slope_v_per_n = 5.232;
  cal.validate();
  return cal;
}

SensorCalibration two_point_calibrate(double span_force_n, double zero_voltage_v,
                                      double span_voltage_v) {
  if (!(span_force_n > 0.0))
    throw std::invalid_argument("calibration span force must be positive");
  if (!(span_voltage_v > zero_voltage_v))
    throw std::invalid_argument("calibration span voltage must exceed the zero reading");
  SensorCalibration cal;
  cal.v_ref = zero_voltage_v;
  cal.slope_v_per_n = (span_voltage_v - zero_voltage_v) / span_force_n;
  cal.validate();
  return cal;
}

double force_to_voltage(double force_n, const SensorCalibration& cal) {
  if (force_n < 0.0) throw std::out_of_range("contact force must be nonnegative");
  const double v = cal.v_ref + cal.slope_v_per_n * force_n;
  return std::clamp(v, cal.v_min, cal.v_max);
}

ForceReading interpret_voltage(double voltage_v, const SensorCalibration& cal) {
  if (voltage_v >= cal.v_max)
    return {(cal.v_max - cal.v_ref) / cal.slope_v_per_n, ReadingStatus::saturated};
  if (voltage_v < cal.v_ref)
    return {0.0, ReadingStatus::under_reference};
  return {(voltage_v - cal.v_ref) / cal.slope_v_per_n, ReadingStatus::ok};
}

double voltage_to_force(double voltage_v, const SensorCalibration& cal) {
  const ForceReading r = interpret_voltage(voltage_v, cal);
  if (r.status == ReadingStatus::saturated)
    throw std::out_of_range("sensor saturated: force unknown beyond the rail");
  if (r.status == ReadingStatus::under_reference)
    throw std::out_of_range("voltage below reference: no contact force maps there");
  return r.force_n;
}

void AdcModel::validate() const {
  if (bits < 1 || bits > 24) throw std::invalid_argument("adc bits out of range");
  if (!(full_scale_v > 0.0)) throw std::invalid_argument("adc full scale must be positive");
}

int adc_quantize(double voltage_v, const AdcModel& adc) {
  if (voltage_v < 0.0 || voltage_v > adc.full_scale_v)
    throw std::out_of_range("adc input outside the conversion range");
  return static_cast<int>(std::lround(voltage_v / adc.full_scale_v * adc.max_count()));
}

double adc_dequantize(int counts, const AdcModel& adc) {
  if (counts < 0 || counts > adc.max_count())
    throw std::out_of_range("adc counts outside the code range");
  return static_cast<double>(counts) / adc.max_count() * adc.full_scale_v;
}

void NoiseModel::validate() const {
  if (std_dev_v < 0.0) throw std::invalid_argument("noise std dev must be nonnegative");
}

double measure_voltage(double force_n, const SensorCalibration& cal, NoiseStream* noise,
                       const AdcModel* adc) {
  double v = force_to_voltage(force_n, cal);
  if (noise) v = noise->apply(v);
  v = std::clamp(v, cal.v_min, cal.v_max);
  if (adc) v = adc_dequantize(adc_quantize(v, *adc), *adc);
  return v;
}

}  // namespace berrygrip
