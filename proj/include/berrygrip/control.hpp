#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "berrygrip/sensing.hpp"

namespace berrygrip {

// PD force loop. Gains are in stepper speed per volt of error (kp) and per
// volt-per-tick of error change (kd); there is no integral term by design.
struct ControllerParams {
  double kp = 4000.0;              // steps/s per V
  double kd = 125.0;               // steps/s per (V/tick)
  double tick_rate_hz = 10000.0;
  double deadband_v = 0.02;
  double max_step_rate = 10000.0;  // steps/s

  void validate() const;
};

// Stepper plus lead screw. The screw is not back-drivable, so a de-energized
// motor holds retraction exactly.
struct ActuatorModel {
  double steps_per_mm = 100.0;
  double travel_min_mm = 0.0;
  double travel_max_mm = 10.0;
  bool back_drivable = false;  // quasi-static model: motor-off always holds position

  void validate() const;
};

struct ControllerState {
  double retraction_mm = 0.0;
  double prev_error_v = 0.0;
  bool motor_on = false;
  std::uint64_t tick = 0;
};

// Commanded speed in steps/s, clamped to the drive ceiling. Positive error
// (measured force below threshold) retracts the tendon further.
inline double pd_speed(double error_v, double d_error_v_per_tick, const ControllerParams& p) {
  const double raw = p.kp * error_v + p.kd * d_error_v_per_tick;
  return std::clamp(raw, -p.max_step_rate, p.max_step_rate);
}

// One 100 us control period: error against the highest of the three finger
// voltages, deadband gate, PD speed, travel-limited advance.
inline ControllerState control_tick(const ControllerState& state,
                                    const std::array<double, 3>& measured_v,
                                    double threshold_v, const ControllerParams& p,
                                    const ActuatorModel& act, double v_limit = 5.0) {
  for (double v : measured_v)
    if (v < 0.0 || v > v_limit) throw std::out_of_range("measured voltage outside sensor range");
  const double v_max = std::max({measured_v[0], measured_v[1], measured_v[2]});
  const double error = threshold_v - v_max;

  ControllerState next = state;
  next.tick = state.tick + 1;
  next.prev_error_v = error;

  if (std::abs(error) <= p.deadband_v) {
    next.motor_on = false;
    return next;  // retraction untouched: non-back-drivable hold
  }

  const double speed = pd_speed(error, error - state.prev_error_v, p);
  const double delta_mm = speed / p.tick_rate_hz / act.steps_per_mm;
  const bool at_upper = state.retraction_mm >= act.travel_max_mm && delta_mm > 0.0;
  const bool at_lower = state.retraction_mm <= act.travel_min_mm && delta_mm < 0.0;
  if (at_upper || at_lower || delta_mm == 0.0) {
    next.motor_on = false;
    return next;  // motor shuts off at the ends of travel
  }
  next.motor_on = true;
  next.retraction_mm =
      std::clamp(state.retraction_mm + delta_mm, act.travel_min_mm, act.travel_max_mm);
  return next;
}

struct TrajectorySample {
  std::uint64_t tick = 0;
  double time_s = 0.0;
  double retraction_mm = 0.0;
  double error_v = 0.0;
  double speed_steps_s = 0.0;
  double force_n_true = 0.0;
  bool motor_on = false;
};

struct SettleReport {
  bool settled = false;
  bool timed_out = false;
  double settle_time_s = 0.0;     // start of the final motor-off hold
  double force_error_n = 0.0;     // |true plant force - setpoint| at the end
  double peak_force_n = 0.0;      // largest true per-finger force seen
  double final_force_n = 0.0;
  double final_retraction_mm = 0.0;
  std::uint64_t ticks = 0;
};

struct LoopOptions {
  double timeout_s = 8.0;
  int hold_ticks = 1000;          // consecutive motor-off ticks that count as settled
  double noise_std_v = 0.005;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;       // base stream id; fingers use stream, stream+1, stream+2
  bool use_adc = false;
  AdcModel adc{};
  bool record_trajectory = false;
  int trajectory_stride = 1;
};

struct LoopRun {
  SettleReport report;
  std::vector<TrajectorySample> trajectory;
};

// Drives the loop against a symmetric plant (true per-finger force as a
// function of retraction) until the motor holds for hold_ticks or the timeout
// elapses. Each finger owns a noise stream; identical seeds give bit-identical
// runs.
LoopRun run_closed_loop(const std::function<double(double)>& plant_force_n,
                        double setpoint_n, const SensorCalibration& cal,
                        const ControllerParams& params, const ActuatorModel& act,
                        const LoopOptions& opts);

}  // namespace berrygrip
