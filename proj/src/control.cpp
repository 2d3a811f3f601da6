#include "berrygrip/control.hpp"

#include <cmath>

namespace berrygrip {

void ControllerParams::validate() const {
  if (!(kp >= 0.0) || !(kd >= 0.0)) throw std::invalid_argument("controller gains must be nonnegative");
  if (!(tick_rate_hz > 0.0)) throw std::invalid_argument("tick rate must be positive");
  if (!(deadband_v >= 0.0)) throw std::invalid_argument("deadband must be nonnegative");
  if (!(max_step_rate > 0.0)) throw std::invalid_argument("max step rate must be positive");
}

void ActuatorModel::validate() const {
  if (!(steps_per_mm > 0.0)) throw std::invalid_argument("steps per mm must be positive");
  if (!(travel_max_mm > travel_min_mm)) throw std::invalid_argument("empty travel range");
}

LoopRun run_closed_loop(const std::function<double(double)>& plant_force_n,
                        double setpoint_n, const SensorCalibration& cal,
                        const ControllerParams& params, const ActuatorModel& act,
                        const LoopOptions& opts) {
  cal.validate();
  params.validate();
  act.validate();
  if (setpoint_n < 0.0) throw std::out_of_range("setpoint must be nonnegative");
  if (cal.saturates(setpoint_n))
    throw std::out_of_range("setpoint saturates the sensor: threshold voltage unreachable");
  const double threshold_v = cal.v_ref + cal.slope_v_per_n * setpoint_n;

  NoiseModel noise_model;
  noise_model.std_dev_v = opts.noise_std_v;
  noise_model.validate();
  NoiseStream noise0({opts.noise_std_v, opts.stream + 0}, opts.seed);
  NoiseStream noise1({opts.noise_std_v, opts.stream + 1}, opts.seed);
  NoiseStream noise2({opts.noise_std_v, opts.stream + 2}, opts.seed);
  const AdcModel* adc = opts.use_adc ? &opts.adc : nullptr;

  LoopRun run;
  ControllerState state;
  state.retraction_mm = act.travel_min_mm;
  const auto total_ticks =
      static_cast<std::uint64_t>(opts.timeout_s * params.tick_rate_hz);

  int off_run = 0;
  std::uint64_t hold_start_tick = 0;
  bool settled = false;

  for (std::uint64_t t = 0; t < total_ticks; ++t) {
    const double f_true = plant_force_n(state.retraction_mm);
    run.report.peak_force_n = std::max(run.report.peak_force_n, f_true);
    const std::array<double, 3> v = {
        measure_voltage(f_true, cal, &noise0, adc),
        measure_voltage(f_true, cal, &noise1, adc),
        measure_voltage(f_true, cal, &noise2, adc),
    };
    const ControllerState prev = state;
    state = control_tick(state, v, threshold_v, params, act, cal.v_max);

    if (opts.record_trajectory && (prev.tick % opts.trajectory_stride) == 0) {
      TrajectorySample s;
      s.tick = prev.tick;
      s.time_s = static_cast<double>(prev.tick) / params.tick_rate_hz;
      s.retraction_mm = state.retraction_mm;
      s.error_v = state.prev_error_v;
      s.speed_steps_s = state.motor_on ? pd_speed(state.prev_error_v,
                                                 state.prev_error_v - prev.prev_error_v, params)
                                       : 0.0;
      s.force_n_true = f_true;
      s.motor_on = state.motor_on;
      run.trajectory.push_back(s);
    }

    if (!state.motor_on) {
      if (off_run == 0) hold_start_tick = prev.tick;
      ++off_run;
      if (off_run >= opts.hold_ticks) {
        settled = true;
        break;
      }
    } else {
      off_run = 0;
    }
  }

  run.report.settled = settled;
  run.report.timed_out = !settled;
  run.report.ticks = state.tick;
  run.report.settle_time_s =
      settled ? static_cast<double>(hold_start_tick) / params.tick_rate_hz
              : static_cast<double>(state.tick) / params.tick_rate_hz;
  run.report.final_retraction_mm = state.retraction_mm;
  run.report.final_force_n = plant_force_n(state.retraction_mm);
  run.report.force_error_n = std::abs(run.report.final_force_n - setpoint_n);
  return run;
}

}  // namespace berrygrip
