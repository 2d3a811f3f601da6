#include <cmath>
#include <cstdint>

#include "doctest.h"

#include "berrygrip/control.hpp"
#include "berrygrip/rng.hpp"
#include "berrygrip/sensing.hpp"

using namespace berrygrip;

TEST_CASE("pd speed is proportional plus derivative, clamped") {
  const ControllerParams p;
  CHECK(pd_speed(0.0, 0.0, p) == 0.0);
  CHECK(pd_speed(0.1, 0.0, p) == doctest::Approx(400.0));
  CHECK(pd_speed(10.0, 0.0, p) == 10000.0);   // clamped at the drive ceiling
  CHECK(pd_speed(-10.0, 0.0, p) == -10000.0);
  CHECK(pd_speed(0.0, 0.1, p) == doctest::Approx(12.5));  // kd * de
  CHECK(pd_speed(0.1, -0.1, p) == doctest::Approx(400.0 - 12.5));
}

TEST_CASE("params validation") {
  ControllerParams p;
  p.kp = -1.0;
  CHECK_THROWS(p.validate());
  ControllerParams p2;
  p2.tick_rate_hz = 0.0;
  CHECK_THROWS(p2.validate());
  ActuatorModel a;
  a.travel_max_mm = a.travel_min_mm;
  CHECK_THROWS(a.validate());
  ActuatorModel a2;
  a2.steps_per_mm = 0.0;
  CHECK_THROWS(a2.validate());
}

TEST_CASE("deadband gates the motor and freezes retraction") {
  const ControllerParams p;
  const ActuatorModel act;
  ControllerState s;
  s.retraction_mm = 3.123456789;
  s.motor_on = true;
  // threshold 3.0, measurement peak 2.99 -> error 0.01 inside the 0.02 band
  const ControllerState next = control_tick(s, {2.99, 2.5, 2.0}, 3.0, p, act);
  CHECK_FALSE(next.motor_on);
  CHECK(next.retraction_mm == s.retraction_mm);  // bit-identical hold
  CHECK(next.tick == s.tick + 1);
  CHECK(next.prev_error_v == doctest::Approx(0.01));
}

TEST_CASE("a tick advances by speed over rate over steps-per-mm") {
  const ControllerParams p;
  const ActuatorModel act;
  ControllerState s;
  s.retraction_mm = 1.0;
  const double err = 3.0 - 2.9;  // same subtraction the tick performs
  s.prev_error_v = err;          // no derivative kick
  const ControllerState next = control_tick(s, {2.9, 0.0, 0.0}, 3.0, p, act);
  CHECK(next.motor_on);
  const double expected = 1.0 + pd_speed(err, 0.0, p) / p.tick_rate_hz / act.steps_per_mm;
  CHECK(next.retraction_mm == expected);  // same arithmetic, bit-exact
  CHECK(next.retraction_mm == doctest::Approx(1.0004));
}

TEST_CASE("error uses the highest finger voltage") {
  const ControllerParams p;
  const ActuatorModel act;
  ControllerState s;
  const ControllerState a = control_tick(s, {4.0, 2.0, 2.0}, 3.0, p, act);
  const ControllerState b = control_tick(s, {2.0, 2.0, 4.0}, 3.0, p, act);
  CHECK(a.prev_error_v == b.prev_error_v);
  CHECK(a.prev_error_v == doctest::Approx(-1.0));
  CHECK(a.retraction_mm == b.retraction_mm);
}

TEST_CASE("out-of-range voltages are rejected") {
  const ControllerParams p;
  const ActuatorModel act;
  ControllerState s;
  CHECK_THROWS(control_tick(s, {5.1, 0.0, 0.0}, 3.0, p, act));
  CHECK_THROWS(control_tick(s, {0.0, -0.1, 0.0}, 3.0, p, act));
  CHECK_NOTHROW(control_tick(s, {5.0, 0.0, 0.0}, 3.0, p, act));
}

TEST_CASE("motor shuts off at the ends of travel") {
  const ControllerParams p;
  const ActuatorModel act;
  ControllerState s;
  s.retraction_mm = act.travel_max_mm;
  s.prev_error_v = 2.0;
  // Big positive error wants to advance past the end: motor must stop.
  const ControllerState up = control_tick(s, {1.0, 0.0, 0.0}, 3.0, p, act);
  CHECK_FALSE(up.motor_on);
  CHECK(up.retraction_mm == act.travel_max_mm);

  ControllerState s0;
  s0.retraction_mm = act.travel_min_mm;
  s0.prev_error_v = -2.0;
  const ControllerState down = control_tick(s0, {5.0, 0.0, 0.0}, 3.0, p, act);
  CHECK_FALSE(down.motor_on);
  CHECK(down.retraction_mm == act.travel_min_mm);
}

TEST_CASE("constant in-band input never moves the mechanism") {
  const ControllerParams p;
  const ActuatorModel act;
  ControllerState s;
  s.retraction_mm = 2.5;
  for (int i = 0; i < 5000; ++i) {
    s = control_tick(s, {2.985, 2.99, 2.981}, 3.0, p, act);
    REQUIRE_FALSE(s.motor_on);
    REQUIRE(s.retraction_mm == 2.5);
  }
  CHECK(s.tick == 5000);
}

TEST_CASE("noiseless kp-only loop closes the error monotonically") {
  ControllerParams p;
  p.kd = 0.0;
  const ActuatorModel act;
  const SensorCalibration cal = SensorCalibration::procedure();
  const double setpoint_n = 0.8;
  const double threshold_v = cal.v_ref + cal.slope_v_per_n * setpoint_n;
  auto plant = [](double x) { return 0.6 * x; };  // contact from zero travel

  ControllerState s;
  double prev_abs = 1e9;
  bool in_band = false;
  for (int i = 0; i < 20000; ++i) {
    const double v = force_to_voltage(plant(s.retraction_mm), cal);
    s = control_tick(s, {v, v, v}, threshold_v, p, act);
    const double err = std::abs(s.prev_error_v);
    if (in_band) {
      REQUIRE(err <= p.deadband_v);  // once captured, never leaves
    } else {
      REQUIRE(err <= prev_abs + 1e-15);
      if (err <= p.deadband_v) in_band = true;
    }
    prev_abs = err;
  }
  CHECK(in_band);
}

TEST_CASE("closed loop settles a linear plant inside the deadband") {
  const ControllerParams params;
  const ActuatorModel act;
  const SensorCalibration cal = SensorCalibration::procedure();
  LoopOptions opts;
  opts.timeout_s = 2.0;
  opts.noise_std_v = 0.0;
  const double setpoint = 0.59;
  const LoopRun run =
      run_closed_loop([](double x) { return 0.6 * x; }, setpoint, cal, params, act, opts);
  CHECK(run.report.settled);
  CHECK_FALSE(run.report.timed_out);
  CHECK(run.report.force_error_n <= params.deadband_v / cal.slope_v_per_n + 1e-12);
  CHECK(run.report.final_retraction_mm > 0.0);
  CHECK(run.report.peak_force_n >= run.report.final_force_n);
  // Settled means: hold began at settle_time_s and lasted exactly hold_ticks.
  const auto hold_start =
      static_cast<std::uint64_t>(std::llround(run.report.settle_time_s * params.tick_rate_hz));
  CHECK(run.report.ticks == hold_start + opts.hold_ticks);
}

TEST_CASE("closed loop refuses a saturating setpoint") {
  const ControllerParams params;
  const ActuatorModel act;
  const SensorCalibration cal = SensorCalibration::field2020();
  LoopOptions opts;
  CHECK_THROWS(run_closed_loop([](double) { return 0.0; }, 0.59, cal, params, act, opts));
}

TEST_CASE("too-short timeout reports timed out with the full tick count") {
  const ControllerParams params;
  const ActuatorModel act;
  const SensorCalibration cal = SensorCalibration::procedure();
  LoopOptions opts;
  opts.timeout_s = 0.05;  // 500 ticks < hold_ticks, cannot settle
  opts.noise_std_v = 0.005;
  opts.seed = 7;
  const LoopRun run =
      run_closed_loop([](double x) { return 0.6 * x; }, 0.59, cal, params, act, opts);
  CHECK(run.report.timed_out);
  CHECK_FALSE(run.report.settled);
  CHECK(run.report.ticks == 500);
  CHECK(run.report.settle_time_s == doctest::Approx(0.05));
}

TEST_CASE("identical options give bit-identical runs") {
  const ControllerParams params;
  const ActuatorModel act;
  const SensorCalibration cal = SensorCalibration::procedure();
  LoopOptions opts;
  opts.timeout_s = 1.0;
  opts.noise_std_v = 0.005;
  opts.seed = 42;
  opts.record_trajectory = true;
  opts.trajectory_stride = 7;
  auto plant = [](double x) { return 0.55 * x; };
  const LoopRun a = run_closed_loop(plant, 0.7, cal, params, act, opts);
  const LoopRun b = run_closed_loop(plant, 0.7, cal, params, act, opts);
  CHECK(a.report.settled == b.report.settled);
  CHECK(a.report.ticks == b.report.ticks);
  CHECK(a.report.settle_time_s == b.report.settle_time_s);
  CHECK(a.report.final_retraction_mm == b.report.final_retraction_mm);
  CHECK(a.report.peak_force_n == b.report.peak_force_n);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (size_t i = 0; i < a.trajectory.size(); ++i) {
    REQUIRE(a.trajectory[i].tick == b.trajectory[i].tick);
    REQUIRE(a.trajectory[i].retraction_mm == b.trajectory[i].retraction_mm);
    REQUIRE(a.trajectory[i].error_v == b.trajectory[i].error_v);
  }
  // Trajectory keeps every stride-th tick, in order.
  for (size_t i = 0; i < a.trajectory.size(); ++i) {
    REQUIRE(a.trajectory[i].tick % opts.trajectory_stride == 0);
    if (i > 0) REQUIRE(a.trajectory[i].tick > a.trajectory[i - 1].tick);
  }

  LoopOptions other = opts;
  other.seed = 43;
  const LoopRun c = run_closed_loop(plant, 0.7, cal, params, act, other);
  bool any_diff = (c.report.final_retraction_mm != a.report.final_retraction_mm) ||
                  (c.report.ticks != a.report.ticks);
  for (size_t i = 0; !any_diff && i < std::min(a.trajectory.size(), c.trajectory.size()); ++i)
    any_diff = a.trajectory[i].error_v != c.trajectory[i].error_v;
  CHECK(any_diff);
}

TEST_CASE("fuzzed ticks keep the invariants") {
  const ControllerParams p;
  const ActuatorModel act;
  RandomStream rng(2024, 5);
  ControllerState s;
  s.retraction_mm = 5.0;
  for (int i = 0; i < 100000; ++i) {
    const std::array<double, 3> v = {rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0),
                                     rng.uniform(0.0, 5.0)};
    const double threshold = rng.uniform(0.0, 5.0);
    const ControllerState prev = s;
    s = control_tick(s, v, threshold, p, act);
    REQUIRE(s.retraction_mm >= act.travel_min_mm);
    REQUIRE(s.retraction_mm <= act.travel_max_mm);
    REQUIRE(s.tick == prev.tick + 1);
    const double err = threshold - std::max({v[0], v[1], v[2]});
    if (std::abs(err) <= p.deadband_v) REQUIRE_FALSE(s.motor_on);
    if (!s.motor_on) REQUIRE(s.retraction_mm == prev.retraction_mm);
  }
}
