#include "berrygrip/harvest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace berrygrip {
namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// A crossing fire needs all three channels to read this many sigmas below
// the mean at once; beyond it the event is unreachable within any timeout.
constexpr double kScreenZ = 3.7;
// Quiet-hold detection typically lands where the per-tick fire chance is
// ~1e-3, i.e. the per-channel gap sits at this quantile.
constexpr double kSettleZ = 1.2816;

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

// Acklam's rational approximation plus one Halley refinement.
double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile argument must be in (0,1)");
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double err = normal_cdf(x) - p;
  const double u = err * 2.5066282746310002 * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

// Inverse-CDF draw from the truncated normal; smooth in (mean, sd) so the
// calibration search sees a noiseless objective for fixed uniforms.
double truncnorm_quantile(const TruncatedNormalSpec& s, double mean, double sd, double u) {
  if (sd == 0.0) return mean;
  const double pa = normal_cdf((s.lo - mean) / sd);
  const double pb = normal_cdf((s.hi - mean) / sd);
  const double p = std::clamp(pa + u * (pb - pa), 1e-12, 1.0 - 1e-12);
  return std::clamp(mean + sd * normal_quantile(p), s.lo, s.hi);
}

}  // namespace

void BerrySpec::validate() const {
  require(std::isfinite(length_mm) && length_mm > 0.0, "berry length must be positive");
  require(width_mm >= 15.0 && width_mm <= 50.0, "berry width outside the 15-50 mm design envelope");
  require(std::isfinite(mass_g) && mass_g > 0.0, "berry mass must be positive");
  require(detachment_force_n > 0.0, "detachment force must be positive");
  require(damage_threshold_n > 0.0, "damage threshold must be positive");
  require(rigid_tip_factor >= 1.0, "rigid tip factor must be at least 1");
}

void TruncatedNormalSpec::validate() const {
  require(std::isfinite(mean), "distribution mean must be finite");
  require(std::isfinite(std_dev) && std_dev >= 0.0, "distribution std dev must be nonnegative");
  require(lo <= hi, "distribution bounds inverted");
  if (std_dev == 0.0)
    require(mean >= lo && mean <= hi, "zero-variance distribution needs its mean inside the bounds");
}

void BerryPopulation::validate() const {
  length_mm.validate();
  width_mm.validate();
  mass_g.validate();
  detachment_force_n.validate();
  damage_threshold_n.validate();
  rigid_tip_factor.validate();
  require(width_mm.lo >= 15.0 && width_mm.hi <= 50.0,
          "width distribution outside the 15-50 mm design envelope");
  require(rigid_tip_factor.lo >= 1.0, "rigid tip factor must be at least 1");
  require(detachment_force_n.lo >= 0.0, "detachment force cannot be negative");
  require(damage_threshold_n.lo > 0.0, "damage threshold must be positive");
}

BerrySpec sample_berry(const BerryPopulation& pop, RandomStream& rng) {
  pop.validate();
  BerrySpec b;
  b.length_mm = pop.length_mm.sample(rng);
  b.width_mm = pop.width_mm.sample(rng);
  b.mass_g = pop.mass_g.sample(rng);
  b.detachment_force_n = pop.detachment_force_n.sample(rng);
  b.damage_threshold_n = pop.damage_threshold_n.sample(rng);
  b.rigid_tip_factor = pop.rigid_tip_factor.sample(rng);
  return b;
}

BerrySpec sample_berry(const BerryPopulation& pop, std::uint64_t index) {
  RandomStream rng(pop.seed, index * 4);
  return sample_berry(pop, rng);
}

std::string to_string(HarvestMode mode) {
  switch (mode) {
    case HarvestMode::force_feedback: return "force_feedback";
    case HarvestMode::fixed_retraction: return "fixed_retraction";
    case HarvestMode::hand: return "hand";
  }
  throw std::invalid_argument("unknown harvest mode");
}

HarvestMode harvest_mode_from_string(const std::string& name) {
  if (name == "force_feedback") return HarvestMode::force_feedback;
  if (name == "fixed_retraction") return HarvestMode::fixed_retraction;
  if (name == "hand") return HarvestMode::hand;
  throw std::invalid_argument("unknown harvest mode: " + name);
}

void HarvestPolicy::validate(const SensorCalibration& cal, const ActuatorModel& act) const {
  require(!label.empty(), "policy label must not be empty");
  require(approach_time_s >= 0.0, "approach time cannot be negative");
  require(stow_time_s >= 0.0, "stow time cannot be negative");
  require(timeout_s > 0.0, "timeout must be positive");
  switch (mode) {
    case HarvestMode::force_feedback:
      require(setpoint_n > 0.0, "force setpoint must be positive");
      if (cal.saturates(setpoint_n))
        throw std::invalid_argument("force setpoint saturates the sensor");
      break;
    case HarvestMode::fixed_retraction:
      require(commanded_retraction_mm >= act.travel_min_mm &&
                  commanded_retraction_mm <= act.travel_max_mm,
              "commanded retraction outside actuator travel");
      break;
    case HarvestMode::hand:
      require(hand_time_s > 0.0, "hand reference time must be positive");
      break;
  }
}

SimSetup SimSetup::defaults() {
  SimSetup s;
  s.gripper = make_gripper_geometry();
  s.cal = SensorCalibration::procedure();
  return s;
}

void SimSetup::validate() const {
  gripper.validate();
  map.validate();
  contact.validate();
  cal.validate();
  ctrl.validate();
  act.validate();
  require(noise_std_v >= 0.0, "noise std dev cannot be negative");
  if (use_adc) adc.validate();
  require(hold_ticks >= 1, "hold ticks must be at least 1");
}

namespace {

struct FbOutcome {
  bool crossed = false;
  bool settled = false;
  bool timed_out = false;
  double end_time_s = 0.0;
  double peak_force_n = 0.0;
  double final_force_n = 0.0;
  std::uint64_t ticks = 0;
};

// Closed-loop grasp against one berry: same control_tick and measurement
// order as run_closed_loop, but the loop exits the moment the total grip
// crosses the detachment force (the berry is off the cane; nothing is left
// to control).
FbOutcome run_fb_grasp(const SimSetup& s, double setpoint_n, const ContactPlant& plant,
                       double detach_n, double timeout_s, std::uint64_t seed,
                       std::uint64_t stream_base) {
  const double threshold_v = s.cal.v_ref + s.cal.slope_v_per_n * setpoint_n;
  RandomStream noise0(seed, stream_base + 0);
  RandomStream noise1(seed, stream_base + 1);
  RandomStream noise2(seed, stream_base + 2);
  RandomStream* noise[3] = {&noise0, &noise1, &noise2};
  const double sd = s.noise_std_v;
  const auto max_ticks =
      static_cast<std::uint64_t>(std::llround(timeout_s * s.ctrl.tick_rate_hz));
  ControllerState st{};
  st.retraction_mm = s.act.travel_min_mm;
  FbOutcome out;
  int off_run = 0;
  double force = 0.0;
  for (std::uint64_t t = 0; t < max_ticks; ++t) {
    force = plant.force_n(st.retraction_mm);
    if (force > out.peak_force_n) out.peak_force_n = force;
    if (3.0 * force >= detach_n) {
      out.crossed = true;
      out.ticks = t;
      out.end_time_s = static_cast<double>(t) / s.ctrl.tick_rate_hz;
      out.final_force_n = force;
      return out;
    }
    const double base_v = s.cal.v_ref + s.cal.slope_v_per_n * force;
    std::array<double, 3> v;
    for (int k = 0; k < 3; ++k) {
      double m = base_v;
      if (sd > 0.0) m += sd * noise[k]->gaussian();
      m = std::clamp(m, s.cal.v_min, s.cal.v_max);
      if (s.use_adc) m = adc_dequantize(adc_quantize(m, s.adc), s.adc);
      v[k] = m;
    }
    st = control_tick(st, v, threshold_v, s.ctrl, s.act, s.cal.v_max);
    if (!st.motor_on) {
      if (++off_run >= s.hold_ticks) {
        out.settled = true;
        out.ticks = t + 1;
        out.end_time_s = static_cast<double>(t + 1) / s.ctrl.tick_rate_hz;
        out.final_force_n = plant.force_n(st.retraction_mm);
        return out;
      }
    } else {
      off_run = 0;
    }
  }
  out.timed_out = true;
  out.ticks = max_ticks;
  out.end_time_s = static_cast<double>(max_ticks) / s.ctrl.tick_rate_hz;
  out.final_force_n = plant.force_n(st.retraction_mm);
  return out;
}

double fixed_close_time_s(const HarvestPolicy& policy, const SimSetup& s) {
  const double speed_mm_s = s.ctrl.max_step_rate / s.act.steps_per_mm;
  return (policy.commanded_retraction_mm - s.act.travel_min_mm) / speed_mm_s;
}

}  // namespace

TrialRecord attempt_harvest(const SimSetup& setup, const HarvestPolicy& policy,
                            const BerrySpec& berry, std::uint64_t seed,
                            std::uint64_t trial_index) {
  policy.validate(setup.cal, setup.act);
  TrialRecord rec;
  rec.trial = trial_index;
  rec.berry = berry;

  if (policy.mode == HarvestMode::hand) {
    rec.succeeded = true;
    rec.harvest_time_s = policy.hand_time_s;
    return rec;
  }

  require(berry.width_mm <= setup.gripper.max_aperture_mm, "berry too large for the gripper");
  const ContactPlant plant(setup.gripper, setup.map, setup.contact, berry.width_mm);
  const double detach = berry.detachment_force_n;

  if (policy.mode == HarvestMode::fixed_retraction) {
    const double force = plant.force_n(policy.commanded_retraction_mm);
    const double close_s = fixed_close_time_s(policy, setup);
    rec.succeeded = 3.0 * force >= detach;
    rec.peak_finger_force_n = force;
    // Open loop: no rigid sensor support in the contact path, factor 1.
    rec.damaged = force >= berry.damage_threshold_n;
    rec.settle_ticks = static_cast<std::uint64_t>(std::llround(close_s * setup.ctrl.tick_rate_hz));
    rec.harvest_time_s = policy.approach_time_s + close_s + policy.stow_time_s;
    return rec;
  }

  // Certain-failure screen: crossing at gap g (volts below threshold) fires
  // only when all three channels read below g - deadband at once. Once the
  // crossing gap sits kScreenZ sigmas inside the deadband that chance is
  // ~1e-12 per tick, unreachable within the timeout, so the trial books a
  // timeout without ticking. The stall peak is where the per-tick fire
  // chance falls to ~1e-3 and the hold counter wins.
  const double gap_v = setup.ctrl.deadband_v - kScreenZ * setup.noise_std_v;
  const double cross_gap_v =
      setup.cal.slope_v_per_n * (policy.setpoint_n - detach / 3.0);
  if (!setup.use_adc && gap_v > 0.0 && detach > 0.0 && cross_gap_v <= gap_v) {
    const double stall_gap_v = setup.ctrl.deadband_v - kSettleZ * setup.noise_std_v;
    double peak = policy.setpoint_n - stall_gap_v / setup.cal.slope_v_per_n;
    peak = std::clamp(peak, 0.0, plant.force_n(setup.act.travel_max_mm));
    rec.succeeded = false;
    rec.peak_finger_force_n = peak;
    rec.damaged = berry.rigid_tip_factor * peak >= berry.damage_threshold_n;
    rec.settle_ticks =
        static_cast<std::uint64_t>(std::llround(policy.timeout_s * setup.ctrl.tick_rate_hz));
    rec.harvest_time_s = policy.approach_time_s + policy.timeout_s + policy.stow_time_s;
    return rec;
  }

  const FbOutcome out = run_fb_grasp(setup, policy.setpoint_n, plant, detach,
                                     policy.timeout_s, seed, trial_index * 4 + 1);
  rec.succeeded = out.crossed;
  rec.peak_finger_force_n = out.peak_force_n;
  rec.damaged = berry.rigid_tip_factor * out.peak_force_n >= berry.damage_threshold_n;
  rec.settle_ticks = out.ticks;
  rec.harvest_time_s = policy.approach_time_s + out.end_time_s + policy.stow_time_s;
  return rec;
}

CampaignResult run_campaign(const SimSetup& setup, const HarvestPolicy& policy,
                            const BerryPopulation& pop, std::uint64_t n_trials,
                            std::uint64_t seed, int parallelism) {
  if (n_trials == 0) throw std::invalid_argument("campaign needs at least one trial");
  setup.validate();
  policy.validate(setup.cal, setup.act);
  pop.validate();

  CampaignResult result;
  result.records.resize(n_trials);
  auto run_range = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      RandomStream berry_rng(seed, i * 4);
      const BerrySpec berry = sample_berry(pop, berry_rng);
      result.records[i] = attempt_harvest(setup, policy, berry, seed, i);
    }
  };

  const int workers =
      static_cast<int>(std::min<std::uint64_t>(std::max(parallelism, 1), n_trials));
  if (workers <= 1) {
    run_range(0, n_trials);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      const std::uint64_t begin = n_trials * w / workers;
      const std::uint64_t end = n_trials * (w + 1) / workers;
      pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  // Trial-ordered aggregation: identical totals no matter how trials were
  // scheduled above.
  CampaignSummary& s = result.summary;
  s.policy_label = policy.label;
  s.trials = n_trials;
  double time_sum = 0.0;
  double peak_sum = 0.0;
  for (const TrialRecord& rec : result.records) {
    peak_sum += rec.peak_finger_force_n;
    if (!rec.succeeded) continue;
    ++s.successes;
    time_sum += rec.harvest_time_s;
    if (rec.damaged) ++s.damaged_successes;
  }
  s.reliability_pct = 100.0 * static_cast<double>(s.successes) / static_cast<double>(n_trials);
  s.rdr_pct = s.successes
                  ? 100.0 * static_cast<double>(s.damaged_successes) /
                        static_cast<double>(s.successes)
                  : 0.0;
  s.mean_time_s = s.successes ? time_sum / static_cast<double>(s.successes) : 0.0;
  s.mean_peak_force_n = peak_sum / static_cast<double>(n_trials);
  return result;
}

std::vector<PolicyTarget> load_policy_targets(const CsvTable& table) {
  const int c_policy = table.column("policy");
  const int c_mode = table.column("mode");
  const int c_set = table.column("setpoint_N");
  const int c_ret = table.column("retraction_mm");
  const int c_rel = table.column("reliability_pct");
  const int c_time = table.column("harvest_time_s");
  const int c_rdr = table.column("rdr_pct");
  if (c_policy < 0 || c_mode < 0 || c_set < 0 || c_ret < 0 || c_rel < 0 || c_time < 0 ||
      c_rdr < 0)
    throw std::invalid_argument("policy target table is missing a required column");

  std::vector<PolicyTarget> targets;
  for (const auto& row : table.rows) {
    PolicyTarget t;
    t.policy.label = row[c_policy];
    t.policy.mode = harvest_mode_from_string(row[c_mode]);
    if (!row[c_set].empty()) t.policy.setpoint_n = parse_number(row[c_set]);
    if (!row[c_ret].empty()) t.policy.commanded_retraction_mm = parse_number(row[c_ret]);
    t.reliability_pct = parse_number(row[c_rel]);
    t.time_s = parse_number(row[c_time]);
    t.rdr_pct = parse_number(row[c_rdr]);
    if (t.policy.mode == HarvestMode::hand) t.policy.hand_time_s = t.time_s;
    targets.push_back(t);
  }
  return targets;
}

namespace {

// Per-row precomputation for the calibration search: fixed uniforms for the
// fitted fields and fixed per-trial open-loop forces, so the surrogate
// objective is deterministic and smooth in the fitted parameters.
struct SurrogateRow {
  const PolicyTarget* target = nullptr;
  bool feedback = false;
  double reach_force_n = 0.0;          // mean stalled per-finger force (feedback rows)
  std::vector<double> u_detach;
  std::vector<double> u_damage;
  std::vector<double> open_loop_force_n;  // fixed-retraction rows
};

struct RowMetrics {
  double reliability_pct = 0.0;
  double rdr_pct = 0.0;
};

struct FitParams {
  double detach_mean = 1.2;
  double detach_std = 0.6;
  double damage_mean = 1.2;
  double damage_std = 0.06;
  double rigid_tip = 2.0;
};

BerryPopulation apply_params(const BerryPopulation& base, const FitParams& p) {
  BerryPopulation pop = base;
  pop.detachment_force_n.mean = p.detach_mean;
  pop.detachment_force_n.std_dev = p.detach_std;
  pop.damage_threshold_n.mean = p.damage_mean;
  pop.damage_threshold_n.std_dev = p.damage_std;
  pop.rigid_tip_factor.mean = p.rigid_tip;
  pop.rigid_tip_factor.std_dev = 0.0;
  pop.rigid_tip_factor.lo = std::min(pop.rigid_tip_factor.lo, p.rigid_tip);
  pop.rigid_tip_factor.hi = std::max(pop.rigid_tip_factor.hi, p.rigid_tip);
  return pop;
}

// Keep the fitted means workable inside the template's truncation bounds.
void clamp_params(FitParams& p, const BerryPopulation& base) {
  p.detach_std = std::clamp(p.detach_std, 0.03, 1.5);
  p.damage_std = std::clamp(p.damage_std, 0.01, 1.0);
  p.detach_mean = std::clamp(p.detach_mean, base.detachment_force_n.lo, base.detachment_force_n.hi);
  p.damage_mean = std::clamp(p.damage_mean, base.damage_threshold_n.lo, base.damage_threshold_n.hi);
  p.rigid_tip = std::clamp(p.rigid_tip, 1.0, 3.0);
}

RowMetrics surrogate_metrics(const SurrogateRow& row, const FitParams& p,
                             const BerryPopulation& base) {
  const TruncatedNormalSpec& det_spec = base.detachment_force_n;
  const TruncatedNormalSpec& dmg_spec = base.damage_threshold_n;
  const std::size_t n = row.u_detach.size();
  std::size_t successes = 0;
  std::size_t damaged = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double det = truncnorm_quantile(det_spec, p.detach_mean, p.detach_std, row.u_detach[i]);
    const double grip = row.feedback ? row.reach_force_n : row.open_loop_force_n[i];
    if (det > 3.0 * grip) continue;
    ++successes;
    const double exposure = row.feedback ? p.rigid_tip * det / 3.0 : row.open_loop_force_n[i];
    const double thr = truncnorm_quantile(dmg_spec, p.damage_mean, p.damage_std, row.u_damage[i]);
    if (exposure >= thr) ++damaged;
  }
  RowMetrics m;
  m.reliability_pct = 100.0 * static_cast<double>(successes) / static_cast<double>(n);
  m.rdr_pct =
      successes ? 100.0 * static_cast<double>(damaged) / static_cast<double>(successes) : 0.0;
  return m;
}

double surrogate_objective(const std::vector<SurrogateRow>& rows, const FitParams& p,
                           const BerryPopulation& base, const CalibrationOptions& opts) {
  double obj = 0.0;
  for (const SurrogateRow& row : rows) {
    const RowMetrics m = surrogate_metrics(row, p, base);
    const double dr = (m.reliability_pct - row.target->reliability_pct) / opts.tol_reliability_pts;
    const double dd = (m.rdr_pct - row.target->rdr_pct) / opts.tol_rdr_pts;
    obj += dr * dr + dd * dd;
  }
  return obj;
}

// Coordinate descent with shrinking steps from one start point.
FitParams descend(const std::vector<SurrogateRow>& rows, FitParams p,
                  const BerryPopulation& base, const CalibrationOptions& opts, double* best_obj) {
  clamp_params(p, base);
  double f = surrogate_objective(rows, p, base, opts);
  std::array<double, 5> step = {0.15, 0.08, 0.12, 0.04, 0.2};
  auto get = [](FitParams& q, int k) -> double& {
    switch (k) {
      case 0: return q.detach_mean;
      case 1: return q.detach_std;
      case 2: return q.damage_mean;
      case 3: return q.damage_std;
      default: return q.rigid_tip;
    }
  };
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool improved = false;
    for (int k = 0; k < 5; ++k) {
      for (double dir : {1.0, -1.0}) {
        FitParams q = p;
        get(q, k) += dir * step[k];
        clamp_params(q, base);
        if (get(q, k) == get(p, k)) continue;
        const double fq = surrogate_objective(rows, q, base, opts);
        if (fq < f - 1e-12) {
          p = q;
          f = fq;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      double widest = 0.0;
      for (double& st : step) {
        st *= 0.5;
        widest = std::max(widest, st);
      }
      if (widest < 1e-3) break;
    }
  }
  *best_obj = f;
  return p;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

CalibrationResult calibrate_population(const SimSetup& setup,
                                       const std::vector<PolicyTarget>& targets,
                                       const BerryPopulation& initial,
                                       const CalibrationOptions& opts) {
  setup.validate();
  initial.validate();
  int fb_rows = 0;
  for (const PolicyTarget& t : targets) {
    t.policy.validate(setup.cal, setup.act);
    if (t.policy.mode == HarvestMode::force_feedback) ++fb_rows;
  }
  if (fb_rows < 3)
    throw std::invalid_argument("calibration needs at least three force-feedback rows");
  require(opts.margin_runs >= 1 && opts.surrogate_trials >= 100 && opts.engine_trials >= 100,
          "calibration options out of range");

  // Stage 1: probe each feedback row's stalled grip force with the real
  // loop. The stall point, not the setpoint, is what a berry must beat.
  std::vector<SurrogateRow> rows;
  rows.reserve(targets.size());
  std::uint64_t probe_counter = 0;
  for (const PolicyTarget& t : targets) {
    SurrogateRow row;
    row.target = &t;
    row.feedback = t.policy.mode == HarvestMode::force_feedback;
    if (row.feedback) {
      std::vector<double> reach;
      reach.reserve(opts.margin_runs);
      for (int j = 0; j < opts.margin_runs; ++j) {
        RandomStream rng(opts.seed, probe_counter * 4);
        const BerrySpec berry = sample_berry(initial, rng);
        const ContactPlant plant(setup.gripper, setup.map, setup.contact, berry.width_mm);
        const FbOutcome out = run_fb_grasp(
            setup, t.policy.setpoint_n, plant, std::numeric_limits<double>::infinity(),
            t.policy.timeout_s, opts.seed, probe_counter * 4 + 1);
        reach.push_back(out.final_force_n);
        ++probe_counter;
      }
      row.reach_force_n = mean_of(reach);
    }
    rows.push_back(std::move(row));
  }

  // Fixed uniforms and open-loop forces for the surrogate objective.
  std::uint64_t row_index = 0;
  for (SurrogateRow& row : rows) {
    if (row.target->policy.mode == HarvestMode::hand) {
      ++row_index;
      continue;
    }
    row.u_detach.resize(opts.surrogate_trials);
    row.u_damage.resize(opts.surrogate_trials);
    if (!row.feedback) row.open_loop_force_n.resize(opts.surrogate_trials);
    for (int i = 0; i < opts.surrogate_trials; ++i) {
      RandomStream rng(opts.seed ^ 0x5u, (row_index * static_cast<std::uint64_t>(opts.surrogate_trials) +
                                          static_cast<std::uint64_t>(i)) *
                                             4);
      const BerrySpec berry = sample_berry(initial, rng);
      if (!row.feedback) {
        const ContactPlant plant(setup.gripper, setup.map, setup.contact, berry.width_mm);
        row.open_loop_force_n[i] =
            plant.force_n(row.target->policy.commanded_retraction_mm);
      }
      row.u_detach[i] = rng.uniform();
      row.u_damage[i] = rng.uniform();
    }
    ++row_index;
  }

  // Drop reference rows from the search (nothing to fit there).
  std::vector<SurrogateRow> fit_rows;
  for (SurrogateRow& row : rows)
    if (row.target->policy.mode != HarvestMode::hand) fit_rows.push_back(std::move(row));

  // Stage 2: probit-matched start. Success is detach <= 3 * grip, so each
  // reliability target pins the grip force at its normal quantile.
  std::vector<double> probit_x;
  std::vector<double> probit_z;
  for (const SurrogateRow& row : fit_rows) {
    const double r = std::clamp(row.target->reliability_pct / 100.0, 0.005, 0.995);
    const double grip =
        row.feedback ? row.reach_force_n : mean_of(row.open_loop_force_n);
    probit_x.push_back(3.0 * grip);
    probit_z.push_back(normal_quantile(r));
  }
  FitParams start;
  {
    const double zm = mean_of(probit_z);
    const double xm = mean_of(probit_x);
    double szx = 0.0;
    double szz = 0.0;
    for (std::size_t i = 0; i < probit_x.size(); ++i) {
      szx += (probit_z[i] - zm) * (probit_x[i] - xm);
      szz += (probit_z[i] - zm) * (probit_z[i] - zm);
    }
    start.detach_std = szz > 1e-9 ? szx / szz : 0.6;
    if (start.detach_std < 0.05) start.detach_std = 0.6;
    start.detach_mean = xm - start.detach_std * zm;

    // Damage start: place the threshold so the worst-case feedback exposure
    // reproduces each nonzero damage-rate target.
    std::vector<double> dmg_points;
    for (const SurrogateRow& row : fit_rows) {
      if (!row.feedback || row.target->rdr_pct <= 0.0) continue;
      const double p_succ =
          normal_cdf((3.0 * row.reach_force_n - start.detach_mean) / start.detach_std);
      const double p_keep = std::clamp(
          p_succ * (1.0 - row.target->rdr_pct / 100.0), 0.005, 0.995);
      const double det_star = start.detach_mean + start.detach_std * normal_quantile(p_keep);
      dmg_points.push_back(start.rigid_tip * det_star / 3.0);
    }
    start.damage_mean = dmg_points.empty() ? start.rigid_tip * start.detach_mean / 3.0
                                           : mean_of(dmg_points);
    start.damage_std = 0.06;
    clamp_params(start, initial);
  }

  // Stage 3: coordinate descent with restarts on the surrogate.
  FitParams best = start;
  double best_obj = std::numeric_limits<double>::infinity();
  const std::array<FitParams, 3> seeds = {
      start,
      FitParams{start.detach_mean + 0.15, std::max(0.05, start.detach_std - 0.1),
                start.damage_mean + 0.1, start.damage_std * 2.0, start.rigid_tip + 0.3},
      FitParams{start.detach_mean - 0.15, start.detach_std + 0.1, start.damage_mean - 0.1,
                std::max(0.02, start.damage_std * 0.5), std::max(1.0, start.rigid_tip - 0.3)}};
  for (FitParams seed_params : seeds) {
    double obj = 0.0;
    const FitParams found = descend(fit_rows, seed_params, initial, opts, &obj);
    if (obj < best_obj) {
      best_obj = obj;
      best = found;
    }
  }

  // Stage 4: polish against the real engine; small probit nudges on the
  // means soak up surrogate-vs-engine bias.
  struct EngineEval {
    std::vector<CampaignSummary> summaries;
    std::vector<double> mean_grasp_s;
    double objective = 0.0;
  };
  auto engine_eval = [&](const FitParams& p) {
    EngineEval ev;
    const BerryPopulation pop = apply_params(initial, p);
    std::uint64_t salt = 0;
    for (const PolicyTarget& t : targets) {
      if (t.policy.mode == HarvestMode::hand) {
        CampaignSummary s;
        s.policy_label = t.policy.label;
        s.reliability_pct = 100.0;
        s.rdr_pct = 0.0;
        s.mean_time_s = t.policy.hand_time_s;
        ev.summaries.push_back(s);
        ev.mean_grasp_s.push_back(0.0);
        continue;
      }
      const CampaignResult run = run_campaign(
          setup, t.policy, pop, static_cast<std::uint64_t>(opts.engine_trials),
          opts.seed + 7919 * (salt + 1), 1);
      double grasp_sum = 0.0;
      std::uint64_t grasp_n = 0;
      for (const TrialRecord& rec : run.records) {
        if (!rec.succeeded) continue;
        grasp_sum += rec.harvest_time_s - t.policy.approach_time_s - t.policy.stow_time_s;
        ++grasp_n;
      }
      ev.summaries.push_back(run.summary);
      ev.mean_grasp_s.push_back(grasp_n ? grasp_sum / static_cast<double>(grasp_n) : 0.0);
      ++salt;
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const double dr = (ev.summaries[i].reliability_pct - targets[i].reliability_pct) /
                        opts.tol_reliability_pts;
      const double dd = (ev.summaries[i].rdr_pct - targets[i].rdr_pct) / opts.tol_rdr_pts;
      ev.objective += dr * dr + dd * dd;
    }
    return ev;
  };

  FitParams engine_best = best;
  EngineEval eval_best = engine_eval(engine_best);
  FitParams cursor = engine_best;
  for (int round = 1; round < opts.max_engine_rounds; ++round) {
    bool within_half = true;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (std::abs(eval_best.summaries[i].reliability_pct - targets[i].reliability_pct) >
              0.5 * opts.tol_reliability_pts ||
          std::abs(eval_best.summaries[i].rdr_pct - targets[i].rdr_pct) >
              0.5 * opts.tol_rdr_pts)
        within_half = false;
    }
    if (within_half) break;

    double rel_shift = 0.0;
    double rdr_shift = 0.0;
    int rel_n = 0;
    int rdr_n = 0;
    const EngineEval& ev = eval_best;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (targets[i].policy.mode == HarvestMode::hand) continue;
      const double sim_r = std::clamp(ev.summaries[i].reliability_pct / 100.0, 0.005, 0.995);
      const double tgt_r = std::clamp(targets[i].reliability_pct / 100.0, 0.005, 0.995);
      rel_shift += normal_quantile(sim_r) - normal_quantile(tgt_r);
      ++rel_n;
      if (targets[i].rdr_pct > 0.0) {
        const double sim_d = std::clamp(ev.summaries[i].rdr_pct / 100.0, 0.005, 0.995);
        const double tgt_d = std::clamp(targets[i].rdr_pct / 100.0, 0.005, 0.995);
        rdr_shift += normal_quantile(sim_d) - normal_quantile(tgt_d);
        ++rdr_n;
      }
    }
    FitParams next = cursor;
    if (rel_n) next.detach_mean += cursor.detach_std * rel_shift / rel_n;
    if (rdr_n) next.damage_mean += cursor.damage_std * 3.0 * rdr_shift / rdr_n;
    clamp_params(next, initial);
    cursor = next;
    const EngineEval ev_next = engine_eval(next);
    if (ev_next.objective < eval_best.objective) {
      engine_best = next;
      eval_best = ev_next;
    }
  }

  // Stage 5: the population cannot move campaign times by whole seconds
  // (grasp dynamics pin them); the per-policy approach leg absorbs the
  // target instead.
  CalibrationResult result;
  result.population = apply_params(initial, engine_best);
  result.objective = eval_best.objective;
  result.converged = true;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    HarvestPolicy policy = targets[i].policy;
    double time_sim = policy.hand_time_s;
    if (policy.mode != HarvestMode::hand) {
      const double grasp = eval_best.mean_grasp_s[i];
      policy.approach_time_s =
          std::clamp(targets[i].time_s - policy.stow_time_s - grasp, 0.05, 60.0);
      time_sim = policy.approach_time_s + grasp + policy.stow_time_s;
    }
    PolicyResidual res;
    res.label = policy.label;
    res.reliability_pct = eval_best.summaries[i].reliability_pct;
    res.rdr_pct = eval_best.summaries[i].rdr_pct;
    res.time_s = time_sim;
    res.target_reliability_pct = targets[i].reliability_pct;
    res.target_rdr_pct = targets[i].rdr_pct;
    res.target_time_s = targets[i].time_s;
    result.objective += [&] {
      const double dt = (res.time_s - res.target_time_s) / opts.tol_time_s;
      return dt * dt;
    }();
    if (std::abs(res.reliability_pct - res.target_reliability_pct) > opts.tol_reliability_pts ||
        std::abs(res.rdr_pct - res.target_rdr_pct) > opts.tol_rdr_pts ||
        std::abs(res.time_s - res.target_time_s) > opts.tol_time_s)
      result.converged = false;
    result.policies.push_back(policy);
    result.residuals.push_back(res);
  }
  return result;
}

}  // namespace berrygrip
