#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"

#include "berrygrip/csv.hpp"
#include "berrygrip/harvest.hpp"

using namespace berrygrip;

namespace {

const std::string kFixturesDir = std::string(BERRYGRIP_DATA_DIR) + "/fixtures";

BerryPopulation point_mass_population() {
  BerryPopulation pop;
  pop.length_mm.std_dev = 0.0;
  pop.width_mm.std_dev = 0.0;
  pop.mass_g.std_dev = 0.0;
  pop.detachment_force_n.std_dev = 0.0;
  pop.damage_threshold_n.std_dev = 0.0;
  return pop;
}

bool same_berry(const BerrySpec& a, const BerrySpec& b) {
  return a.length_mm == b.length_mm && a.width_mm == b.width_mm && a.mass_g == b.mass_g &&
         a.detachment_force_n == b.detachment_force_n &&
         a.damage_threshold_n == b.damage_threshold_n &&
         a.rigid_tip_factor == b.rigid_tip_factor;
}

}  // namespace

TEST_CASE("berry sampling is seed- and index-deterministic") {
  BerryPopulation pop;
  pop.seed = 77;
  const BerrySpec a = sample_berry(pop, 5);
  const BerrySpec b = sample_berry(pop, 5);
  CHECK(same_berry(a, b));
  const BerrySpec c = sample_berry(pop, 6);
  CHECK_FALSE(same_berry(a, c));
  a.validate();
  CHECK(a.width_mm >= pop.width_mm.lo);
  CHECK(a.width_mm <= pop.width_mm.hi);
}

TEST_CASE("zero-variance population samples the exact means") {
  BerryPopulation pop = point_mass_population();
  const BerrySpec b = sample_berry(pop, 0);
  CHECK(b.length_mm == 30.0);
  CHECK(b.width_mm == 21.0);
  CHECK(b.mass_g == 8.0);
  CHECK(b.detachment_force_n == 1.24);
  CHECK(b.damage_threshold_n == 1.40);
  CHECK(b.rigid_tip_factor == 1.4);
}

TEST_CASE("berry validation catches out-of-envelope values") {
  BerrySpec bad;
  bad.width_mm = 60.0;
  CHECK_THROWS(bad.validate());
  BerrySpec tip;
  tip.rigid_tip_factor = 0.9;
  CHECK_THROWS(tip.validate());
  TruncatedNormalSpec inv{1.0, 0.5, 2.0, 1.0};
  CHECK_THROWS(inv.validate());
  TruncatedNormalSpec outside{30.0, 0.0, 24.0, 26.0};
  CHECK_THROWS(outside.validate());
  BerryPopulation pop;
  pop.width_mm.hi = 55.0;
  CHECK_THROWS(pop.validate());
}

TEST_CASE("mode names round trip") {
  for (HarvestMode m :
       {HarvestMode::force_feedback, HarvestMode::fixed_retraction, HarvestMode::hand}) {
    CHECK(harvest_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS(harvest_mode_from_string("levitation"));
}

TEST_CASE("policy validation") {
  const SimSetup setup = SimSetup::defaults();
  HarvestPolicy ok;
  CHECK_NOTHROW(ok.validate(setup.cal, setup.act));
  HarvestPolicy unnamed;
  unnamed.label = "";
  CHECK_THROWS(unnamed.validate(setup.cal, setup.act));
  HarvestPolicy zero_set;
  zero_set.setpoint_n = 0.0;
  CHECK_THROWS(zero_set.validate(setup.cal, setup.act));
  // The low-gain field amplifier cannot represent the working setpoints.
  CHECK_THROWS(ok.validate(SensorCalibration::field2020(), setup.act));
  HarvestPolicy far;
  far.mode = HarvestMode::fixed_retraction;
  far.commanded_retraction_mm = 12.0;
  CHECK_THROWS(far.validate(setup.cal, setup.act));
  HarvestPolicy hand;
  hand.mode = HarvestMode::hand;
  hand.hand_time_s = 0.0;
  CHECK_THROWS(hand.validate(setup.cal, setup.act));
}

TEST_CASE("hand trials book the reference time and always succeed") {
  const SimSetup setup = SimSetup::defaults();
  HarvestPolicy hand;
  hand.mode = HarvestMode::hand;
  hand.label = "Hand";
  hand.hand_time_s = 1.4;
  BerrySpec berry;
  const TrialRecord rec = attempt_harvest(setup, hand, berry, 1, 0);
  CHECK(rec.succeeded);
  CHECK_FALSE(rec.damaged);
  CHECK(rec.harvest_time_s == 1.4);
  CHECK(rec.peak_finger_force_n == 0.0);
}

TEST_CASE("a berry wider than the opening is rejected") {
  const SimSetup setup = SimSetup::defaults();
  HarvestPolicy fb;
  BerrySpec berry;
  berry.width_mm = 60.0;
  CHECK_THROWS(attempt_harvest(setup, fb, berry, 1, 0));
}

TEST_CASE("an already-detached berry succeeds under every machine policy") {
  const SimSetup setup = SimSetup::defaults();
  BerrySpec loose;
  loose.detachment_force_n = 1e-12;
  HarvestPolicy fb;
  const TrialRecord r1 = attempt_harvest(setup, fb, loose, 1, 0);
  CHECK(r1.succeeded);
  HarvestPolicy fixed;
  fixed.mode = HarvestMode::fixed_retraction;
  const TrialRecord r2 = attempt_harvest(setup, fixed, loose, 1, 0);
  CHECK(r2.succeeded);
}

TEST_CASE("fixed retraction books the open-loop close time and force") {
  const SimSetup setup = SimSetup::defaults();
  HarvestPolicy fixed;
  fixed.mode = HarvestMode::fixed_retraction;
  fixed.commanded_retraction_mm = 4.0;
  BerrySpec berry;  // 21 mm wide, detach 1.2
  const TrialRecord rec = attempt_harvest(setup, fixed, berry, 1, 0);

  const ContactPlant plant(setup.gripper, setup.map, setup.contact, berry.width_mm);
  const double force = plant.force_n(4.0);
  CHECK(rec.peak_finger_force_n == force);  // same evaluation, bit-exact
  CHECK(rec.succeeded == (3.0 * force >= berry.detachment_force_n));
  CHECK(rec.succeeded);

  const double close_s = (fixed.commanded_retraction_mm - setup.act.travel_min_mm) /
                         (setup.ctrl.max_step_rate / setup.act.steps_per_mm);
  CHECK(rec.harvest_time_s == fixed.approach_time_s + close_s + fixed.stow_time_s);
  CHECK(rec.settle_ticks == 400);  // 0.04 s at 10 kHz

  // Open loop has no rigid-tip scaling: damage compares the raw force.
  CHECK(rec.damaged == (force >= berry.damage_threshold_n));
  BerrySpec tender = berry;
  tender.damage_threshold_n = force * 0.99;
  CHECK(attempt_harvest(setup, fixed, tender, 1, 0).damaged);
  BerrySpec tough = berry;
  tough.damage_threshold_n = force * 1.01;
  CHECK_FALSE(attempt_harvest(setup, fixed, tough, 1, 0).damaged);
}

TEST_CASE("feedback grasp ends at the detachment crossing") {
  const SimSetup setup = SimSetup::defaults();
  HarvestPolicy fb;  // setpoint 0.59
  BerrySpec berry;
  berry.detachment_force_n = 1.2;   // crossing at 0.4 N per finger, below the setpoint
  berry.damage_threshold_n = 10.0;  // damage out of the picture
  const TrialRecord rec = attempt_harvest(setup, fb, berry, 42, 0);
  CHECK(rec.succeeded);
  CHECK(3.0 * rec.peak_finger_force_n >= berry.detachment_force_n);
  // One tick advances at most max_step_rate / rate / steps_per_mm = 0.01 mm,
  // so the crossing overshoot is bounded by a hundredth of the stiffness.
  CHECK(rec.peak_finger_force_n <= berry.detachment_force_n / 3.0 + 0.01);
  CHECK_FALSE(rec.damaged);
  const auto timeout_ticks = static_cast<std::uint64_t>(fb.timeout_s * 10000);
  CHECK(rec.settle_ticks < timeout_ticks);
  CHECK(rec.harvest_time_s ==
        fb.approach_time_s + double(rec.settle_ticks) / 10000.0 + fb.stow_time_s);
}

TEST_CASE("an unreachable crossing books a screened timeout") {
  const SimSetup setup = SimSetup::defaults();
  HarvestPolicy fb;  // setpoint 0.59, timeout 8 s
  BerrySpec stubborn;
  stubborn.detachment_force_n = 4.0;  // needs 1.33 N per finger, far past the stall
  const TrialRecord rec = attempt_harvest(setup, fb, stubborn, 42, 0);
  CHECK_FALSE(rec.succeeded);
  CHECK(rec.settle_ticks == 80000);  // full 8 s at 10 kHz
  CHECK(rec.harvest_time_s == fb.approach_time_s + fb.timeout_s + fb.stow_time_s);
  CHECK(rec.peak_finger_force_n > 0.0);
  CHECK(rec.peak_finger_force_n < fb.setpoint_n);  // stalls just under the threshold
  CHECK(rec.damaged == (stubborn.rigid_tip_factor * rec.peak_finger_force_n >=
                        stubborn.damage_threshold_n));
}

TEST_CASE("adc mode takes the full loop to the same timeout verdict") {
  SimSetup setup = SimSetup::defaults();
  setup.use_adc = true;  // quantized measurements: screening is disabled
  HarvestPolicy fb;
  fb.timeout_s = 0.5;  // keep the explicit loop short
  BerrySpec stubborn;
  stubborn.detachment_force_n = 4.0;
  const TrialRecord rec = attempt_harvest(setup, fb, stubborn, 42, 0);
  CHECK_FALSE(rec.succeeded);
  // The explicit loop either holds quietly or runs out the clock; both end
  // the grasp leg at settle_ticks.
  CHECK(rec.settle_ticks > 0);
  CHECK(rec.settle_ticks <= 5000);
  CHECK(rec.harvest_time_s ==
        fb.approach_time_s + double(rec.settle_ticks) / 10000.0 + fb.stow_time_s);
}

TEST_CASE("campaigns aggregate in trial order and reject empty runs") {
  const SimSetup setup = SimSetup::defaults();
  HarvestPolicy fb;
  BerryPopulation pop;
  pop.seed = 99;
  CHECK_THROWS(run_campaign(setup, fb, pop, 0, 5));

  const CampaignResult run = run_campaign(setup, fb, pop, 400, 5, 1);
  REQUIRE(run.records.size() == 400);

  // Hand-computed aggregation over the records must match the summary.
  std::uint64_t succ = 0, dmg = 0;
  double time_sum = 0.0, peak_sum = 0.0;
  for (const TrialRecord& rec : run.records) {
    peak_sum += rec.peak_finger_force_n;
    if (rec.succeeded) {
      ++succ;
      time_sum += rec.harvest_time_s;
      if (rec.damaged) ++dmg;
    }
  }
  CHECK(run.summary.trials == 400);
  CHECK(run.summary.successes == succ);
  CHECK(run.summary.damaged_successes == dmg);
  CHECK(run.summary.reliability_pct == 100.0 * double(succ) / 400.0);
  CHECK(run.summary.rdr_pct == 100.0 * double(dmg) / double(succ));
  CHECK(run.summary.mean_time_s == time_sum / double(succ));
  CHECK(run.summary.mean_peak_force_n == peak_sum / 400.0);

  // Per-record audit: times and damage verdicts stay self-consistent.
  for (const TrialRecord& rec : run.records) {
    REQUIRE(rec.harvest_time_s >= fb.approach_time_s + fb.stow_time_s);
    REQUIRE(rec.peak_finger_force_n >= 0.0);
    REQUIRE(rec.damaged == (rec.berry.rigid_tip_factor * rec.peak_finger_force_n >=
                            rec.berry.damage_threshold_n));
    if (rec.succeeded)
      REQUIRE(3.0 * rec.peak_finger_force_n >= rec.berry.detachment_force_n);
  }
}

TEST_CASE("campaign results are independent of the parallelism degree") {
  const SimSetup setup = SimSetup::defaults();
  HarvestPolicy fb;
  BerryPopulation pop;
  pop.seed = 31;
  const CampaignResult serial = run_campaign(setup, fb, pop, 200, 12, 1);
  const CampaignResult threaded = run_campaign(setup, fb, pop, 200, 12, 4);
  REQUIRE(serial.records.size() == threaded.records.size());
  for (size_t i = 0; i < serial.records.size(); ++i) {
    const TrialRecord& a = serial.records[i];
    const TrialRecord& b = threaded.records[i];
    REQUIRE(a.trial == b.trial);
    REQUIRE(same_berry(a.berry, b.berry));
    REQUIRE(a.succeeded == b.succeeded);
    REQUIRE(a.damaged == b.damaged);
    REQUIRE(a.harvest_time_s == b.harvest_time_s);
    REQUIRE(a.peak_finger_force_n == b.peak_finger_force_n);
    REQUIRE(a.settle_ticks == b.settle_ticks);
  }
  CHECK(serial.summary.reliability_pct == threaded.summary.reliability_pct);
  CHECK(serial.summary.mean_time_s == threaded.summary.mean_time_s);
  CHECK(serial.summary.mean_peak_force_n == threaded.summary.mean_peak_force_n);
}

TEST_CASE("policy targets load from the field table") {
  const std::vector<PolicyTarget> targets =
      load_policy_targets(read_csv(kFixturesDir + "/table2_field.csv"));
  REQUIRE(targets.size() == 5);
  CHECK(targets[0].policy.label == "FB-0.59");
  CHECK(targets[0].policy.mode == HarvestMode::force_feedback);
  CHECK(targets[0].policy.setpoint_n == 0.59);
  CHECK(targets[0].reliability_pct == 77.92);
  CHECK(targets[0].time_s == 8.1);
  CHECK(targets[1].policy.setpoint_n == 0.69);
  CHECK(targets[2].policy.setpoint_n == 0.78);
  CHECK(targets[2].rdr_pct == 16.0);
  CHECK(targets[3].policy.mode == HarvestMode::fixed_retraction);
  CHECK(targets[3].policy.commanded_retraction_mm == 4.0);
  CHECK(targets[4].policy.mode == HarvestMode::hand);
  CHECK(targets[4].policy.hand_time_s == 1.4);

  CsvTable missing;
  missing.header = {"policy", "mode"};
  CHECK_THROWS(load_policy_targets(missing));
}

TEST_CASE("calibration needs three feedback rows") {
  const SimSetup setup = SimSetup::defaults();
  std::vector<PolicyTarget> targets =
      load_policy_targets(read_csv(kFixturesDir + "/table2_field.csv"));
  targets.erase(targets.begin());  // down to two feedback rows
  CHECK_THROWS(calibrate_population(setup, targets, BerryPopulation{}));
}

TEST_CASE("calibration fits the field rows with reduced effort") {
  const SimSetup setup = SimSetup::defaults();
  const std::vector<PolicyTarget> targets =
      load_policy_targets(read_csv(kFixturesDir + "/table2_field.csv"));
  CalibrationOptions opts;
  opts.seed = 1592639710;
  opts.margin_runs = 16;
  opts.surrogate_trials = 400;
  opts.engine_trials = 300;
  opts.max_engine_rounds = 1;
  const CalibrationResult res =
      calibrate_population(setup, targets, BerryPopulation{}, opts);
  REQUIRE(res.policies.size() == targets.size());
  REQUIRE(res.residuals.size() == targets.size());
  for (size_t i = 0; i < res.policies.size(); ++i) {
    CHECK(res.policies[i].label == targets[i].policy.label);
    if (targets[i].policy.mode != HarvestMode::hand) {
      CHECK(res.policies[i].approach_time_s >= 0.05);
      CHECK(res.policies[i].approach_time_s <= 60.0);
    }
    CHECK(res.residuals[i].target_reliability_pct == targets[i].reliability_pct);
  }
  res.population.validate();
  CHECK(res.population.detachment_force_n.std_dev > 0.0);
  // At this effort the fit lands near the targets even if not within the
  // acceptance tolerances; the full-effort run is covered elsewhere.
  for (const PolicyResidual& r : res.residuals)
    CHECK(std::abs(r.reliability_pct - r.target_reliability_pct) < 15.0);
}

TEST_CASE("contradictory targets report non-convergence instead of throwing") {
  const SimSetup setup = SimSetup::defaults();
  // Reliability falling as the setpoint rises is impossible for any crop:
  // per-berry success is monotone in the grip force.
  std::vector<PolicyTarget> targets =
      load_policy_targets(read_csv(kFixturesDir + "/table2_field.csv"));
  targets.resize(3);
  targets[0].reliability_pct = 95.0;
  targets[1].reliability_pct = 50.0;
  targets[2].reliability_pct = 20.0;
  CalibrationOptions opts;
  opts.margin_runs = 16;
  opts.surrogate_trials = 400;
  opts.engine_trials = 300;
  opts.max_engine_rounds = 1;
  const CalibrationResult res =
      calibrate_population(setup, targets, BerryPopulation{}, opts);
  CHECK_FALSE(res.converged);
  REQUIRE(res.residuals.size() == 3);
  double worst = 0.0;
  for (const PolicyResidual& r : res.residuals)
    worst = std::max(worst, std::abs(r.reliability_pct - r.target_reliability_pct));
  CHECK(worst > opts.tol_reliability_pts);
  CHECK(res.objective > 0.0);
}
