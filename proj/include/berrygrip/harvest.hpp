#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "berrygrip/control.hpp"
#include "berrygrip/csv.hpp"
#include "berrygrip/grasp.hpp"
#include "berrygrip/rng.hpp"
#include "berrygrip/sensing.hpp"

namespace berrygrip {

struct BerrySpec {
  double length_mm = 30.0;
  double width_mm = 21.0;
  double mass_g = 8.0;
  double detachment_force_n = 1.2;
  double damage_threshold_n = 1.4;
  double rigid_tip_factor = 1.4;

  void validate() const;
};

struct TruncatedNormalSpec {
  double mean = 0.0;
  double std_dev = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  void validate() const;
  double sample(RandomStream& rng) const { return rng.truncated_normal(mean, std_dev, lo, hi); }
};

// Truncated-normal berry crop. Campaign trials derive their stream from the
// campaign seed and trial index, so draws are independent of scheduling.
struct BerryPopulation {
  TruncatedNormalSpec length_mm{30.0, 2.0, 24.0, 36.0};
  TruncatedNormalSpec width_mm{21.0, 1.6, 16.0, 27.0};
  TruncatedNormalSpec mass_g{8.0, 1.0, 5.0, 11.0};
  TruncatedNormalSpec detachment_force_n{1.24, 0.62, 0.05, 4.0};
  TruncatedNormalSpec damage_threshold_n{1.40, 0.29, 0.55, 2.60};
  TruncatedNormalSpec rigid_tip_factor{1.4, 0.0, 1.4, 1.4};
  std::uint64_t seed = 0;

  void validate() const;
};

BerrySpec sample_berry(const BerryPopulation& pop, RandomStream& rng);
BerrySpec sample_berry(const BerryPopulation& pop, std::uint64_t index);

enum class HarvestMode { force_feedback, fixed_retraction, hand };

std::string to_string(HarvestMode mode);
HarvestMode harvest_mode_from_string(const std::string& name);

struct HarvestPolicy {
  HarvestMode mode = HarvestMode::force_feedback;
  std::string label = "FB";
  double setpoint_n = 0.59;             // force_feedback only
  double commanded_retraction_mm = 4.0; // fixed_retraction only
  double approach_time_s = 2.0;
  double stow_time_s = 1.0;
  double timeout_s = 8.0;
  double hand_time_s = 1.4;             // hand reference rows only

  void validate(const SensorCalibration& cal, const ActuatorModel& act) const;
};

// Everything the grasp engine needs about the machine (not the crop).
struct SimSetup {
  GripperGeometry gripper;
  CurvatureMap map;
  ContactModel contact;
  SensorCalibration cal;
  ControllerParams ctrl;
  ActuatorModel act;
  double noise_std_v = 0.005;
  bool use_adc = false;
  AdcModel adc{};
  int hold_ticks = 1000;

  static SimSetup defaults();
  void validate() const;
};

struct TrialRecord {
  std::uint64_t trial = 0;
  BerrySpec berry{};
  bool succeeded = false;
  bool damaged = false;                 // peak force (rigid-tip scaled in FB) met the damage threshold
  double harvest_time_s = 0.0;          // approach + grasp + stow
  double peak_finger_force_n = 0.0;
  std::uint64_t settle_ticks = 0;
};

// Reliability is successes over trials. Damage rate follows the post-harvest
// assay: damaged successes over successes, as does mean harvest time.
struct CampaignSummary {
  std::string policy_label;
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  std::uint64_t damaged_successes = 0;
  double reliability_pct = 0.0;
  double rdr_pct = 0.0;
  double mean_time_s = 0.0;
  double mean_peak_force_n = 0.0;       // over all trials
};

struct CampaignResult {
  CampaignSummary summary;
  std::vector<TrialRecord> records;
};

// One gripper-berry encounter under the policy. Success means the total grip
// force (three fingers) reached the berry's detachment force before the
// timeout; the grasp phase ends at that crossing. The rigid-tip factor scales
// the damage exposure in feedback modes only.
TrialRecord attempt_harvest(const SimSetup& setup, const HarvestPolicy& policy,
                            const BerrySpec& berry, std::uint64_t seed,
                            std::uint64_t trial_index);

// n seeded trials; records are indexed by trial and aggregation runs in trial
// order, so the result is identical for any parallelism degree.
CampaignResult run_campaign(const SimSetup& setup, const HarvestPolicy& policy,
                            const BerryPopulation& pop, std::uint64_t n_trials,
                            std::uint64_t seed, int parallelism = 1);

struct PolicyTarget {
  HarvestPolicy policy;
  double reliability_pct = 0.0;
  double rdr_pct = 0.0;
  double time_s = 0.0;
};

// Field-campaign reference rows from a fixture table with columns
// policy, mode, setpoint_N, retraction_mm, reliability_pct, harvest_time_s,
// rdr_pct (setpoint/retraction may be blank where not applicable).
std::vector<PolicyTarget> load_policy_targets(const CsvTable& table);

struct PolicyResidual {
  std::string label;
  double reliability_pct = 0.0;
  double rdr_pct = 0.0;
  double time_s = 0.0;
  double target_reliability_pct = 0.0;
  double target_rdr_pct = 0.0;
  double target_time_s = 0.0;
};

struct CalibrationOptions {
  std::uint64_t seed = 0x5eedc0de;
  int margin_runs = 144;        // closed-loop probes per feedback row
  int surrogate_trials = 4000;  // crop draws per row inside the search
  int engine_trials = 2000;     // full-engine trials per row per polish round
  int max_engine_rounds = 3;
  double tol_reliability_pts = 3.0;
  double tol_rdr_pts = 3.0;
  double tol_time_s = 0.5;
};

struct CalibrationResult {
  BerryPopulation population;
  std::vector<HarvestPolicy> policies;   // approach times solved against the targets
  std::vector<PolicyResidual> residuals; // final engine evaluation vs targets
  bool converged = false;
  double objective = 0.0;
};

// Fits the crop's detachment and damage distributions (and per-policy
// approach times) so simulated campaigns reproduce the reference rows.
// Derivative-free: probit-matched start, coordinate descent with restarts on
// a fast surrogate, then full-engine polish rounds. Infeasible targets never
// throw; the residual report carries the best found.
CalibrationResult calibrate_population(const SimSetup& setup,
                                       const std::vector<PolicyTarget>& targets,
                                       const BerryPopulation& initial,
                                       const CalibrationOptions& opts = {});

}  // namespace berrygrip
