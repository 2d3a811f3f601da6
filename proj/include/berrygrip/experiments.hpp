#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "berrygrip/config.hpp"
#include "berrygrip/harvest.hpp"

namespace berrygrip {

// Everything an experiment run needs, resolved from the config file with
// code defaults filling the gaps.
struct SimConfig {
  SimSetup setup = SimSetup::defaults();
  BerryPopulation population{};
  CalibrationOptions calibration{};

  std::string fixtures_dir = "data/fixtures";
  std::string table2_targets_csv = "table2_field.csv";
  std::string table1_csv = "table1_finger_forces.csv";
  std::string fig14_csv = "fig14_retention.csv";
  std::string fig15_csv = "fig15_retention.csv";

  double fig12_min_setpoint_n = 0.491;
  double fig12_max_setpoint_n = 1.472;
  int fig12_setpoints = 11;
  int fig12_trials = 11;
  double fig12_object_diameter_mm = 30.0;
  double fig12_timeout_s = 8.0;
  double fig12_max_mean_error_n = 0.05;

  std::uint64_t table2_trials = 10000;
  double finger_threshold_n = 0.1;
  int expected_fingers = 3;

  static SimConfig from_config(const Config& cfg);
  // Relative fixture names resolve against fixtures_dir; absolute paths pass
  // through.
  std::string fixture_path(const std::string& name) const;
};

struct ExperimentReport {
  std::string name;
  bool checks_passed = true;
  std::vector<std::string> check_lines;  // "PASS: ..." / "FAIL: ..." per check
  std::vector<std::string> files;        // everything written, summary included
  std::string summary_path;              // JSON summary file
};

ExperimentReport run_calibrate_export(const SimConfig& cfg, const std::string& out_dir);
ExperimentReport run_sim_loop(const SimConfig& cfg, double setpoint_n, double diameter_mm,
                              std::uint64_t seed, const std::string& out_dir);
ExperimentReport run_fig12(const SimConfig& cfg, std::uint64_t seed, const std::string& out_dir);
ExperimentReport run_fig13(const SimConfig& cfg, const std::string& out_dir,
                           const std::string& digitized_csv = "");
ExperimentReport run_fig14(const SimConfig& cfg, const std::string& out_dir);
ExperimentReport run_fig17(const SimConfig& cfg, const std::string& out_dir);
ExperimentReport run_table2(const SimConfig& cfg, std::uint64_t seed, std::uint64_t trials,
                            int parallelism, const std::string& out_dir);
ExperimentReport run_fit_file(const std::string& in_csv, const std::string& x_col,
                              const std::string& y_col, bool zero_intercept,
                              const std::string& out_dir);
ExperimentReport run_analyze_fingers(const SimConfig& cfg, const std::string& fixture_csv,
                                     double threshold_n, const std::string& out_dir);

}  // namespace berrygrip
