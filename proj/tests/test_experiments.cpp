#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "berrygrip/csv.hpp"
#include "berrygrip/experiments.hpp"

using namespace berrygrip;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kFixturesDir = std::string(BERRYGRIP_DATA_DIR) + "/fixtures";

SimConfig test_config() {
  SimConfig cfg;
  cfg.fixtures_dir = kFixturesDir;
  return cfg;
}

std::string fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "berrygrip_unit" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

json load_summary(const ExperimentReport& rep) {
  REQUIRE_FALSE(rep.summary_path.empty());
  REQUIRE(fs::exists(rep.summary_path));
  return json::parse(read_text_file(rep.summary_path));
}

void require_all_files_exist(const ExperimentReport& rep, const std::string& out_dir) {
  for (const std::string& f : rep.files) {
    REQUIRE(fs::exists(f));
    // Everything an experiment writes stays inside its out directory.
    REQUIRE(fs::path(f).parent_path() == fs::path(out_dir));
  }
}

}  // namespace

TEST_CASE("config file overrides reach the sim config") {
  const Config cfg = Config::parse_string(
      "[sensor]\n"
      "preset = field2020\n"
      "noise_std_v = 0.003\n"
      "[controller]\n"
      "kp = 1234\n"
      "[population]\n"
      "detachment_mean = 1.5\n"
      "seed = 9\n"
      "[fig12]\n"
      "trials = 4\n"
      "[paths]\n"
      "fixtures_dir = /tmp/fx\n");
  const SimConfig sim = SimConfig::from_config(cfg);
  CHECK(sim.setup.cal.slope_v_per_n == 5.232);
  CHECK(sim.setup.noise_std_v == 0.003);
  CHECK(sim.setup.ctrl.kp == 1234.0);
  CHECK(sim.population.detachment_force_n.mean == 1.5);
  CHECK(sim.population.seed == 9);
  CHECK(sim.fig12_trials == 4);
  CHECK(sim.fixtures_dir == "/tmp/fx");

  const SimConfig defaults = SimConfig::from_config(Config::parse_string(""));
  CHECK(defaults.setup.cal.slope_v_per_n == SensorCalibration::procedure().slope_v_per_n);
  CHECK(defaults.fig12_setpoints == 11);
  CHECK(defaults.table2_trials == 10000);

  CHECK_THROWS(SimConfig::from_config(
      Config::parse_string("[sensor]\npreset = wrong\n")));
}

TEST_CASE("fixture paths resolve against the fixtures directory") {
  SimConfig cfg;
  cfg.fixtures_dir = "/data/fx";
  CHECK(cfg.fixture_path("a.csv") == "/data/fx/a.csv");
  CHECK(cfg.fixture_path("/abs/b.csv") == "/abs/b.csv");
}

TEST_CASE("calibrate export passes its own checks") {
  const std::string out = fresh_dir("calibrate");
  const ExperimentReport rep = run_calibrate_export(test_config(), out);
  CHECK(rep.checks_passed);
  require_all_files_exist(rep, out);
  const json j = load_summary(rep);
  CHECK(j["schema"] == "berrygrip/1");
  CHECK(j["experiment"] == "calibrate");
  CHECK(j["checks_passed"] == true);
}

TEST_CASE("sim loop settles and records a trajectory") {
  const std::string out = fresh_dir("sim_loop");
  const ExperimentReport rep = run_sim_loop(test_config(), 0.59, 30.0, 42, out);
  CHECK(rep.checks_passed);
  require_all_files_exist(rep, out);
  bool have_trajectory = false;
  for (const std::string& f : rep.files)
    if (fs::path(f).filename() == "sim_loop_trajectory.csv") have_trajectory = true;
  CHECK(have_trajectory);
  const CsvTable traj = read_csv((fs::path(out) / "sim_loop_trajectory.csv").string());
  CHECK(traj.has_column("retraction_mm"));
  CHECK(traj.rows.size() > 10);
}

TEST_CASE("fig12 error sweep passes at full scale") {
  const std::string out = fresh_dir("fig12");
  const ExperimentReport rep = run_fig12(test_config(), 42, out);
  CHECK(rep.checks_passed);
  require_all_files_exist(rep, out);
  const CsvTable errors = read_csv((fs::path(out) / "fig12_errors.csv").string());
  CHECK(errors.rows.size() == 121);  // 11 setpoints x 11 trials
}

TEST_CASE("fig12 reruns are byte-identical") {
  const std::string out_a = fresh_dir("fig12_a");
  const std::string out_b = fresh_dir("fig12_b");
  const ExperimentReport a = run_fig12(test_config(), 42, out_a);
  const ExperimentReport b = run_fig12(test_config(), 42, out_b);
  REQUIRE(a.files.size() == b.files.size());
  for (size_t i = 0; i < a.files.size(); ++i) {
    REQUIRE(fs::path(a.files[i]).filename() == fs::path(b.files[i]).filename());
    REQUIRE(read_text_file(a.files[i]) == read_text_file(b.files[i]));
  }
  // A different seed must actually change the data.
  const std::string out_c = fresh_dir("fig12_c");
  const ExperimentReport c = run_fig12(test_config(), 43, out_c);
  CHECK(read_text_file((fs::path(out_a) / "fig12_errors.csv").string()) !=
        read_text_file((fs::path(out_c) / "fig12_errors.csv").string()));
}

TEST_CASE("fig13 curvature sweeps pass their residual checks") {
  const std::string out = fresh_dir("fig13");
  const ExperimentReport rep = run_fig13(test_config(), out);
  CHECK(rep.checks_passed);
  require_all_files_exist(rep, out);
  const json j = load_summary(rep);
  CHECK(j["data"]["retraction_fit"]["a1"].get<double>() == doctest::Approx(2.25).epsilon(1e-6));
  CHECK(j["data"]["force_fit"]["b1"].get<double>() == doctest::Approx(0.85).epsilon(1e-6));
}

TEST_CASE("fig14 retention fixture checks pass") {
  const std::string out = fresh_dir("fig14");
  const ExperimentReport rep = run_fig14(test_config(), out);
  CHECK(rep.checks_passed);
  require_all_files_exist(rep, out);
}

TEST_CASE("fig17 force surface checks pass") {
  const std::string out = fresh_dir("fig17");
  const ExperimentReport rep = run_fig17(test_config(), out);
  CHECK(rep.checks_passed);
  require_all_files_exist(rep, out);
  const CsvTable surface = read_csv((fs::path(out) / "fig17_surface.csv").string());
  CHECK(surface.rows.size() == 180);  // 9 retraction x 20 diameter grid
}

TEST_CASE("fit tool recovers coefficients from a csv") {
  const std::string out = fresh_dir("fit");
  const std::string in_csv = (fs::path(out) / "input.csv").string();
  CsvWriter w({"x", "y"});
  for (int i = 0; i <= 12; ++i) {
    const double x = 0.5 * i;
    w.add_row({format_g9(x), format_g9(1.0 + 3.0 * x + 2.0 * x * x)});
  }
  w.write_file(in_csv);
  const ExperimentReport rep = run_fit_file(in_csv, "x", "y", false, out);
  CHECK(rep.checks_passed);
  const json j = load_summary(rep);
  CHECK(j["data"]["coefficients"][0].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(j["data"]["coefficients"][1].get<double>() == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(j["data"]["coefficients"][2].get<double>() == doctest::Approx(2.0).epsilon(1e-6));
  CHECK_THROWS(run_fit_file(in_csv, "nope", "y", false, out));
}

TEST_CASE("finger analysis runner agrees with the fixture") {
  const std::string out = fresh_dir("fingers");
  const ExperimentReport rep = run_analyze_fingers(test_config(), "", 0.0, out);
  CHECK(rep.checks_passed);
  const json j = load_summary(rep);
  CHECK(j["data"]["recommended_fingers"] == 3);
}

TEST_CASE("table2 runner writes the full artifact set at reduced effort") {
  SimConfig cfg = test_config();
  cfg.calibration.margin_runs = 8;
  cfg.calibration.surrogate_trials = 100;
  cfg.calibration.engine_trials = 100;
  cfg.calibration.max_engine_rounds = 1;
  const std::string out = fresh_dir("table2_small");
  // 300 trials per policy: structure and determinism matter here, tolerance
  // checks at this effort may fail and that is fine.
  const ExperimentReport rep = run_table2(cfg, 42, 300, 1, out);
  const json j = load_summary(rep);
  CHECK(j["schema"] == "berrygrip/1");
  CHECK(j["data"]["trials_per_policy"] == 300);
  REQUIRE(j["data"]["rows"].size() == 5);
  CHECK(j["data"]["rows"][0]["policy"] == "FB-0.59");
  CHECK(j["data"]["rows"][4]["policy"] == "Hand");
  REQUIRE(fs::exists(fs::path(out) / "table2_summary.csv"));
  const CsvTable summary = read_csv((fs::path(out) / "table2_summary.csv").string());
  CHECK(summary.rows.size() == 5);
  for (const std::string& f : rep.files) REQUIRE(fs::exists(f));
}
