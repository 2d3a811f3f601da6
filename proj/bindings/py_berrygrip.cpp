// Python bindings: the simulation core plus the experiment runners, enough to
// drive studies from a notebook without touching the CLI.
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "berrygrip/config.hpp"
#include "berrygrip/control.hpp"
#include "berrygrip/csv.hpp"
#include "berrygrip/experiments.hpp"
#include "berrygrip/fitting.hpp"
#include "berrygrip/geometry.hpp"
#include "berrygrip/grasp.hpp"
#include "berrygrip/harvest.hpp"
#include "berrygrip/rng.hpp"
#include "berrygrip/sensing.hpp"

namespace py = pybind11;
using namespace berrygrip;

PYBIND11_MODULE(_berrygrip, m) {
  m.doc() = "Tendon-driven soft gripper simulation core";

  // ---- geometry ----
  py::class_<Vec2>(m, "Vec2")
      .def(py::init<>())
      .def_readwrite("x_mm", &Vec2::x_mm)
      .def_readwrite("y_mm", &Vec2::y_mm)
      .def("__repr__", [](const Vec2& v) {
        return "Vec2(x_mm=" + format_g9(v.x_mm) + ", y_mm=" + format_g9(v.y_mm) + ")";
      });

  py::class_<FingerGeometry>(m, "FingerGeometry")
      .def(py::init<>())
      .def_readwrite("length_mm", &FingerGeometry::length_mm)
      .def_readwrite("tendon_offset_mm", &FingerGeometry::tendon_offset_mm)
      .def_readwrite("backbone_width_mm", &FingerGeometry::backbone_width_mm)
      .def_readwrite("backbone_thickness_mm", &FingerGeometry::backbone_thickness_mm)
      .def_readwrite("max_tendon_force_n", &FingerGeometry::max_tendon_force_n)
      .def("validate", &FingerGeometry::validate);

  py::class_<CurvatureMap>(m, "CurvatureMap")
      .def(py::init<>())
      .def_readwrite("retraction_a2", &CurvatureMap::retraction_a2)
      .def_readwrite("retraction_a1", &CurvatureMap::retraction_a1)
      .def_readwrite("force_b2", &CurvatureMap::force_b2)
      .def_readwrite("force_b1", &CurvatureMap::force_b1)
      .def_readwrite("retraction_min_mm", &CurvatureMap::retraction_min_mm)
      .def_readwrite("retraction_max_mm", &CurvatureMap::retraction_max_mm)
      .def("validate", &CurvatureMap::validate);

  py::class_<GripperGeometry>(m, "GripperGeometry")
      .def(py::init<>())
      .def_readwrite("angular_spacing_deg", &GripperGeometry::angular_spacing_deg)
      .def_readwrite("mount_offset_angle_deg", &GripperGeometry::mount_offset_angle_deg)
      .def_readwrite("palm_radius_mm", &GripperGeometry::palm_radius_mm)
      .def_readwrite("max_aperture_mm", &GripperGeometry::max_aperture_mm)
      .def("validate", &GripperGeometry::validate);

  m.def("make_gripper_geometry", &make_gripper_geometry,
        py::arg("finger") = FingerGeometry{}, py::arg("max_aperture_mm") = 55.0,
        py::arg("mount_offset_angle_deg") = 20.0);
  m.def("backbone_stiffness_ratio", &backbone_stiffness_ratio, py::arg("width_mm"),
        py::arg("thickness_mm"));
  m.def("curvature_from_retraction", &curvature_from_retraction, py::arg("retraction_mm"),
        py::arg("map"));
  m.def("curvature_from_tendon_force", &curvature_from_tendon_force, py::arg("force_n"),
        py::arg("map"), py::arg("max_tendon_force_n") = 20.0);
  m.def("arc_point", &arc_point, py::arg("kappa_per_m"), py::arg("length_mm"), py::arg("s"));
  m.def("grip_aperture", &grip_aperture, py::arg("retraction_mm"), py::arg("gripper"),
        py::arg("map"));
  m.def("contact_retraction", &contact_retraction, py::arg("object_diameter_mm"),
        py::arg("gripper"), py::arg("map"));

  // ---- sensing ----
  py::class_<SensorCalibration>(m, "SensorCalibration")
      .def(py::init<>())
      .def_readwrite("v_ref", &SensorCalibration::v_ref)
      .def_readwrite("v_supply", &SensorCalibration::v_supply)
      .def_readwrite("slope_v_per_n", &SensorCalibration::slope_v_per_n)
      .def_readwrite("v_min", &SensorCalibration::v_min)
      .def_readwrite("v_max", &SensorCalibration::v_max)
      .def("saturation_force_n", &SensorCalibration::saturation_force_n)
      .def("saturates", &SensorCalibration::saturates, py::arg("force_n"))
      .def_static("procedure", &SensorCalibration::procedure)
      .def_static("field2020", &SensorCalibration::field2020);

  m.def("two_point_calibrate", &two_point_calibrate, py::arg("span_force_n"),
        py::arg("zero_voltage_v"), py::arg("span_voltage_v"));
  m.def("force_to_voltage", &force_to_voltage, py::arg("force_n"), py::arg("cal"));
  m.def("voltage_to_force", &voltage_to_force, py::arg("voltage_v"), py::arg("cal"));

  py::class_<AdcModel>(m, "AdcModel")
      .def(py::init<>())
      .def_readwrite("bits", &AdcModel::bits)
      .def_readwrite("full_scale_v", &AdcModel::full_scale_v)
      .def("max_count", &AdcModel::max_count);

  m.def("adc_quantize", &adc_quantize, py::arg("voltage_v"), py::arg("adc"));
  m.def("adc_dequantize", &adc_dequantize, py::arg("counts"), py::arg("adc"));

  // ---- grasp ----
  py::class_<PushPullForces>(m, "PushPullForces")
      .def(py::init<>())
      .def_readwrite("push_n", &PushPullForces::push_n)
      .def_readwrite("pull_n", &PushPullForces::pull_n)
      .def("__repr__", [](const PushPullForces& p) {
        return "PushPullForces(push_n=" + format_g9(p.push_n) +
               ", pull_n=" + format_g9(p.pull_n) + ")";
      });

  m.def("cone_push_pull", &cone_push_pull, py::arg("finger_force_n"), py::arg("finger_count"),
        py::arg("cone_angle_deg"), py::arg("friction_coeff"));
  m.def("finger_force_from_push_pull", &finger_force_from_push_pull, py::arg("push_n"),
        py::arg("pull_n"), py::arg("finger_count"), py::arg("cone_angle_deg"));

  py::class_<ContactModel>(m, "ContactModel")
      .def(py::init<>())
      .def_readwrite("anchor_force_n", &ContactModel::anchor_force_n)
      .def_readwrite("anchor_retraction_mm", &ContactModel::anchor_retraction_mm)
      .def_readwrite("anchor_diameter_mm", &ContactModel::anchor_diameter_mm)
      .def("validate", &ContactModel::validate);

  py::class_<ContactPlant>(m, "ContactPlant")
      .def(py::init<const GripperGeometry&, const CurvatureMap&, const ContactModel&, double>(),
           py::arg("gripper"), py::arg("map"), py::arg("model"), py::arg("object_diameter_mm"))
      .def("force_n", &ContactPlant::force_n, py::arg("retraction_mm"))
      .def("contact_retraction_mm", &ContactPlant::contact_retraction_mm)
      .def("stiffness_n_per_mm", &ContactPlant::stiffness_n_per_mm);

  m.def("fingertip_force", &fingertip_force, py::arg("retraction_mm"),
        py::arg("object_diameter_mm"), py::arg("gripper"), py::arg("map"), py::arg("model"));

  py::class_<RetentionDataset>(m, "RetentionDataset")
      .def_static("from_csv_file", &RetentionDataset::from_csv_file, py::arg("path"))
      .def("merge", &RetentionDataset::merge, py::arg("other"))
      .def(
          "query",
          [](const RetentionDataset& ds, const std::string& shape, double retraction_mm) {
            return ds.query(retention_shape_from_string(shape), retraction_mm);
          },
          py::arg("shape"), py::arg("retraction_mm"));

  // ---- control ----
  py::class_<ControllerParams>(m, "ControllerParams")
      .def(py::init<>())
      .def_readwrite("kp", &ControllerParams::kp)
      .def_readwrite("kd", &ControllerParams::kd)
      .def_readwrite("tick_rate_hz", &ControllerParams::tick_rate_hz)
      .def_readwrite("deadband_v", &ControllerParams::deadband_v)
      .def_readwrite("max_step_rate", &ControllerParams::max_step_rate)
      .def("validate", &ControllerParams::validate);

  py::class_<ActuatorModel>(m, "ActuatorModel")
      .def(py::init<>())
      .def_readwrite("steps_per_mm", &ActuatorModel::steps_per_mm)
      .def_readwrite("travel_min_mm", &ActuatorModel::travel_min_mm)
      .def_readwrite("travel_max_mm", &ActuatorModel::travel_max_mm)
      .def_readwrite("back_drivable", &ActuatorModel::back_drivable)
      .def("validate", &ActuatorModel::validate);

  py::class_<LoopOptions>(m, "LoopOptions")
      .def(py::init<>())
      .def_readwrite("timeout_s", &LoopOptions::timeout_s)
      .def_readwrite("hold_ticks", &LoopOptions::hold_ticks)
      .def_readwrite("noise_std_v", &LoopOptions::noise_std_v)
      .def_readwrite("seed", &LoopOptions::seed)
      .def_readwrite("stream", &LoopOptions::stream)
      .def_readwrite("use_adc", &LoopOptions::use_adc)
      .def_readwrite("record_trajectory", &LoopOptions::record_trajectory)
      .def_readwrite("trajectory_stride", &LoopOptions::trajectory_stride);

  py::class_<TrajectorySample>(m, "TrajectorySample")
      .def_readonly("tick", &TrajectorySample::tick)
      .def_readonly("time_s", &TrajectorySample::time_s)
      .def_readonly("retraction_mm", &TrajectorySample::retraction_mm)
      .def_readonly("error_v", &TrajectorySample::error_v)
      .def_readonly("speed_steps_s", &TrajectorySample::speed_steps_s)
      .def_readonly("force_n_true", &TrajectorySample::force_n_true)
      .def_readonly("motor_on", &TrajectorySample::motor_on);

  py::class_<SettleReport>(m, "SettleReport")
      .def_readonly("settled", &SettleReport::settled)
      .def_readonly("timed_out", &SettleReport::timed_out)
      .def_readonly("settle_time_s", &SettleReport::settle_time_s)
      .def_readonly("force_error_n", &SettleReport::force_error_n)
      .def_readonly("peak_force_n", &SettleReport::peak_force_n)
      .def_readonly("final_force_n", &SettleReport::final_force_n)
      .def_readonly("final_retraction_mm", &SettleReport::final_retraction_mm)
      .def_readonly("ticks", &SettleReport::ticks);

  py::class_<LoopRun>(m, "LoopRun")
      .def_readonly("report", &LoopRun::report)
      .def_readonly("trajectory", &LoopRun::trajectory);

  m.def("run_closed_loop", &run_closed_loop, py::arg("plant_force_n"), py::arg("setpoint_n"),
        py::arg("cal"), py::arg("params"), py::arg("act"), py::arg("opts"),
        "Drive the force loop against plant_force_n(retraction_mm) -> N");

  // ---- harvest ----
  py::class_<BerrySpec>(m, "BerrySpec")
      .def(py::init<>())
      .def_readwrite("length_mm", &BerrySpec::length_mm)
      .def_readwrite("width_mm", &BerrySpec::width_mm)
      .def_readwrite("mass_g", &BerrySpec::mass_g)
      .def_readwrite("detachment_force_n", &BerrySpec::detachment_force_n)
      .def_readwrite("damage_threshold_n", &BerrySpec::damage_threshold_n)
      .def_readwrite("rigid_tip_factor", &BerrySpec::rigid_tip_factor)
      .def("validate", &BerrySpec::validate);

  py::class_<TruncatedNormalSpec>(m, "TruncatedNormalSpec")
      .def(py::init<>())
      .def(py::init([](double mean, double std_dev, double lo, double hi) {
             return TruncatedNormalSpec{mean, std_dev, lo, hi};
           }),
           py::arg("mean"), py::arg("std_dev"), py::arg("lo"), py::arg("hi"))
      .def_readwrite("mean", &TruncatedNormalSpec::mean)
      .def_readwrite("std_dev", &TruncatedNormalSpec::std_dev)
      .def_readwrite("lo", &TruncatedNormalSpec::lo)
      .def_readwrite("hi", &TruncatedNormalSpec::hi);

  py::class_<BerryPopulation>(m, "BerryPopulation")
      .def(py::init<>())
      .def_readwrite("length_mm", &BerryPopulation::length_mm)
      .def_readwrite("width_mm", &BerryPopulation::width_mm)
      .def_readwrite("mass_g", &BerryPopulation::mass_g)
      .def_readwrite("detachment_force_n", &BerryPopulation::detachment_force_n)
      .def_readwrite("damage_threshold_n", &BerryPopulation::damage_threshold_n)
      .def_readwrite("rigid_tip_factor", &BerryPopulation::rigid_tip_factor)
      .def_readwrite("seed", &BerryPopulation::seed)
      .def("validate", &BerryPopulation::validate);

  m.def(
      "sample_berry",
      [](const BerryPopulation& pop, std::uint64_t index) { return sample_berry(pop, index); },
      py::arg("population"), py::arg("index"));

  py::enum_<HarvestMode>(m, "HarvestMode")
      .value("force_feedback", HarvestMode::force_feedback)
      .value("fixed_retraction", HarvestMode::fixed_retraction)
      .value("hand", HarvestMode::hand);

  py::class_<HarvestPolicy>(m, "HarvestPolicy")
      .def(py::init<>())
      .def_readwrite("mode", &HarvestPolicy::mode)
      .def_readwrite("label", &HarvestPolicy::label)
      .def_readwrite("setpoint_n", &HarvestPolicy::setpoint_n)
      .def_readwrite("commanded_retraction_mm", &HarvestPolicy::commanded_retraction_mm)
      .def_readwrite("approach_time_s", &HarvestPolicy::approach_time_s)
      .def_readwrite("stow_time_s", &HarvestPolicy::stow_time_s)
      .def_readwrite("timeout_s", &HarvestPolicy::timeout_s)
      .def_readwrite("hand_time_s", &HarvestPolicy::hand_time_s);

  py::class_<SimSetup>(m, "SimSetup")
      .def(py::init<>())
      .def_static("defaults", &SimSetup::defaults)
      .def_readwrite("gripper", &SimSetup::gripper)
      .def_readwrite("map", &SimSetup::map)
      .def_readwrite("contact", &SimSetup::contact)
      .def_readwrite("cal", &SimSetup::cal)
      .def_readwrite("ctrl", &SimSetup::ctrl)
      .def_readwrite("act", &SimSetup::act)
      .def_readwrite("noise_std_v", &SimSetup::noise_std_v)
      .def_readwrite("use_adc", &SimSetup::use_adc)
      .def_readwrite("hold_ticks", &SimSetup::hold_ticks)
      .def("validate", &SimSetup::validate);

  py::class_<TrialRecord>(m, "TrialRecord")
      .def_readonly("trial", &TrialRecord::trial)
      .def_readonly("berry", &TrialRecord::berry)
      .def_readonly("succeeded", &TrialRecord::succeeded)
      .def_readonly("damaged", &TrialRecord::damaged)
      .def_readonly("harvest_time_s", &TrialRecord::harvest_time_s)
      .def_readonly("peak_finger_force_n", &TrialRecord::peak_finger_force_n)
      .def_readonly("settle_ticks", &TrialRecord::settle_ticks);

  py::class_<CampaignSummary>(m, "CampaignSummary")
      .def_readonly("policy_label", &CampaignSummary::policy_label)
      .def_readonly("trials", &CampaignSummary::trials)
      .def_readonly("successes", &CampaignSummary::successes)
      .def_readonly("damaged_successes", &CampaignSummary::damaged_successes)
      .def_readonly("reliability_pct", &CampaignSummary::reliability_pct)
      .def_readonly("rdr_pct", &CampaignSummary::rdr_pct)
      .def_readonly("mean_time_s", &CampaignSummary::mean_time_s)
      .def_readonly("mean_peak_force_n", &CampaignSummary::mean_peak_force_n);

  py::class_<CampaignResult>(m, "CampaignResult")
      .def_readonly("summary", &CampaignResult::summary)
      .def_readonly("records", &CampaignResult::records);

  m.def("attempt_harvest", &attempt_harvest, py::arg("setup"), py::arg("policy"),
        py::arg("berry"), py::arg("seed"), py::arg("trial_index"));
  m.def("run_campaign", &run_campaign, py::arg("setup"), py::arg("policy"),
        py::arg("population"), py::arg("n_trials"), py::arg("seed"), py::arg("parallelism") = 1,
        py::call_guard<py::gil_scoped_release>());

  py::class_<PolicyTarget>(m, "PolicyTarget")
      .def_readonly("policy", &PolicyTarget::policy)
      .def_readonly("reliability_pct", &PolicyTarget::reliability_pct)
      .def_readonly("rdr_pct", &PolicyTarget::rdr_pct)
      .def_readonly("time_s", &PolicyTarget::time_s);

  m.def(
      "load_policy_targets",
      [](const std::string& csv_path) { return load_policy_targets(read_csv(csv_path)); },
      py::arg("csv_path"));

  py::class_<PolicyResidual>(m, "PolicyResidual")
      .def_readonly("label", &PolicyResidual::label)
      .def_readonly("reliability_pct", &PolicyResidual::reliability_pct)
      .def_readonly("rdr_pct", &PolicyResidual::rdr_pct)
      .def_readonly("time_s", &PolicyResidual::time_s)
      .def_readonly("target_reliability_pct", &PolicyResidual::target_reliability_pct)
      .def_readonly("target_rdr_pct", &PolicyResidual::target_rdr_pct)
      .def_readonly("target_time_s", &PolicyResidual::target_time_s);

  py::class_<CalibrationOptions>(m, "CalibrationOptions")
      .def(py::init<>())
      .def_readwrite("seed", &CalibrationOptions::seed)
      .def_readwrite("margin_runs", &CalibrationOptions::margin_runs)
      .def_readwrite("surrogate_trials", &CalibrationOptions::surrogate_trials)
      .def_readwrite("engine_trials", &CalibrationOptions::engine_trials)
      .def_readwrite("max_engine_rounds", &CalibrationOptions::max_engine_rounds)
      .def_readwrite("tol_reliability_pts", &CalibrationOptions::tol_reliability_pts)
      .def_readwrite("tol_rdr_pts", &CalibrationOptions::tol_rdr_pts)
      .def_readwrite("tol_time_s", &CalibrationOptions::tol_time_s);

  py::class_<CalibrationResult>(m, "CalibrationResult")
      .def_readonly("population", &CalibrationResult::population)
      .def_readonly("policies", &CalibrationResult::policies)
      .def_readonly("residuals", &CalibrationResult::residuals)
      .def_readonly("converged", &CalibrationResult::converged)
      .def_readonly("objective", &CalibrationResult::objective);

  m.def("calibrate_population", &calibrate_population, py::arg("setup"), py::arg("targets"),
        py::arg("initial"), py::arg("opts") = CalibrationOptions{},
        py::call_guard<py::gil_scoped_release>());

  // ---- fitting ----
  py::class_<CircleFit>(m, "CircleFit")
      .def_readonly("center", &CircleFit::center)
      .def_readonly("radius_mm", &CircleFit::radius_mm)
      .def_readonly("curvature_per_m", &CircleFit::curvature_per_m)
      .def_readonly("straight", &CircleFit::straight);

  m.def(
      "circle_fit",
      [](const std::vector<std::pair<double, double>>& pts) {
        std::vector<Vec2> v;
        v.reserve(pts.size());
        for (const auto& [x, y] : pts) v.push_back({x, y});
        return circle_fit(v);
      },
      py::arg("points_mm"));

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("coefficients", &FitReport::coefficients)
      .def_readonly("mean_abs_error", &FitReport::mean_abs_error)
      .def_readonly("mean_percent_error", &FitReport::mean_percent_error)
      .def_readonly("residuals", &FitReport::residuals);

  m.def("quadratic_fit", &quadratic_fit, py::arg("xs"), py::arg("ys"),
        py::arg("zero_intercept") = false);

  py::class_<FingerRank>(m, "FingerRank")
      .def_readonly("name", &FingerRank::name)
      .def_readonly("mean_force_n", &FingerRank::mean_force_n);

  py::class_<FingerAnalysis>(m, "FingerAnalysis")
      .def_readonly("ranking", &FingerAnalysis::ranking)
      .def_readonly("all", &FingerAnalysis::all)
      .def_readonly("recommended_fingers", &FingerAnalysis::recommended_fingers)
      .def_readonly("threshold_n", &FingerAnalysis::threshold_n)
      .def_readonly("none_significant", &FingerAnalysis::none_significant);

  m.def(
      "finger_force_analysis",
      [](const std::string& csv_path, double threshold_n) {
        return finger_force_analysis(read_csv(csv_path), threshold_n);
      },
      py::arg("csv_path"), py::arg("threshold_n"));

  // ---- experiments ----
  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_static(
          "from_config_file",
          [](const std::string& path) { return SimConfig::from_config(Config::parse_file(path)); },
          py::arg("path"))
      .def_readwrite("setup", &SimConfig::setup)
      .def_readwrite("population", &SimConfig::population)
      .def_readwrite("calibration", &SimConfig::calibration)
      .def_readwrite("fixtures_dir", &SimConfig::fixtures_dir)
      .def_readwrite("fig12_trials", &SimConfig::fig12_trials)
      .def_readwrite("table2_trials", &SimConfig::table2_trials)
      .def_readwrite("finger_threshold_n", &SimConfig::finger_threshold_n)
      .def("fixture_path", &SimConfig::fixture_path, py::arg("name"));

  py::class_<ExperimentReport>(m, "ExperimentReport")
      .def_readonly("name", &ExperimentReport::name)
      .def_readonly("checks_passed", &ExperimentReport::checks_passed)
      .def_readonly("check_lines", &ExperimentReport::check_lines)
      .def_readonly("files", &ExperimentReport::files)
      .def_readonly("summary_path", &ExperimentReport::summary_path);

  m.def("run_calibrate_export", &run_calibrate_export, py::arg("cfg"), py::arg("out_dir"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_sim_loop", &run_sim_loop, py::arg("cfg"), py::arg("setpoint_n"),
        py::arg("diameter_mm"), py::arg("seed"), py::arg("out_dir"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_fig12", &run_fig12, py::arg("cfg"), py::arg("seed"), py::arg("out_dir"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_fig13", &run_fig13, py::arg("cfg"), py::arg("out_dir"),
        py::arg("digitized_csv") = "", py::call_guard<py::gil_scoped_release>());
  m.def("run_fig14", &run_fig14, py::arg("cfg"), py::arg("out_dir"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_fig17", &run_fig17, py::arg("cfg"), py::arg("out_dir"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_table2", &run_table2, py::arg("cfg"), py::arg("seed"), py::arg("trials"),
        py::arg("parallelism"), py::arg("out_dir"), py::call_guard<py::gil_scoped_release>());
  m.def("run_fit_file", &run_fit_file, py::arg("in_csv"), py::arg("x_col"), py::arg("y_col"),
        py::arg("zero_intercept"), py::arg("out_dir"));
  m.def("run_analyze_fingers", &run_analyze_fingers, py::arg("cfg"), py::arg("fixture_csv"),
        py::arg("threshold_n"), py::arg("out_dir"));

  // ---- rng ----
  py::class_<RandomStream>(m, "RandomStream")
      .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed"), py::arg("stream") = 0)
      .def("uniform", py::overload_cast<>(&RandomStream::uniform))
      .def("uniform_range", py::overload_cast<double, double>(&RandomStream::uniform),
           py::arg("lo"), py::arg("hi"))
      .def("gaussian", py::overload_cast<>(&RandomStream::gaussian))
      .def("gaussian_ms", py::overload_cast<double, double>(&RandomStream::gaussian),
           py::arg("mean"), py::arg("std_dev"))
      .def("truncated_normal", &RandomStream::truncated_normal, py::arg("mean"),
           py::arg("std_dev"), py::arg("lo"), py::arg("hi"));
}
