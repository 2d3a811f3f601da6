#include "berrygrip/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <utility>

#include "berrygrip/fitting.hpp"

#include "json.hpp"

namespace berrygrip {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

void add_check(ExperimentReport& rep, bool ok, const std::string& what) {
  rep.check_lines.push_back((ok ? "PASS: " : "FAIL: ") + what);
  if (!ok) rep.checks_passed = false;
}

// Writes <basename> under out_dir with the shared summary layout and records
// it on the report. Call after every other file and check is in.
void finish(ExperimentReport& rep, const std::string& out_dir, const std::string& basename,
            ordered_json data) {
  ordered_json j;
  j["schema"] = "berrygrip/1";
  j["experiment"] = rep.name;
  j["checks_passed"] = rep.checks_passed;
  j["checks"] = rep.check_lines;
  j["data"] = std::move(data);
  // Basenames only: summaries must not depend on where the run landed.
  ordered_json files = ordered_json::array();
  for (const std::string& f : rep.files) files.push_back(fs::path(f).filename().string());
  j["files"] = files;
  const std::string path = join_path(out_dir, basename);
  write_text_file(path, j.dump(2) + "\n");
  rep.summary_path = path;
  rep.files.push_back(path);
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  if (n == 1) {
    out.push_back(lo);
    return out;
  }
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

TruncatedNormalSpec read_tn(const Config& cfg, const std::string& section,
                            const std::string& prefix, TruncatedNormalSpec spec) {
  spec.mean = cfg.get_double(section, prefix + "_mean", spec.mean);
  spec.std_dev = cfg.get_double(section, prefix + "_std", spec.std_dev);
  spec.lo = cfg.get_double(section, prefix + "_lo", spec.lo);
  spec.hi = cfg.get_double(section, prefix + "_hi", spec.hi);
  return spec;
}

std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char c : label) {
    const bool keep = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                      (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    out.push_back(keep ? c : '_');
  }
  return out.empty() ? std::string("policy") : out;
}

}  // namespace

SimConfig SimConfig::from_config(const Config& cfg) {
  SimConfig out;
  SimSetup& s = out.setup;

  const std::string preset = cfg.get_string("sensor", "preset", "procedure");
  if (preset == "procedure") {
    s.cal = SensorCalibration::procedure();
  } else if (preset == "field2020" || preset == "field-2020") {
    s.cal = SensorCalibration::field2020();
  } else {
    throw std::invalid_argument("unknown sensor preset: " + preset);
  }
  s.cal.v_ref = cfg.get_double("sensor", "v_ref", s.cal.v_ref);
  s.cal.slope_v_per_n = cfg.get_double("sensor", "slope_v_per_n", s.cal.slope_v_per_n);
  s.noise_std_v = cfg.get_double("sensor", "noise_std_v", s.noise_std_v);
  s.use_adc = cfg.get_bool("sensor", "use_adc", s.use_adc);
  s.adc.bits = static_cast<int>(cfg.get_int("sensor", "adc_bits", s.adc.bits));

  s.ctrl.kp = cfg.get_double("controller", "kp", s.ctrl.kp);
  s.ctrl.kd = cfg.get_double("controller", "kd", s.ctrl.kd);
  s.ctrl.tick_rate_hz = cfg.get_double("controller", "tick_rate_hz", s.ctrl.tick_rate_hz);
  s.ctrl.deadband_v = cfg.get_double("controller", "deadband_v", s.ctrl.deadband_v);
  s.ctrl.max_step_rate = cfg.get_double("controller", "max_step_rate", s.ctrl.max_step_rate);
  out.setup.hold_ticks = static_cast<int>(cfg.get_int("controller", "hold_ticks", s.hold_ticks));

  s.act.steps_per_mm = cfg.get_double("actuator", "steps_per_mm", s.act.steps_per_mm);
  s.act.travel_min_mm = cfg.get_double("actuator", "travel_min_mm", s.act.travel_min_mm);
  s.act.travel_max_mm = cfg.get_double("actuator", "travel_max_mm", s.act.travel_max_mm);

  FingerGeometry finger = s.gripper.fingers[0];
  finger.length_mm = cfg.get_double("finger", "length_mm", finger.length_mm);
  finger.tendon_offset_mm = cfg.get_double("finger", "tendon_offset_mm", finger.tendon_offset_mm);
  finger.backbone_width_mm =
      cfg.get_double("finger", "backbone_width_mm", finger.backbone_width_mm);
  finger.backbone_thickness_mm =
      cfg.get_double("finger", "backbone_thickness_mm", finger.backbone_thickness_mm);
  finger.max_tendon_force_n =
      cfg.get_double("finger", "max_tendon_force_n", finger.max_tendon_force_n);
  const double aperture =
      cfg.get_double("gripper", "max_aperture_mm", s.gripper.max_aperture_mm);
  const double mount =
      cfg.get_double("gripper", "mount_offset_angle_deg", s.gripper.mount_offset_angle_deg);
  s.gripper = make_gripper_geometry(finger, aperture, mount);

  s.map.retraction_a1 = cfg.get_double("curvature_map", "retraction_a1", s.map.retraction_a1);
  s.map.retraction_a2 = cfg.get_double("curvature_map", "retraction_a2", s.map.retraction_a2);
  s.map.force_b1 = cfg.get_double("curvature_map", "force_b1", s.map.force_b1);
  s.map.force_b2 = cfg.get_double("curvature_map", "force_b2", s.map.force_b2);
  s.map.retraction_min_mm =
      cfg.get_double("curvature_map", "retraction_min_mm", s.map.retraction_min_mm);
  s.map.retraction_max_mm =
      cfg.get_double("curvature_map", "retraction_max_mm", s.map.retraction_max_mm);

  s.contact.anchor_force_n = cfg.get_double("contact", "anchor_force_n", s.contact.anchor_force_n);
  s.contact.anchor_retraction_mm =
      cfg.get_double("contact", "anchor_retraction_mm", s.contact.anchor_retraction_mm);
  s.contact.anchor_diameter_mm =
      cfg.get_double("contact", "anchor_diameter_mm", s.contact.anchor_diameter_mm);

  BerryPopulation& pop = out.population;
  pop.length_mm = read_tn(cfg, "population", "length", pop.length_mm);
  pop.width_mm = read_tn(cfg, "population", "width", pop.width_mm);
  pop.mass_g = read_tn(cfg, "population", "mass", pop.mass_g);
  pop.detachment_force_n = read_tn(cfg, "population", "detachment", pop.detachment_force_n);
  pop.damage_threshold_n = read_tn(cfg, "population", "damage", pop.damage_threshold_n);
  pop.rigid_tip_factor = read_tn(cfg, "population", "rigid_tip", pop.rigid_tip_factor);
  pop.seed = cfg.get_u64("population", "seed", pop.seed);

  CalibrationOptions& cal = out.calibration;
  cal.seed = cfg.get_u64("calibration", "seed", cal.seed);
  cal.margin_runs = static_cast<int>(cfg.get_int("calibration", "margin_runs", cal.margin_runs));
  cal.surrogate_trials =
      static_cast<int>(cfg.get_int("calibration", "surrogate_trials", cal.surrogate_trials));
  cal.engine_trials =
      static_cast<int>(cfg.get_int("calibration", "engine_trials", cal.engine_trials));
  cal.max_engine_rounds =
      static_cast<int>(cfg.get_int("calibration", "max_engine_rounds", cal.max_engine_rounds));
  cal.tol_reliability_pts =
      cfg.get_double("calibration", "tol_reliability_pts", cal.tol_reliability_pts);
  cal.tol_rdr_pts = cfg.get_double("calibration", "tol_rdr_pts", cal.tol_rdr_pts);
  cal.tol_time_s = cfg.get_double("calibration", "tol_time_s", cal.tol_time_s);

  out.fixtures_dir = cfg.get_string("paths", "fixtures_dir", out.fixtures_dir);
  out.table2_targets_csv = cfg.get_string("paths", "table2_targets_csv", out.table2_targets_csv);
  out.table1_csv = cfg.get_string("paths", "table1_csv", out.table1_csv);
  out.fig14_csv = cfg.get_string("paths", "fig14_csv", out.fig14_csv);
  out.fig15_csv = cfg.get_string("paths", "fig15_csv", out.fig15_csv);

  out.fig12_min_setpoint_n = cfg.get_double("fig12", "min_setpoint_n", out.fig12_min_setpoint_n);
  out.fig12_max_setpoint_n = cfg.get_double("fig12", "max_setpoint_n", out.fig12_max_setpoint_n);
  out.fig12_setpoints = static_cast<int>(cfg.get_int("fig12", "setpoints", out.fig12_setpoints));
  out.fig12_trials = static_cast<int>(cfg.get_int("fig12", "trials", out.fig12_trials));
  out.fig12_object_diameter_mm =
      cfg.get_double("fig12", "object_diameter_mm", out.fig12_object_diameter_mm);
  out.fig12_timeout_s = cfg.get_double("fig12", "timeout_s", out.fig12_timeout_s);
  out.fig12_max_mean_error_n =
      cfg.get_double("fig12", "max_mean_error_n", out.fig12_max_mean_error_n);

  out.table2_trials = cfg.get_u64("table2", "trials", out.table2_trials);
  out.finger_threshold_n = cfg.get_double("analysis", "finger_threshold_n", out.finger_threshold_n);
  out.expected_fingers =
      static_cast<int>(cfg.get_int("analysis", "expected_fingers", out.expected_fingers));

  out.setup.validate();
  out.population.validate();
  return out;
}

std::string SimConfig::fixture_path(const std::string& name) const {
  if (fs::path(name).is_absolute()) return name;
  return join_path(fixtures_dir, name);
}

ExperimentReport run_calibrate_export(const SimConfig& cfg, const std::string& out_dir) {
  ExperimentReport rep;
  rep.name = "calibrate";
  ensure_dir(out_dir);

  const AdcModel adc = cfg.setup.adc;
  struct Preset {
    std::string name;
    SensorCalibration cal;
  };
  const Preset presets[] = {{"procedure", SensorCalibration::procedure()},
                            {"field2020", SensorCalibration::field2020()}};

  ordered_json data;
  for (const Preset& p : presets) {
    CsvWriter w({"force_N", "voltage_V", "adc_counts"});
    const double f_hi = 1.05 * p.cal.saturation_force_n();
    double max_roundtrip = 0.0;
    for (double f : linspace(0.0, f_hi, 101)) {
      const double v = measure_voltage(f, p.cal, nullptr, nullptr);
      w.add_row({format_g9(f), format_g9(v), std::to_string(adc_quantize(v, adc))});
      if (!p.cal.saturates(f)) {
        const double back = voltage_to_force(force_to_voltage(f, p.cal), p.cal);
        max_roundtrip = std::max(max_roundtrip, std::abs(back - f));
      }
    }
    const std::string path = join_path(out_dir, "calibration_" + p.name + ".csv");
    w.write_file(path);
    rep.files.push_back(path);

    ordered_json pj;
    pj["slope_v_per_n"] = p.cal.slope_v_per_n;
    pj["v_ref"] = p.cal.v_ref;
    pj["saturation_force_n"] = p.cal.saturation_force_n();
    pj["max_roundtrip_error_n"] = max_roundtrip;
    data[p.name] = pj;

    add_check(rep, max_roundtrip <= 1e-12,
              p.name + " voltage round trip within 1e-12 N below saturation");
  }

  const SensorCalibration proc = presets[0].cal;
  const SensorCalibration field = presets[1].cal;
  add_check(rep, proc.slope_v_per_n == 1.5 / 3.9,
            "procedure gain equals the two-point value 1.5/3.9 V/N");
  add_check(rep, measure_voltage(2.0 * proc.saturation_force_n(), proc, nullptr, nullptr) == 5.0,
            "overload reading clamps to exactly 5 V");
  add_check(rep, field.saturates(cfg.fig12_min_setpoint_n),
            "field-2020 gain saturates at every bench setpoint");
  add_check(rep, !field.saturates(0.9 * field.saturation_force_n()),
            "field-2020 gain keeps readings below its rated range");

  data["adc_bits"] = adc.bits;
  finish(rep, out_dir, "calibrate_summary.json", std::move(data));
  return rep;
}

ExperimentReport run_sim_loop(const SimConfig& cfg, double setpoint_n, double diameter_mm,
                              std::uint64_t seed, const std::string& out_dir) {
  ExperimentReport rep;
  rep.name = "sim-loop";
  ensure_dir(out_dir);

  const SimSetup& s = cfg.setup;
  const ContactPlant plant(s.gripper, s.map, s.contact, diameter_mm);
  LoopOptions opts;
  opts.timeout_s = cfg.fig12_timeout_s;
  opts.hold_ticks = s.hold_ticks;
  opts.noise_std_v = s.noise_std_v;
  opts.seed = seed;
  opts.stream = 0;
  opts.use_adc = s.use_adc;
  opts.adc = s.adc;
  opts.record_trajectory = true;
  opts.trajectory_stride = 10;
  const LoopRun run = run_closed_loop([&plant](double r) { return plant.force_n(r); }, setpoint_n,
                                      s.cal, s.ctrl, s.act, opts);

  CsvWriter w({"tick", "time_s", "retraction_mm", "error_V", "speed_steps_s", "force_N_true",
               "motor_on"});
  for (const TrajectorySample& t : run.trajectory) {
    w.add_row({std::to_string(t.tick), format_g9(t.time_s), format_g9(t.retraction_mm),
               format_g9(t.error_v), format_g9(t.speed_steps_s), format_g9(t.force_n_true),
               t.motor_on ? "1" : "0"});
  }
  const std::string traj_path = join_path(out_dir, "sim_loop_trajectory.csv");
  w.write_file(traj_path);
  rep.files.push_back(traj_path);

  const SettleReport& r = run.report;
  add_check(rep, r.settled && !r.timed_out, "loop settled before the timeout");
  add_check(rep,
            r.final_retraction_mm >= s.act.travel_min_mm &&
                r.final_retraction_mm <= s.act.travel_max_mm,
            "final retraction stayed inside actuator travel");

  ordered_json data;
  data["setpoint_n"] = setpoint_n;
  data["object_diameter_mm"] = diameter_mm;
  data["seed"] = seed;
  data["contact_retraction_mm"] = plant.contact_retraction_mm();
  data["settled"] = r.settled;
  data["timed_out"] = r.timed_out;
  data["settle_time_s"] = r.settle_time_s;
  data["force_error_n"] = r.force_error_n;
  data["peak_force_n"] = r.peak_force_n;
  data["final_force_n"] = r.final_force_n;
  data["final_retraction_mm"] = r.final_retraction_mm;
  data["ticks"] = r.ticks;
  finish(rep, out_dir, "sim_loop_summary.json", std::move(data));
  return rep;
}

ExperimentReport run_fig12(const SimConfig& cfg, std::uint64_t seed, const std::string& out_dir) {
  ExperimentReport rep;
  rep.name = "fig12";
  ensure_dir(out_dir);
  if (cfg.fig12_setpoints < 2 || cfg.fig12_trials < 1)
    throw std::invalid_argument("fig12 needs at least two setpoints and one trial");

  const SimSetup& s = cfg.setup;
  const ContactPlant plant(s.gripper, s.map, s.contact, cfg.fig12_object_diameter_mm);
  const std::vector<double> setpoints =
      linspace(cfg.fig12_min_setpoint_n, cfg.fig12_max_setpoint_n, cfg.fig12_setpoints);

  CsvWriter w({"setpoint_N", "trial", "applied_force_N", "abs_error_N", "settle_time_s",
               "settled"});
  double err_sum = 0.0;
  double err_max = 0.0;
  int n_points = 0;
  int n_settled = 0;
  for (int i = 0; i < cfg.fig12_setpoints; ++i) {
    for (int j = 0; j < cfg.fig12_trials; ++j) {
      LoopOptions opts;
      opts.timeout_s = cfg.fig12_timeout_s;
      opts.hold_ticks = s.hold_ticks;
      opts.noise_std_v = s.noise_std_v;
      opts.seed = seed;
      opts.stream = static_cast<std::uint64_t>(i * cfg.fig12_trials + j) * 4;
      opts.use_adc = s.use_adc;
      opts.adc = s.adc;
      const LoopRun run = run_closed_loop([&plant](double r) { return plant.force_n(r); },
                                          setpoints[i], s.cal, s.ctrl, s.act, opts);
      const double applied = run.report.final_force_n;
      const double err = std::abs(applied - setpoints[i]);
      err_sum += err;
      err_max = std::max(err_max, err);
      ++n_points;
      if (run.report.settled) ++n_settled;
      w.add_row({format_g9(setpoints[i]), std::to_string(j), format_g9(applied), format_g9(err),
                 format_g9(run.report.settle_time_s), run.report.settled ? "1" : "0"});
    }
  }
  const std::string path = join_path(out_dir, "fig12_errors.csv");
  w.write_file(path);
  rep.files.push_back(path);

  const double mean_err = err_sum / n_points;
  add_check(rep, n_settled == n_points, "every grid point settled before the timeout");
  add_check(rep, mean_err <= cfg.fig12_max_mean_error_n,
            "mean force error " + format_g9(mean_err) + " N within " +
                format_g9(cfg.fig12_max_mean_error_n) + " N");

  ordered_json data;
  data["seed"] = seed;
  data["points"] = n_points;
  data["settled_points"] = n_settled;
  data["mean_abs_error_n"] = mean_err;
  data["max_abs_error_n"] = err_max;
  data["min_setpoint_n"] = cfg.fig12_min_setpoint_n;
  data["max_setpoint_n"] = cfg.fig12_max_setpoint_n;
  data["object_diameter_mm"] = cfg.fig12_object_diameter_mm;
  finish(rep, out_dir, "fig12_summary.json", std::move(data));
  return rep;
}

namespace {

// Curvature recovered from sampled backbone points, as the bench camera would
// see them: fit a circle through the arc and invert its radius.
double curvature_by_circle_fit(double kappa_per_m, double length_mm) {
  std::vector<Vec2> pts;
  pts.reserve(25);
  for (int i = 0; i < 25; ++i) pts.push_back(arc_point(kappa_per_m, length_mm, i / 24.0));
  const CircleFit fit = circle_fit(pts);
  return fit.straight ? 0.0 : fit.curvature_per_m;
}

struct SweepResult {
  std::vector<double> xs;
  std::vector<double> fitted;  // circle-fit curvature per sample
  double max_rel_residual = 0.0;
};

SweepResult curvature_sweep(const std::vector<double>& xs, const std::vector<double>& kappas,
                            double length_mm) {
  SweepResult out;
  out.xs = xs;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fitted = curvature_by_circle_fit(kappas[i], length_mm);
    out.fitted.push_back(fitted);
    if (kappas[i] != 0.0)
      out.max_rel_residual =
          std::max(out.max_rel_residual, std::abs(fitted - kappas[i]) / kappas[i]);
  }
  return out;
}

}  // namespace

ExperimentReport run_fig13(const SimConfig& cfg, const std::string& out_dir,
                           const std::string& digitized_csv) {
  ExperimentReport rep;
  rep.name = "fig13";
  ensure_dir(out_dir);

  const CurvatureMap& map = cfg.setup.map;
  const double length_mm = cfg.setup.gripper.fingers[0].length_mm;
  const double max_force = cfg.setup.gripper.fingers[0].max_tendon_force_n;

  // Retraction sweep: command the map, re-measure by circle fit, re-fit the
  // quadratic and compare coefficients.
  std::vector<double> dls, k_dl;
  for (int i = 0; i <= 20; ++i) {
    const double dl = map.retraction_min_mm +
                      (map.retraction_max_mm - map.retraction_min_mm) * i / 20.0;
    dls.push_back(dl);
    k_dl.push_back(curvature_from_retraction(dl, map));
  }
  const SweepResult dl_sweep = curvature_sweep(dls, k_dl, length_mm);
  {
    CsvWriter w({"retraction_mm", "curvature_map_1_per_m", "curvature_circle_fit_1_per_m",
                 "residual_1_per_m"});
    for (std::size_t i = 0; i < dls.size(); ++i)
      w.add_row({format_g9(dls[i]), format_g9(k_dl[i]), format_g9(dl_sweep.fitted[i]),
                 format_g9(dl_sweep.fitted[i] - k_dl[i])});
    const std::string path = join_path(out_dir, "fig13_retraction.csv");
    w.write_file(path);
    rep.files.push_back(path);
  }
  const FitReport dl_fit = quadratic_fit(dls, dl_sweep.fitted, true);

  // Force sweep, same treatment.
  std::vector<double> forces, k_f;
  for (int i = 0; i <= 20; ++i) {
    const double f = max_force * i / 20.0;
    forces.push_back(f);
    k_f.push_back(curvature_from_tendon_force(f, map, max_force));
  }
  const SweepResult f_sweep = curvature_sweep(forces, k_f, length_mm);
  {
    CsvWriter w({"force_N", "curvature_map_1_per_m", "curvature_circle_fit_1_per_m",
                 "residual_1_per_m"});
    for (std::size_t i = 0; i < forces.size(); ++i)
      w.add_row({format_g9(forces[i]), format_g9(k_f[i]), format_g9(f_sweep.fitted[i]),
                 format_g9(f_sweep.fitted[i] - k_f[i])});
    const std::string path = join_path(out_dir, "fig13_force.csv");
    w.write_file(path);
    rep.files.push_back(path);
  }
  const FitReport f_fit = quadratic_fit(forces, f_sweep.fitted, true);

  const auto rel_err = [](double got, double want) { return std::abs(got - want) / want; };
  add_check(rep, dl_sweep.max_rel_residual <= 1e-6,
            "circle fit recovers retraction-sweep curvature within 1e-6 relative");
  add_check(rep, f_sweep.max_rel_residual <= 1e-6,
            "circle fit recovers force-sweep curvature within 1e-6 relative");
  add_check(rep,
            rel_err(dl_fit.coefficients[1], map.retraction_a1) <= 1e-6 &&
                rel_err(dl_fit.coefficients[2], map.retraction_a2) <= 1e-6,
            "quadratic re-fit recovers the retraction map coefficients");
  add_check(rep,
            rel_err(f_fit.coefficients[1], map.force_b1) <= 1e-6 &&
                rel_err(f_fit.coefficients[2], map.force_b2) <= 1e-6,
            "quadratic re-fit recovers the force map coefficients");

  ordered_json data;
  data["retraction_fit"] = {{"a1", dl_fit.coefficients[1]},
                            {"a2", dl_fit.coefficients[2]},
                            {"mean_abs_error", dl_fit.mean_abs_error}};
  data["force_fit"] = {{"b1", f_fit.coefficients[1]},
                       {"b2", f_fit.coefficients[2]},
                       {"mean_abs_error", f_fit.mean_abs_error}};
  data["max_rel_residual_retraction"] = dl_sweep.max_rel_residual;
  data["max_rel_residual_force"] = f_sweep.max_rel_residual;

  // Optional digitized bench data: fit it with the same machinery and report
  // the coefficients; external data carries no hard pass bar.
  if (!digitized_csv.empty()) {
    const CsvTable t = read_csv(digitized_csv);
    const int c_dl = t.column("retraction_mm");
    const int c_f = t.column("force_N");
    const int c_k = t.column("curvature_1_per_m");
    if (c_k < 0 || (c_dl < 0 && c_f < 0))
      throw std::invalid_argument(
          "digitized curvature data needs curvature_1_per_m plus retraction_mm or force_N");
    std::vector<double> bx_dl, by_dl, bx_f, by_f;
    for (const auto& row : t.rows) {
      const double k = parse_number(row[c_k]);
      if (c_dl >= 0 && !row[c_dl].empty()) {
        bx_dl.push_back(parse_number(row[c_dl]));
        by_dl.push_back(k);
      } else if (c_f >= 0 && !row[c_f].empty()) {
        bx_f.push_back(parse_number(row[c_f]));
        by_f.push_back(k);
      }
    }
    ordered_json bench;
    if (bx_dl.size() >= 3) {
      const FitReport fit = quadratic_fit(bx_dl, by_dl, true);
      bench["retraction"] = {{"a1", fit.coefficients[1]},
                             {"a2", fit.coefficients[2]},
                             {"points", bx_dl.size()},
                             {"mean_percent_error", fit.mean_percent_error}};
    }
    if (bx_f.size() >= 3) {
      const FitReport fit = quadratic_fit(bx_f, by_f, true);
      bench["force"] = {{"b1", fit.coefficients[1]},
                        {"b2", fit.coefficients[2]},
                        {"points", bx_f.size()},
                        {"mean_percent_error", fit.mean_percent_error}};
    }
    data["digitized"] = bench;
  }

  finish(rep, out_dir, "fig13_summary.json", std::move(data));
  return rep;
}

ExperimentReport run_fig14(const SimConfig& cfg, const std::string& out_dir) {
  ExperimentReport rep;
  rep.name = "fig14";
  ensure_dir(out_dir);

  RetentionDataset ds = RetentionDataset::from_csv_file(cfg.fixture_path(cfg.fig14_csv));
  ds.merge(RetentionDataset::from_csv_file(cfg.fixture_path(cfg.fig15_csv)));

  CsvWriter w({"shape", "retraction_mm", "force_N"});
  for (const RetentionRecord& r : ds.records())
    w.add_row({to_string(r.shape), format_g9(r.retraction_mm), format_g9(r.force_n)});
  const std::string path = join_path(out_dir, "fig14_retention.csv");
  w.write_file(path);
  rep.files.push_back(path);

  struct Expect {
    RetentionShape shape;
    double retraction_mm;
    double force_n;
  };
  const Expect expects[] = {
      {RetentionShape::sphere, 4.0, 2.75},
      {RetentionShape::cylinder, 4.0, 3.72},
      {RetentionShape::cube, 4.0, 4.96},
      {RetentionShape::upright_cone, 4.0, 6.84},
      {RetentionShape::inverted_cone, 4.0, 10.84},
      {RetentionShape::icosahedron, 4.0, 6.65},
      {RetentionShape::stellated_dodecahedron, 4.0, 18.94},
      {RetentionShape::sphere, 7.0, 4.71},
      {RetentionShape::cylinder, 7.0, 3.50},
  };
  ordered_json values;
  for (const Expect& e : expects) {
    const double got = ds.query(e.shape, e.retraction_mm);
    values[to_string(e.shape) + "@" + format_g9(e.retraction_mm)] = got;
    add_check(rep, got == e.force_n,
              to_string(e.shape) + " retention at " + format_g9(e.retraction_mm) +
                  " mm reads exactly " + format_g9(e.force_n) + " N");
  }

  // Edge count beats smooth shapes: the star leads everything at 4 mm.
  const double star = ds.query(RetentionShape::stellated_dodecahedron, 4.0);
  bool star_leads = true;
  for (const Expect& e : expects)
    if (e.retraction_mm == 4.0 && e.shape != RetentionShape::stellated_dodecahedron)
      star_leads = star_leads && star > ds.query(e.shape, 4.0);
  add_check(rep, star_leads, "stellated dodecahedron retains hardest at 4 mm");
  add_check(rep,
            ds.query(RetentionShape::inverted_cone, 4.0) >
                ds.query(RetentionShape::upright_cone, 4.0),
            "inverted cone retains harder than upright at 4 mm");

  ordered_json data;
  data["records"] = ds.records().size();
  data["values"] = values;
  finish(rep, out_dir, "fig14_summary.json", std::move(data));
  return rep;
}

ExperimentReport run_fig17(const SimConfig& cfg, const std::string& out_dir) {
  ExperimentReport rep;
  rep.name = "fig17";
  ensure_dir(out_dir);

  const SimSetup& s = cfg.setup;
  CsvWriter w({"retraction_mm", "diameter_mm", "force_N"});
  for (int i = 0; i <= 8; ++i) {
    const double dl = 5.0 + 0.5 * i;
    for (int j = 0; j <= 19; ++j) {
      const double d = 9.0 + 2.0 * j;
      w.add_row({format_g9(dl), format_g9(d),
                 format_g9(fingertip_force(dl, d, s.gripper, s.map, s.contact))});
    }
  }
  const std::string path = join_path(out_dir, "fig17_surface.csv");
  w.write_file(path);
  rep.files.push_back(path);

  const double anchor = fingertip_force(s.contact.anchor_retraction_mm,
                                        s.contact.anchor_diameter_mm, s.gripper, s.map, s.contact);
  add_check(rep, anchor == s.contact.anchor_force_n,
            "anchor point reproduces " + format_g9(s.contact.anchor_force_n) + " N exactly");

  ordered_json stiffness;
  bool monotone = true;
  for (double d : {9.0, 21.0, 30.0, 47.0}) {
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
      const double f = fingertip_force(0.1 * i, d, s.gripper, s.map, s.contact);
      if (f < prev) monotone = false;
      prev = f;
    }
    const ContactPlant plant(s.gripper, s.map, s.contact, d);
    stiffness[format_g9(d)] = plant.stiffness_n_per_mm();
  }
  add_check(rep, monotone,
            "force is nondecreasing in retraction on the 0.1 mm grid for d in {9,21,30,47}");

  ordered_json data;
  data["anchor_force_n"] = anchor;
  data["stiffness_n_per_mm_by_diameter"] = stiffness;
  finish(rep, out_dir, "fig17_summary.json", std::move(data));
  return rep;
}

ExperimentReport run_table2(const SimConfig& cfg, std::uint64_t seed, std::uint64_t trials,
                            int parallelism, const std::string& out_dir) {
  ExperimentReport rep;
  rep.name = "table2";
  ensure_dir(out_dir);
  const std::uint64_t n = trials == 0 ? cfg.table2_trials : trials;

  const CsvTable target_table = read_csv(cfg.fixture_path(cfg.table2_targets_csv));
  const std::vector<PolicyTarget> targets = load_policy_targets(target_table);
  const CalibrationResult cal =
      calibrate_population(cfg.setup, targets, cfg.population, cfg.calibration);

  CsvWriter summary({"policy", "mode", "setpoint_N", "retraction_mm", "trials",
                     "reliability_pct", "target_reliability_pct", "rdr_pct", "target_rdr_pct",
                     "mean_time_s", "target_time_s", "mean_peak_force_N"});
  struct FbRow {
    double setpoint;
    double reliability;
    double rdr;
    double time;
  };
  std::vector<FbRow> fb_rows;
  bool rows_in_tolerance = true;
  ordered_json rows_json = ordered_json::array();
  for (std::size_t i = 0; i < cal.policies.size(); ++i) {
    const HarvestPolicy& policy = cal.policies[i];
    const PolicyTarget& target = targets[i];
    const CampaignResult run = run_campaign(cfg.setup, policy, cal.population, n,
                                            seed + 1000003 * i, parallelism);
    const CampaignSummary& cs = run.summary;

    const bool fb = policy.mode == HarvestMode::force_feedback;
    const bool fixed = policy.mode == HarvestMode::fixed_retraction;
    CsvWriter w({"trial", "policy", "setpoint_N", "success", "damaged", "time_s",
                 "peak_force_N"});
    for (const TrialRecord& t : run.records)
      w.add_row({std::to_string(t.trial), policy.label,
                 fb ? format_g9(policy.setpoint_n) : std::string(),
                 t.succeeded ? "1" : "0", t.damaged ? "1" : "0", format_g9(t.harvest_time_s),
                 format_g9(t.peak_finger_force_n)});
    const std::string trials_path =
        join_path(out_dir, "table2_trials_" + sanitize_label(policy.label) + ".csv");
    w.write_file(trials_path);
    rep.files.push_back(trials_path);

    summary.add_row({policy.label, to_string(policy.mode),
                     fb ? format_g9(policy.setpoint_n) : std::string(),
                     fixed ? format_g9(policy.commanded_retraction_mm) : std::string(),
                     std::to_string(cs.trials), format_g9(cs.reliability_pct),
                     format_g9(target.reliability_pct), format_g9(cs.rdr_pct),
                     format_g9(target.rdr_pct), format_g9(cs.mean_time_s),
                     format_g9(target.time_s), format_g9(cs.mean_peak_force_n)});

    const bool ok_rel =
        std::abs(cs.reliability_pct - target.reliability_pct) <= cfg.calibration.tol_reliability_pts;
    const bool ok_rdr = std::abs(cs.rdr_pct - target.rdr_pct) <= cfg.calibration.tol_rdr_pts;
    const bool ok_time = std::abs(cs.mean_time_s - target.time_s) <= cfg.calibration.tol_time_s;
    rows_in_tolerance = rows_in_tolerance && ok_rel && ok_rdr && ok_time;
    add_check(rep, ok_rel && ok_rdr && ok_time,
              policy.label + " matches the field row: reliability " +
                  format_g9(cs.reliability_pct) + "/" + format_g9(target.reliability_pct) +
                  ", damage " + format_g9(cs.rdr_pct) + "/" + format_g9(target.rdr_pct) +
                  ", time " + format_g9(cs.mean_time_s) + "/" + format_g9(target.time_s));

    if (fb) fb_rows.push_back({policy.setpoint_n, cs.reliability_pct, cs.rdr_pct, cs.mean_time_s});

    ordered_json rj;
    rj["policy"] = policy.label;
    rj["mode"] = to_string(policy.mode);
    if (fb) rj["setpoint_n"] = policy.setpoint_n;
    if (fixed) rj["retraction_mm"] = policy.commanded_retraction_mm;
    rj["approach_time_s"] = policy.approach_time_s;
    rj["trials"] = cs.trials;
    rj["reliability_pct"] = cs.reliability_pct;
    rj["rdr_pct"] = cs.rdr_pct;
    rj["mean_time_s"] = cs.mean_time_s;
    rj["mean_peak_force_n"] = cs.mean_peak_force_n;
    rj["target_reliability_pct"] = target.reliability_pct;
    rj["target_rdr_pct"] = target.rdr_pct;
    rj["target_time_s"] = target.time_s;
    rows_json.push_back(rj);
  }
  const std::string summary_csv = join_path(out_dir, "table2_summary.csv");
  summary.write_file(summary_csv);
  rep.files.push_back(summary_csv);

  std::sort(fb_rows.begin(), fb_rows.end(),
            [](const FbRow& a, const FbRow& b) { return a.setpoint < b.setpoint; });
  bool trend = fb_rows.size() >= 2;
  for (std::size_t i = 1; i < fb_rows.size(); ++i) {
    trend = trend && fb_rows[i].reliability >= fb_rows[i - 1].reliability;
    trend = trend && fb_rows[i].rdr >= fb_rows[i - 1].rdr;
    trend = trend && fb_rows[i].time <= fb_rows[i - 1].time;
  }
  add_check(rep, trend,
            "feedback setpoint trend holds: reliability and damage rise, time falls");

  const BerryPopulation& pop = cal.population;
  ordered_json data;
  data["seed"] = seed;
  data["trials_per_policy"] = n;
  data["calibration_converged"] = cal.converged;
  data["calibration_objective"] = cal.objective;
  data["population"] = {
      {"detachment_mean_n", pop.detachment_force_n.mean},
      {"detachment_std_n", pop.detachment_force_n.std_dev},
      {"damage_mean_n", pop.damage_threshold_n.mean},
      {"damage_std_n", pop.damage_threshold_n.std_dev},
      {"rigid_tip_factor", pop.rigid_tip_factor.mean},
  };
  data["rows"] = rows_json;
  finish(rep, out_dir, "table2_summary.json", std::move(data));
  return rep;
}

ExperimentReport run_fit_file(const std::string& in_csv, const std::string& x_col,
                              const std::string& y_col, bool zero_intercept,
                              const std::string& out_dir) {
  ExperimentReport rep;
  rep.name = "fit";
  ensure_dir(out_dir);

  const CsvTable t = read_csv(in_csv);
  const int cx = t.column(x_col);
  const int cy = t.column(y_col);
  if (cx < 0 || cy < 0)
    throw std::invalid_argument("fit input needs columns '" + x_col + "' and '" + y_col + "'");
  std::vector<double> xs, ys;
  for (const auto& row : t.rows) {
    xs.push_back(parse_number(row[cx]));
    ys.push_back(parse_number(row[cy]));
  }
  const FitReport fit = quadratic_fit(xs, ys, zero_intercept);

  CsvWriter w({x_col, y_col, "fit", "residual"});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fitted = ys[i] - fit.residuals[i];
    w.add_row({format_g9(xs[i]), format_g9(ys[i]), format_g9(fitted),
               format_g9(fit.residuals[i])});
  }
  const std::string path = join_path(out_dir, "fit_result.csv");
  w.write_file(path);
  rep.files.push_back(path);

  const bool finite = std::isfinite(fit.coefficients[0]) && std::isfinite(fit.coefficients[1]) &&
                      std::isfinite(fit.coefficients[2]);
  add_check(rep, finite,
            "quadratic fit solved with mean abs error " + format_g9(fit.mean_abs_error));

  ordered_json data;
  data["input"] = in_csv;
  data["points"] = xs.size();
  data["zero_intercept"] = zero_intercept;
  data["coefficients"] = fit.coefficients;
  data["mean_abs_error"] = fit.mean_abs_error;
  data["mean_percent_error"] = fit.mean_percent_error;
  finish(rep, out_dir, "fit_summary.json", std::move(data));
  return rep;
}

ExperimentReport run_analyze_fingers(const SimConfig& cfg, const std::string& fixture_csv,
                                     double threshold_n, const std::string& out_dir) {
  ExperimentReport rep;
  rep.name = "analyze-fingers";
  ensure_dir(out_dir);

  const std::string path =
      fixture_csv.empty() ? cfg.fixture_path(cfg.table1_csv) : fixture_csv;
  const double threshold = threshold_n > 0.0 ? threshold_n : cfg.finger_threshold_n;
  const FingerAnalysis analysis = finger_force_analysis(read_csv(path), threshold);

  std::vector<FingerRank> sorted = analysis.all;
  std::stable_sort(sorted.begin(), sorted.end(), [](const FingerRank& a, const FingerRank& b) {
    return a.mean_force_n > b.mean_force_n;
  });
  CsvWriter w({"rank", "finger", "mean_force_N", "significant"});
  for (std::size_t i = 0; i < sorted.size(); ++i)
    w.add_row({std::to_string(i + 1), sorted[i].name, format_g9(sorted[i].mean_force_n),
               sorted[i].mean_force_n >= threshold ? "1" : "0"});
  const std::string rank_path = join_path(out_dir, "finger_ranking.csv");
  w.write_file(rank_path);
  rep.files.push_back(rank_path);

  add_check(rep, !analysis.none_significant, "at least one finger carries significant force");
  add_check(rep, analysis.recommended_fingers == cfg.expected_fingers,
            "analysis recommends " + std::to_string(cfg.expected_fingers) + " fingers (got " +
                std::to_string(analysis.recommended_fingers) + ")");

  ordered_json ranking = ordered_json::array();
  for (const FingerRank& r : analysis.ranking)
    ranking.push_back({{"finger", r.name}, {"mean_force_n", r.mean_force_n}});
  ordered_json data;
  data["input"] = path;
  data["threshold_n"] = threshold;
  data["recommended_fingers"] = analysis.recommended_fingers;
  data["ranking"] = ranking;
  finish(rep, out_dir, "analyze_fingers_summary.json", std::move(data));
  return rep;
}

}  // namespace berrygrip
