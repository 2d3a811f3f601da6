#include <cstdint>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "berrygrip/experiments.hpp"

namespace {

berrygrip::SimConfig load_config(const std::string& config_path) {
  std::string path = config_path;
  if (path.empty()) {
    const char* env = std::getenv(berrygrip::kConfigEnvVar);
    if (env != nullptr && *env != '\0') path = env;
  }
  if (path.empty()) return berrygrip::SimConfig{};
  return berrygrip::SimConfig::from_config(berrygrip::Config::parse_file(path));
}

int report_result(const berrygrip::ExperimentReport& rep, bool check) {
  for (const std::string& line : rep.check_lines)
    std::cout << "[" << rep.name << "] " << line << "\n";
  for (const std::string& f : rep.files) std::cout << "[" << rep.name << "] wrote " << f << "\n";
  if (check && !rep.checks_passed) {
    std::cout << "[" << rep.name << "] checks FAILED\n";
    return 1;
  }
  std::cout << "[" << rep.name << "] done\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bench and simulation tools for the tendon-driven berry gripper"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 42;
  std::uint64_t trials = 0;
  int parallel = 1;
  bool check = false;
  app.add_option("--config", config_path,
                 "config file; falls back to $BERRYGRIP_CONFIG, then built-in defaults");
  app.add_option("--seed", seed, "simulation seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--check", check, "exit nonzero if any result check fails");
  app.add_option("--trials", trials, "campaign trials per policy (0 = config value)");
  app.add_option("--parallel", parallel, "worker threads for campaigns");

  CLI::App* calibrate = app.add_subcommand("calibrate", "export the sensor calibration curves");

  CLI::App* sim_loop =
      app.add_subcommand("sim-loop", "run one closed-loop grasp and dump the trajectory");
  double setpoint_n = 0.59;
  double diameter_mm = 30.0;
  sim_loop->add_option("--setpoint", setpoint_n, "force setpoint [N]");
  sim_loop->add_option("--diameter", diameter_mm, "object diameter [mm]");

  CLI::App* fig12 = app.add_subcommand("fig12", "closed-loop force error over the setpoint grid");

  CLI::App* fig13 = app.add_subcommand("fig13", "curvature sweeps with circle-fit recovery");
  std::string digitized_csv;
  fig13->add_option("--data", digitized_csv, "digitized bench curvature CSV (optional)");

  CLI::App* fig14 = app.add_subcommand("fig14", "retention forces across the test shapes");

  CLI::App* fig17 = app.add_subcommand("fig17", "fingertip force over retraction and diameter");

  CLI::App* table2 =
      app.add_subcommand("table2", "calibrated harvest campaigns against the field rows");

  CLI::App* fit = app.add_subcommand("fit", "quadratic least squares over two CSV columns");
  std::string fit_input;
  std::string x_col = "x";
  std::string y_col = "y";
  bool zero_intercept = false;
  fit->add_option("input", fit_input, "input CSV")->required();
  fit->add_option("--x-col", x_col, "x column name");
  fit->add_option("--y-col", y_col, "y column name");
  fit->add_flag("--zero-intercept", zero_intercept, "pin the constant term to zero");

  CLI::App* fingers = app.add_subcommand("analyze-fingers", "rank fingers by bench grip force");
  std::string fingers_csv;
  double threshold_n = 0.0;
  fingers->add_option("--data", fingers_csv, "finger force CSV (default: bundled fixture)");
  fingers->add_option("--threshold", threshold_n, "significance threshold [N] (0 = config value)");

  for (CLI::App* sub :
       {calibrate, sim_loop, fig12, fig13, fig14, fig17, table2, fit, fingers})
    sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    using namespace berrygrip;
    ExperimentReport rep;
    if (*fit) {
      rep = run_fit_file(fit_input, x_col, y_col, zero_intercept, out_dir);
    } else {
      const SimConfig cfg = load_config(config_path);
      if (*calibrate)
        rep = run_calibrate_export(cfg, out_dir);
      else if (*sim_loop)
        rep = run_sim_loop(cfg, setpoint_n, diameter_mm, seed, out_dir);
      else if (*fig12)
        rep = run_fig12(cfg, seed, out_dir);
      else if (*fig13)
        rep = run_fig13(cfg, out_dir, digitized_csv);
      else if (*fig14)
        rep = run_fig14(cfg, out_dir);
      else if (*fig17)
        rep = run_fig17(cfg, out_dir);
      else if (*table2)
        rep = run_table2(cfg, seed, trials, parallel, out_dir);
      else
        rep = run_analyze_fingers(cfg, fingers_csv, threshold_n, out_dir);
    }
    return report_result(rep, check);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
