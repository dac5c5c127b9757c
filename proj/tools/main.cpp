#include <iostream>

#include <CLI11.hpp>

#include "gpmpc/app/commands.hpp"

int main(int argc, char** argv) {
  using namespace gpmpc::app;

  CLI::App app{"Closed-loop glucose control simulator with a learned insulin-sensitivity preview"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Run closed-loop scenarios, write CSV + JSON");
  simulate->add_option("--config", sim.config_path, "YAML configuration file");
  simulate->add_option("--scenario", sim.scenario, "fasting | announced | skipped");
  simulate->add_option("--controller", sim.controller, "mpc | gp-mpc");
  simulate->add_option("--out", sim.out, "Output directory");
  simulate->add_option("--seed", sim.seed, "Measurement-noise seed");
  simulate->add_flag("--all", sim.all, "Run all scenarios with both controllers");
  simulate->add_option("--jobs", sim.jobs, "Parallel runs for --all (default: all cores)");

  CalibrateOptions cal;
  auto* calibrate =
      app.add_subcommand("calibrate", "Compute basal interstitial insulin and the meal gain");
  calibrate->add_option("--config", cal.config_path, "YAML configuration file");
  calibrate->add_option("--out", cal.out, "Directory for calibration.yaml");
  calibrate->add_option("--target", cal.target_peak, "Target 50 g meal peak, mg/dL");

  StatsOptions st;
  auto* stats = app.add_subcommand("stats", "Recompute the summary statistics from a run CSV");
  stats->add_option("csv", st.csv_path, "Run CSV")->required();
  stats->add_option("--from", st.from_time, "Start of the evaluation window, min");
  stats->add_option("--json", st.json_path, "Also write the summary to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadConfig;
  }

  if (*simulate) return cmd_simulate(sim, std::cout, std::cerr);
  if (*calibrate) return cmd_calibrate(cal, std::cout, std::cerr);
  return cmd_stats(st, std::cout, std::cerr);
}
