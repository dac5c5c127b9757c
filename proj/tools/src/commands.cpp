#include "gpmpc/app/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <thread>
#include <vector>

#include "gpmpc/app/calibrate.hpp"
#include "gpmpc/app/config.hpp"
#include "gpmpc/app/csv.hpp"
#include "gpmpc/app/summary.hpp"

namespace gpmpc::app {

namespace fs = std::filesystem;

namespace {

struct Job {
  harness::ScenarioKind scenario;
  harness::ControllerKind controller;
  harness::RunResult result;
  std::string error;  // failure outside the loop (I/O, statistics)
  RunSummary summary;
  bool have_summary = false;
};

std::string run_name(const Job& j) {
  return std::string(harness::to_string(j.scenario)) + "_" + harness::to_string(j.controller);
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f << j.dump(2) << '\n';
}

void execute(Job& job, const RunConfig& cfg) {
  const harness::Scenario scenario = cfg.make_scenario(job.scenario, job.controller);
  job.result = harness::run_closed_loop(scenario, cfg.sim);
  const std::string base = (fs::path(cfg.output_dir) / run_name(job)).string();
  write_csv_file(base + ".csv", job.result.records);
  const double from = cfg.gp_activation_days * 1440.0;
  job.summary.scenario = harness::to_string(job.scenario);
  job.summary.controller = harness::to_string(job.controller);
  job.summary.from_time = from;
  job.summary.stats = harness::compute_statistics(job.result.records, from);
  job.have_summary = true;
  write_json(base + ".json", to_json(job.summary));
}

void run_jobs(std::vector<Job>& jobs, const RunConfig& cfg, unsigned requested) {
  unsigned workers = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        execute(jobs[i], cfg);
      } catch (const std::exception& e) {
        jobs[i].error = e.what();
      }
    }
  };
  if (workers <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const CalibrationError& e) {
    err << "calibration failed: " << e.what() << '\n' << e.log();
    return kExitRunFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRunFailed;
  }
}

RunConfig base_config(const std::optional<std::string>& path) {
  return path ? load_config(*path) : RunConfig{};
}

}  // namespace

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = base_config(opts.config_path);
    if (opts.scenario) {
      try {
        cfg.scenario = harness::parse_scenario(*opts.scenario);
      } catch (const Error& e) {
        throw ConfigError("--scenario", e.what());
      }
    }
    if (opts.controller) {
      try {
        cfg.controller = harness::parse_controller(*opts.controller);
      } catch (const Error& e) {
        throw ConfigError("--controller", e.what());
      }
    }
    if (opts.out) cfg.output_dir = *opts.out;
    if (opts.seed) cfg.seed = *opts.seed;
    cfg.validate();

    std::vector<Job> jobs;
    if (opts.all) {
      for (auto s : {harness::ScenarioKind::kFasting, harness::ScenarioKind::kAnnounced,
                     harness::ScenarioKind::kSkipped}) {
        for (auto c : {harness::ControllerKind::kMpc, harness::ControllerKind::kGpMpc}) {
          jobs.push_back({s, c, {}, {}, {}, false});
        }
      }
    } else {
      jobs.push_back({cfg.scenario, cfg.controller, {}, {}, {}, false});
    }

    fs::create_directories(cfg.output_dir);
    run_jobs(jobs, cfg, opts.jobs);

    int status = kExitOk;
    std::vector<RunSummary> summaries;
    nlohmann::json combined = nlohmann::json::array();
    for (const auto& job : jobs) {
      const std::string name = run_name(job);
      if (!job.error.empty()) {
        err << name << ": " << job.error << '\n';
        status = kExitRunFailed;
        continue;
      }
      if (!job.result.ok) {
        err << name << ": run aborted after " << job.result.records.size()
            << " steps: " << job.result.error << '\n';
        status = kExitRunFailed;
      }
      double max_kkt = 0.0;
      std::size_t softened = 0;
      for (const auto& r : job.result.records) {
        max_kkt = std::max(max_kkt, r.kkt_residual);
        softened += r.qp_status != qp::QpStatus::kOptimal;
      }
      char line[256];
      std::snprintf(line, sizeof line,
                    "%s: %zu steps, %.1f s, max KKT residual %.2e, softened terminal %zu, "
                    "hyperparameter fits %zu\n",
                    name.c_str(), job.result.records.size(), job.result.wall_seconds, max_kkt,
                    softened, job.result.hyperparameter_fits);
      out << line;
      if (job.have_summary) {
        summaries.push_back(job.summary);
        combined.push_back(to_json(job.summary));
      }
    }
    if (opts.all) write_json((fs::path(cfg.output_dir) / "summary.json").string(), combined);
    out << '\n' << format_table(summaries);
    out << "outputs in " << cfg.output_dir << '\n';
    return status;
  });
}

int cmd_calibrate(const CalibrateOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = base_config(opts.config_path);
    if (opts.out) cfg.output_dir = *opts.out;
    const double u_basal = cfg.sim.mpc.u_basal;
    char line[256];

    const model::ModelSet model = model::discretize_model(model::kDefaultSampleTime, u_basal);
    const double i_mi = model::basal_interstitial_insulin(u_basal);
    const Matrix b = model::input_matrix();
    const Matrix a = model::build_continuous_system(1.0);
    const double x9 = b(kInactiveSubcutaneousInsulin, 0) * u_basal /
                      -a(kInactiveSubcutaneousInsulin, kInactiveSubcutaneousInsulin);
    const double x10 = x9 + b(kActiveSubcutaneousInsulin, 0) * u_basal /
                                -a(kActiveSubcutaneousInsulin, kActiveSubcutaneousInsulin);
    std::snprintf(line, sizeof line,
                  "basal insulin chain at u_basal = %.6g U/sample:\n"
                  "  inactive subcutaneous %.10g, active subcutaneous %.10g\n"
                  "  i_mi_basal = %.17g\n",
                  u_basal, x9, x10, i_mi);
    out << line;

    const MealGainCalibration cal = calibrate_meal_gain(opts.target_peak, opts.grams, u_basal);
    out << "meal_gain sweep (" << opts.grams << " g meal, basal insulin, nominal sensitivity):\n";
    for (const auto& p : cal.sweep) {
      std::snprintf(line, sizeof line, "  %.12g -> %.9g mg/dL\n", p.meal_gain, p.peak_bg);
      out << line;
    }
    std::snprintf(line, sizeof line, "meal_gain = %.17g (peak %.6f mg/dL)\n", cal.meal_gain,
                  cal.peak_bg);
    out << line;

    // Round trips: the fragment re-parses to the same numbers, and the
    // calibrated gain reproduces its own criterion.
    const std::string fragment = calibration_fragment(cal.meal_gain, i_mi);
    const RunConfig reparsed = parse_config_string(fragment);
    if (reparsed.sim.plant.meal_gain != cal.meal_gain || reparsed.sim.plant.i_mi_basal != i_mi) {
      throw Error("calibration fragment does not round-trip");
    }
    const double peak = meal_peak(reparsed.sim.plant.meal_gain, opts.grams, u_basal).peak_bg;
    if (std::abs(peak - opts.target_peak) > opts.tolerance) {
      throw Error("re-simulated peak " + std::to_string(peak) + " misses the target");
    }

    fs::create_directories(cfg.output_dir);
    const std::string path = (fs::path(cfg.output_dir) / "calibration.yaml").string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path + "'");
    f << fragment;
    out << "wrote " << path << '\n';
    return kExitOk;
  });
}

int cmd_stats(const StatsOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto records = read_csv_file(opts.csv_path);
    RunSummary s;
    const std::string stem = fs::path(opts.csv_path).stem().string();
    const auto sep = stem.find('_');
    s.scenario = sep == std::string::npos ? stem : stem.substr(0, sep);
    s.controller = sep == std::string::npos ? "" : stem.substr(sep + 1);
    s.from_time = opts.from_time;
    s.stats = harness::compute_statistics(records, opts.from_time);
    const nlohmann::json j = to_json(s);
    if (opts.json_path) write_json(*opts.json_path, j);
    out << format_table({s}) << j.dump(2) << '\n';
    return kExitOk;
  });
}

}  // namespace gpmpc::app
