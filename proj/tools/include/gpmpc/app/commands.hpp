#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace gpmpc::app {

/// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRunFailed = 1;
inline constexpr int kExitBadConfig = 2;

struct SimulateOptions {
  std::optional<std::string> config_path;
  std::optional<std::string> scenario;
  std::optional<std::string> controller;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool all = false;
  /// Parallel runs for --all; 0 picks hardware_concurrency.
  unsigned jobs = 0;
};

struct CalibrateOptions {
  std::optional<std::string> config_path;
  std::optional<std::string> out;
  double target_peak = 180.0;
  double tolerance = 15.0;
  double grams = 50.0;
};

struct StatsOptions {
  std::string csv_path;
  double from_time = 2.5 * 1440.0;
  std::optional<std::string> json_path;
};

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_calibrate(const CalibrateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_stats(const StatsOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace gpmpc::app
