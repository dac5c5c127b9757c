#include "gpmpc/app/summary.hpp"

#include <cmath>
#include <cstdio>

namespace gpmpc::app {

namespace {

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double number_or_nan(const nlohmann::json& j) {
  return j.is_null() ? std::nan("") : j.get<double>();
}

}  // namespace

nlohmann::json to_json(const harness::ZoneStatistics& s) {
  return {{"mean_bg", number_or_null(s.mean_bg)},
          {"sd_bg", number_or_null(s.sd_bg)},
          {"pct_below_70", s.pct_below_70},
          {"pct_safe_70_180", s.pct_safe_70_180},
          {"pct_tight_80_140", s.pct_tight_80_140},
          {"pct_above_180", s.pct_above_180},
          {"bg_at_0700", number_or_null(s.bg_at_0700)},
          {"samples", s.samples}};
}

nlohmann::json to_json(const RunSummary& s) {
  nlohmann::json j = to_json(s.stats);
  j["scenario"] = s.scenario;
  j["controller"] = s.controller;
  j["from_time"] = s.from_time;
  return j;
}

RunSummary summary_from_json(const nlohmann::json& j) {
  RunSummary s;
  s.scenario = j.at("scenario").get<std::string>();
  s.controller = j.at("controller").get<std::string>();
  s.from_time = j.at("from_time").get<double>();
  s.stats.mean_bg = number_or_nan(j.at("mean_bg"));
  s.stats.sd_bg = number_or_nan(j.at("sd_bg"));
  s.stats.pct_below_70 = j.at("pct_below_70").get<double>();
  s.stats.pct_safe_70_180 = j.at("pct_safe_70_180").get<double>();
  s.stats.pct_tight_80_140 = j.at("pct_tight_80_140").get<double>();
  s.stats.pct_above_180 = j.at("pct_above_180").get<double>();
  s.stats.bg_at_0700 = number_or_nan(j.at("bg_at_0700"));
  s.stats.samples = j.at("samples").get<std::size_t>();
  return s;
}

std::string format_table(const std::vector<RunSummary>& runs) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %-8s %16s %7s %9s %9s %7s %11s\n", "scenario",
                "control", "mean BG +- SD", "<70", "[70,180]", "[80,140]", ">180", "BG@07:00");
  out += line;
  for (const auto& r : runs) {
    const auto& s = r.stats;
    std::snprintf(line, sizeof line, "%-10s %-8s %8.1f +- %4.1f %7.1f %9.1f %9.1f %7.1f %11.1f\n",
                  r.scenario.c_str(), r.controller.c_str(), s.mean_bg, s.sd_bg, s.pct_below_70,
                  s.pct_safe_70_180, s.pct_tight_80_140, s.pct_above_180, s.bg_at_0700);
    out += line;
  }
  return out;
}

}  // namespace gpmpc::app
