#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gpmpc/harness.hpp"

namespace gpmpc::app {

struct RunSummary {
  std::string scenario;
  std::string controller;
  double from_time = harness::kDefaultStatisticsStart;
  harness::ZoneStatistics stats;
};

nlohmann::json to_json(const harness::ZoneStatistics& s);
nlohmann::json to_json(const RunSummary& s);
RunSummary summary_from_json(const nlohmann::json& j);

/// Table with one row per scenario and controller (mean ± SD, zone
/// percentages, BG at 07:00).
std::string format_table(const std::vector<RunSummary>& runs);

}  // namespace gpmpc::app
