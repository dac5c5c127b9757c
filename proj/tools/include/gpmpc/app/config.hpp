#pragma once

#include <cstdint>
#include <string>

#include "gpmpc/error.hpp"
#include "gpmpc/harness.hpp"

namespace YAML {
class Node;
}

namespace gpmpc::app {

/// Invalid configuration; `field()` is the dotted path of the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct RunConfig {
  harness::ScenarioKind scenario = harness::ScenarioKind::kFasting;
  harness::ControllerKind controller = harness::ControllerKind::kGpMpc;
  std::string output_dir = "results";
  std::uint64_t seed = 0;
  double duration_days = 7.0;
  double gp_activation_days = 2.5;
  harness::SimulationConfig sim;

  /// Runs every module-level check; throws ConfigError naming the field.
  void validate() const;
  harness::Scenario make_scenario(harness::ScenarioKind kind,
                                  harness::ControllerKind controller) const;
};

/// Applies the keys present in `node` on top of `base`. Unknown keys are
/// rejected.
RunConfig parse_config(const YAML::Node& node, RunConfig base = {});
RunConfig parse_config_string(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Full configuration as YAML, doubles written with 17 significant digits.
std::string to_yaml(const RunConfig& cfg);

}  // namespace gpmpc::app
