#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "funnelsim/controller.hpp"
#include "funnelsim/design.hpp"
#include "funnelsim/reference.hpp"
#include "funnelsim/simulator.hpp"
#include "funnelsim/sysmodel.hpp"

namespace funnelsim {

struct MassOnCarParams {
  double m1 = 4.0;
  double m2 = 1.0;
  double k = 2.0;
  double d = 1.0;
  double theta = 0.0;
};

struct SystemConfig {
  enum class Mode { StateSpace, NormalForm, MassOnCar };
  Mode mode = Mode::MassOnCar;
  StateSpace ss;         // state_space
  NormalForm nf;         // normal_form
  MassOnCarParams car;   // mass_on_car
  Vector x0;             // full state for state_space and mass_on_car
  std::vector<Vector> y0;  // normal_form: y, y', ..., y^(r-1)
  Vector eta0;             // normal_form
};

/// A number, or "design" for the synthesized Delta (loss) / delta (start, available).
using DesignLinked = std::optional<double>;

struct AvailabilityConfig {
  enum class Kind { Dropouts, Periodic };
  Kind kind = Kind::Dropouts;
  std::vector<AvailabilitySchedule::Interval> dropouts;
  DesignLinked start;
  DesignLinked loss;
  DesignLinked available;
  int count = 0;
};

struct DesignConfig {
  enum class Mode { Synthesize, Fixed };
  Mode mode = Mode::Synthesize;
  SynthesisOptions synth;
  FunnelSpec fixed;
  std::optional<double> beta;  // fixed mode
};

struct ScenarioConfig {
  std::string name = "scenario";
  SystemConfig system;
  ReferenceSignal reference;
  AvailabilityConfig availability;
  DesignConfig design;
  double t_end = 10.0;
  SimOptions sim;
  std::string trace_file = "trace.csv";
  std::string report_file = "report.txt";
};

/// Parses and validates a scenario; unknown keys and non-finite numbers throw ConfigError.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::string& path);

/// JSON text of a built-in preset ("scenario_a", "scenario_b"); ConfigError for other names.
std::string preset_json(const std::string& name);
ScenarioConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// Everything derived from a config, ready to integrate.
struct Scenario {
  ScenarioConfig config;
  NormalForm nf;
  ClassConstants cc;
  InitialConditions ic;
  DesignParams design;
  AvailabilitySchedule schedule;
  std::vector<std::string> warnings;  // schedule outside the design limits
};

/// Builds the normal form, runs synthesis (or the fixed design) and the schedule.
Scenario prepare_scenario(const ScenarioConfig& config);

std::string mode_name(SystemConfig::Mode mode);

}  // namespace funnelsim
