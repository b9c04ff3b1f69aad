#pragma once

#include <optional>
#include <string>
#include <vector>

#include "funnelsim/config.hpp"

namespace funnelsim {

/// "key = value" lines describing the design of a prepared scenario.
std::string design_report(const Scenario& sc);

/// Values printed for the mass-on-car experiment, used only for comparison.
struct ReportedValues {
  double delta_loss = 5.01e-2;
  double delta_avail = 18.8;
  double eta_star = 133145.0;
  double phi0_window = 1.4449e-4;
  double chi = 21.4683;
  double c = 0.03;
  double b = 1.0;
  double phi_rho = 33.0;
  double rho_fraction = 0.99;
};

struct DiscrepancyRow {
  std::string quantity;
  std::optional<double> reported;
  std::optional<double> recomputed;
  std::string note;
};

/// True for the mass-on-car plant with parameters (4, 1, 2, 1, pi/4).
bool is_reference_mass_on_car(const ScenarioConfig& cfg);

/// Reported versus recomputed constants, plus feasibility of the reported
/// constants under the design inequalities. Needs a synthesized design.
std::vector<DiscrepancyRow> discrepancy_table(const Scenario& sc, const ReportedValues& rep = {});

std::string discrepancy_text(const std::vector<DiscrepancyRow>& rows);

}  // namespace funnelsim
