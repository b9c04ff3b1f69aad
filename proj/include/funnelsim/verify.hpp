#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "funnelsim/controller.hpp"
#include "funnelsim/design.hpp"
#include "funnelsim/simulator.hpp"

namespace funnelsim {

struct CheckResult {
  std::string name;
  bool pass = true;
  double margin = 0.0;  // worst margin; negative means violated
  double at = 0.0;      // time of the worst margin, NaN for algebraic checks
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckResult> checks;

  bool all_pass() const;
  const CheckResult* find(const std::string& name) const;
  /// One "CHECK <name> PASS|FAIL margin=<v> at=<t>" line per check.
  std::string to_text() const;
};

/// Relative slack for integrated quantities and for algebraic identities.
inline constexpr double kIntegratedSlack = 1e-6;
inline constexpr double kAlgebraicSlack = 1e-12;

/// phi(t) ||e(t)|| < 1 at every sample.
CheckResult funnel_containment(const Trace& trace);

/// ||u|| <= U_max, u = 0 on dropouts, ||eta(t_k^+)|| <= eta*, ||eta|| <= eta_bar.
std::vector<CheckResult> input_and_state_bounds(const Trace& trace, const DesignParams& design);

CheckResult input_zero_on_dropout(const Trace& trace);

/// Growth bound for an open-loop run; needs the chain recorded in memory.
CheckResult coasting_bound_check(const Trace& trace, const ClassConstants& cc);

/// ||eta(t)|| against M e^{-mu (t-t0)} ||eta(t0)|| + ||P|| sup||y|| min(M/mu, M (t-t0)).
CheckResult internal_envelope_check(const Trace& trace, const ClassConstants& cc);

/// The last sample sits at t_end.
CheckResult integration_complete(const Trace& trace, double t_end);

/// Random trials of the cascade estimate with zeta_{k+1} = lambda xi_k + ell(||zeta_k||^2) zeta_k.
CheckResult lemma_ar_property(std::uint64_t seed, int r, double q, int trials,
                              const std::function<double(double)>& ell = {});

/// Recursive rho_k construction versus error_cascade on random tuples.
CheckResult cascade_rho_equivalence(std::uint64_t seed, int r, int trials);

/// rho_k of a tuple (zeta_1, ..., zeta_k); returns false when the tuple is outside D_k.
bool rho_map(const std::vector<Vector>& zeta, Vector& out);

/// Every design inequality by direct substitution of the stored values.
std::vector<CheckResult> design_substitution(const DesignParams& design);

/// Standard checks of `verify`: trace checks for the design plus completion.
VerificationReport verify_trace(const Trace& trace, const DesignParams& design, const ClassConstants& cc,
                                double t_end);

}  // namespace funnelsim
