#pragma once

#include <string>
#include <vector>

#include "funnelsim/design.hpp"
#include "funnelsim/linalg.hpp"

namespace funnelsim {

/// Measurement dropouts (t_minus, t_plus], sorted and disjoint, on [0, t_end].
class AvailabilitySchedule {
 public:
  struct Interval {
    double t_minus = 0.0;
    double t_plus = 0.0;
  };

  AvailabilitySchedule() = default;
  AvailabilitySchedule(std::vector<Interval> dropouts, double t_end);

  /// count dropouts of length `loss`, the first starting at `start` and each
  /// followed by `available` seconds of measurement. Intervals past t_end are dropped.
  static AvailabilitySchedule periodic(double start, double loss, double available, int count, double t_end);

  const std::vector<Interval>& dropouts() const { return dropouts_; }
  double t_end() const { return t_end_; }

  /// 1 if y(t) is measured; a dropout starting at 0 also covers t = 0.
  int availability(double t) const;

  /// Reset clock: t during a dropout, otherwise the end of the most recent one (0 before any).
  double tau(double t) const;

  /// Human-readable notes for dropouts longer than Delta or availability gaps shorter than delta.
  std::vector<std::string> limit_warnings(double delta_loss, double delta_avail) const;

  /// Every t_k^- and t_k^+, in order.
  std::vector<double> event_times() const;

 private:
  std::vector<Interval> dropouts_;
  double t_end_ = 0.0;
};

/// Incremental tau tracker for one simulation; calls must use nondecreasing t.
struct ControllerState {
  double tau = 0.0;
  double last_t = 0.0;
  std::size_t next_dropout = 0;
  bool started = false;
};

/// phi(t) = phi0(t - tau(t)) when a(t) = 1, else 0. Pure path.
double funnel_value(const AvailabilitySchedule& sched, const FunnelSpec& funnel, double t);

/// Same value, advancing the state. Throws NonMonotoneTime when t decreases.
double funnel_value(ControllerState& state, const AvailabilitySchedule& sched, const FunnelSpec& funnel, double t);

/// e_1 .. e_r from phi and (e, e', ..., e^(r-1)); throws FunnelViolation at the
/// first stage with norm >= 1.
std::vector<Vector> error_cascade(double phi, const std::vector<Vector>& e_derivs);

/// Non-throwing variant for the integrator. Returns the 1-based failing stage
/// (norm >= limit) or 0; `out` holds the stages computed so far.
int error_cascade_into(double phi, const std::vector<Vector>& e_derivs, std::vector<Vector>& out,
                       double limit = 1.0);

/// u = -sign a e_r / (1 - ||e_r||^2). `stage` (normally r) labels a FunnelViolation.
Vector control_input(int a, const Vector& e_r, int sign, int stage = 0);

InitialConditionReport check_initial_conditions(const DesignParams& dp, const std::vector<Vector>& e_derivs0,
                                                double eta0_norm);

}  // namespace funnelsim
