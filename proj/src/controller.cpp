#include "funnelsim/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "funnelsim/error.hpp"

namespace funnelsim {

AvailabilitySchedule::AvailabilitySchedule(std::vector<Interval> dropouts, double t_end)
    : dropouts_(std::move(dropouts)), t_end_(t_end) {
  if (!std::isfinite(t_end_) || t_end_ < 0.0) throw Error(ErrorCode::InvalidArgument, "t_end must be finite and >= 0");
  double prev = -1.0;
  for (std::size_t k = 0; k < dropouts_.size(); ++k) {
    const Interval& iv = dropouts_[k];
    if (!std::isfinite(iv.t_minus) || !std::isfinite(iv.t_plus))
      throw Error(ErrorCode::InvalidArgument, "dropout bounds must be finite");
    if (iv.t_minus < 0.0 || !(iv.t_minus < iv.t_plus))
      throw Error(ErrorCode::InvalidArgument, "dropout " + std::to_string(k + 1) + " needs 0 <= t_minus < t_plus");
    if (!(iv.t_minus > prev))
      throw Error(ErrorCode::InvalidArgument, "dropouts must be sorted and disjoint (dropout " +
                                                  std::to_string(k + 1) + ")");
    if (iv.t_plus > t_end_)
      throw Error(ErrorCode::InvalidArgument, "dropout " + std::to_string(k + 1) + " ends after t_end");
    prev = iv.t_plus;
  }
}

AvailabilitySchedule AvailabilitySchedule::periodic(double start, double loss, double available, int count,
                                                    double t_end) {
  if (!(loss > 0.0) || !(available > 0.0) || start < 0.0 || count < 0)
    throw Error(ErrorCode::InvalidArgument, "periodic schedule needs loss, available > 0 and start >= 0");
  std::vector<Interval> out;
  for (int k = 0; k < count; ++k) {
    const double t0 = start + k * (loss + available);
    const double t1 = t0 + loss;
    if (t1 > t_end) break;
    out.push_back({t0, t1});
  }
  return AvailabilitySchedule(std::move(out), t_end);
}

int AvailabilitySchedule::availability(double t) const {
  for (const auto& iv : dropouts_) {
    if (t <= iv.t_minus) return (t == 0.0 && iv.t_minus == 0.0) ? 0 : 1;
    if (t <= iv.t_plus) return 0;
  }
  return 1;
}

double AvailabilitySchedule::tau(double t) const {
  double tau = 0.0;
  for (const auto& iv : dropouts_) {
    if (t <= iv.t_minus) return (t == 0.0 && iv.t_minus == 0.0) ? t : tau;
    if (t <= iv.t_plus) return t;
    tau = iv.t_plus;
  }
  return tau;
}

std::vector<std::string> AvailabilitySchedule::limit_warnings(double delta_loss, double delta_avail) const {
  std::vector<std::string> out;
  double avail_start = 0.0;
  for (std::size_t k = 0; k < dropouts_.size(); ++k) {
    const Interval& iv = dropouts_[k];
    std::ostringstream os;
    os.precision(10);
    // Interval lengths come from differences of endpoints, so allow rounding.
    const double tol = 1e-12 * std::max(1.0, std::abs(iv.t_plus));
    if (iv.t_plus - iv.t_minus > delta_loss + tol) {
      os << "dropout " << k + 1 << " lasts " << iv.t_plus - iv.t_minus << " > Delta = " << delta_loss;
      out.push_back(os.str());
      os.str("");
    }
    if (iv.t_minus - avail_start < delta_avail - tol) {
      os << "availability before dropout " << k + 1 << " lasts " << iv.t_minus - avail_start
         << " < delta = " << delta_avail;
      out.push_back(os.str());
    }
    avail_start = iv.t_plus;
  }
  return out;
}

std::vector<double> AvailabilitySchedule::event_times() const {
  std::vector<double> out;
  for (const auto& iv : dropouts_) {
    out.push_back(iv.t_minus);
    out.push_back(iv.t_plus);
  }
  return out;
}

double funnel_value(const AvailabilitySchedule& sched, const FunnelSpec& funnel, double t) {
  if (sched.availability(t) == 0) return 0.0;
  return funnel.value(t - sched.tau(t));
}

double funnel_value(ControllerState& state, const AvailabilitySchedule& sched, const FunnelSpec& funnel, double t) {
  if (state.started && t < state.last_t)
    throw Error(ErrorCode::NonMonotoneTime, "t = " + std::to_string(t) + " after " + std::to_string(state.last_t));
  const auto& drops = sched.dropouts();
  // Skip dropouts that ended strictly before t; their t_plus becomes the reset time.
  while (state.next_dropout < drops.size() && drops[state.next_dropout].t_plus < t) {
    state.tau = drops[state.next_dropout].t_plus;
    ++state.next_dropout;
  }
  state.started = true;
  state.last_t = t;
  if (state.next_dropout < drops.size()) {
    const auto& iv = drops[state.next_dropout];
    const bool lost = (t > iv.t_minus && t <= iv.t_plus) || (t == 0.0 && iv.t_minus == 0.0);
    if (lost) return 0.0;
  }
  return funnel.value(t - state.tau);
}

int error_cascade_into(double phi, const std::vector<Vector>& e_derivs, std::vector<Vector>& out, double limit) {
  out.clear();
  if (e_derivs.empty()) return 0;
  out.push_back(phi * e_derivs[0]);
  double sq = out.back().squaredNorm();
  if (!(std::sqrt(sq) < limit)) return 1;
  for (std::size_t i = 1; i < e_derivs.size(); ++i) {
    out.push_back(phi * e_derivs[i] + gains::alpha(sq) * out.back());
    sq = out.back().squaredNorm();
    if (!(std::sqrt(sq) < limit)) return static_cast<int>(i) + 1;
  }
  return 0;
}

std::vector<Vector> error_cascade(double phi, const std::vector<Vector>& e_derivs) {
  std::vector<Vector> out;
  const int bad = error_cascade_into(phi, e_derivs, out);
  if (bad != 0) throw FunnelViolationError(bad, out.back().norm(), "in error cascade");
  return out;
}

Vector control_input(int a, const Vector& e_r, int sign, int stage) {
  if (a == 0) return Vector::Zero(e_r.size());
  const double sq = e_r.squaredNorm();
  if (!(sq < 1.0)) throw FunnelViolationError(stage, std::sqrt(sq), "in control input");
  return -static_cast<double>(sign) * gains::alpha(sq) * e_r;
}

InitialConditionReport check_initial_conditions(const DesignParams& dp, const std::vector<Vector>& e_derivs0,
                                                double eta0_norm) {
  InitialConditionReport rep;
  std::vector<Vector> stages;
  const int bad = error_cascade_into(dp.phi0_0, e_derivs0, stages);
  for (std::size_t i = 0; i < e_derivs0.size(); ++i) {
    if (i < stages.size()) {
      rep.e_norms.push_back(stages[i].norm());
      rep.e_ok.push_back(bad == 0 || static_cast<int>(i) + 1 < bad);
    } else {
      rep.e_norms.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.e_ok.push_back(false);
    }
  }
  rep.eta_norm = eta0_norm;
  rep.eta_ok = eta0_norm <= dp.eta_star;
  return rep;
}

}  // namespace funnelsim
