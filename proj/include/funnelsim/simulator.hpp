#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "funnelsim/controller.hpp"
#include "funnelsim/design.hpp"
#include "funnelsim/reference.hpp"
#include "funnelsim/sysmodel.hpp"

namespace funnelsim {

/// Car z with a mass m2 on a spring/damper ramp at angle theta; state (z, s, z', s'),
/// input force on the car, output y = z + cos(theta) s.
StateSpace mass_on_car(double m1, double m2, double k, double d, double theta);

/// Internal coordinates built from physical quantities:
///   eta1 = s + b y,  eta2 = s' + b y' - g y,  b = cos(theta)/sin^2(theta), g = d b/(m2 sin^2(theta)).
Matrix mass_on_car_internal_rows(double m1, double m2, double k, double d, double theta);

/// Normal form of mass_on_car using mass_on_car_internal_rows.
NormalForm mass_on_car_normal_form(double m1, double m2, double k, double d, double theta);

struct SimOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double output_dt = 1e-3;
  double h_min = 1e-12;
  double domain_margin = 1e-10;
  bool record_steps = true;
  std::size_t max_steps = 200'000'000;
};

struct TraceSample {
  double t = 0.0;
  int a = 1;
  double tau = 0.0;
  double phi = 0.0;
  Vector chain;  // (y, y', ..., y^(r-1)); empty when read back from CSV
  Vector y;
  double e_norm = 0.0;
  std::vector<double> e_stage;  // ||e_1|| .. ||e_r||
  Vector u;
  double u_norm = 0.0;
  Vector eta;
  double eta_norm = 0.0;

  double psi() const { return phi > 0.0 ? 1.0 / phi : 0.0; }
};

struct IntegratorStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t domain_rejections = 0;
  std::size_t rhs_evaluations = 0;
  double smallest_step = 0.0;
  double largest_step = 0.0;
};

struct Trace {
  int r = 1;
  Eigen::Index m = 1;
  Eigen::Index k = 0;
  std::vector<TraceSample> samples;
  IntegratorStats stats;

  bool empty() const { return samples.empty(); }
};

/// Right-hand side of the closed loop in chain coordinates. Returns false when
/// a = 1 and the error cascade leaves the domain (norm >= limit).
bool closed_loop_rhs(const NormalForm& nf, int sign, double phi, int a, double t, const Vector& state,
                     const ReferenceSignal& y_ref, Vector& dstate, double limit = 1.0);

/// Closed-loop simulation on [0, sched.t_end()] with the integration split at
/// every dropout boundary.
Trace integrate(const NormalForm& nf, const ClassConstants& cc, const DesignParams& design,
                const AvailabilitySchedule& sched, const ReferenceSignal& y_ref, const InitialConditions& ic,
                const SimOptions& opts = {});

/// Open loop with u = 0 on [t0, t1]; chain0 stacks (y, ..., y^(r-1)).
Trace coasting_run(const NormalForm& nf, const Vector& chain0, const Vector& eta0, double t0, double t1,
                   const SimOptions& opts = {});

void write_trace_csv(const Trace& trace, std::ostream& out);
void write_trace_csv(const Trace& trace, const std::string& path);

/// Parses the CSV layout written above. Throws TraceFormatError on malformed input.
Trace read_trace_csv(std::istream& in);
Trace read_trace_csv(const std::string& path);

}  // namespace funnelsim
