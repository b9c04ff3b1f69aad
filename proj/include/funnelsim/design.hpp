#pragma once

#include <array>
#include <optional>
#include <vector>

#include "funnelsim/linalg.hpp"
#include "funnelsim/reference.hpp"
#include "funnelsim/sysmodel.hpp"

namespace funnelsim {

// Gain helpers shared by the design recursion, the controller and Lemma checks.
namespace gains {
/// 1 / (1 - s)
inline double alpha(double s) { return 1.0 / (1.0 - s); }
/// z / (1 + z), the inverse of s -> s alpha(s)
inline double alpha_hat_inv(double z) { return z / (1.0 + z); }
/// (1 + s) / (1 - s)^2
inline double alpha_tilde(double s) { return (1.0 + s) / ((1.0 - s) * (1.0 - s)); }
}  // namespace gains

/// phi0(t) = 1 / (a e^{-bt} + c); psi = 1/phi0 is the funnel boundary.
struct FunnelSpec {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
  double d = 1.0;  // |phi0'| <= d (1 + phi0); equals b for this family

  FunnelSpec() = default;
  FunnelSpec(double a_, double b_, double c_);

  double value(double t) const;
  double derivative(double t) const;
  double boundary(double t) const;  // psi(t)
  double initial() const { return 1.0 / (a + c); }
};

struct ReferenceBounds {
  double y_sup = 0.0;  // ||y_ref||_inf
  double x_sup = 0.0;  // ||(y_ref, ..., y_ref^(r-1))||_inf
  double y_max = 0.0;  // max_{i=0..r} ||y_ref^(i)||_inf

  static ReferenceBounds of(const ReferenceSignal& ref, int r);
};

/// Initial data of the chain (y, y', ..., y^(r-1)) at t = 0 and of eta.
struct InitialConditions {
  std::vector<Vector> y_derivs;
  Vector eta;
};

/// e^(i)(0) = y^(i)(0) - y_ref^(i)(0), i = 0..r-1.
std::vector<Vector> initial_error_derivatives(const InitialConditions& ic, const ReferenceSignal& ref);

double partial_geometric_sum(int k, double s);

/// A_r(alpha(q^2)).
double geometric_constant(int r, double q);

struct DropoutBound {
  std::optional<double> value;                   // nullopt: unbounded
  std::array<std::optional<double>, 3> by_rule;  // per inequality, nullopt when vacuous
  double a_r = 0.0;
};

DropoutBound max_dropout_duration(const ClassConstants& cc, int r, double q);

double min_availability_duration(const ClassConstants& cc, int r, double q, double delta_loss);

struct EtaStarBound {
  std::array<double, 3> terms{};
  double value = 0.0;
  double denominator = 0.0;  // of the third term
};

EtaStarBound eta_star_lower_bound(const ClassConstants& cc, int r, double delta_loss, double delta_avail,
                                  double q, const ReferenceBounds& refs);

/// Substitutes a candidate eta* into the three lower-bound inequalities
/// without throwing; a non-positive denominator fails the third one.
struct EtaStarFeasibility {
  std::array<bool, 3> pass{};
  std::array<double, 3> rhs{};
  double denominator = 0.0;
};

EtaStarFeasibility eta_star_feasibility(const ClassConstants& cc, int r, double delta_loss, double delta_avail,
                                        double q, const ReferenceBounds& refs, double eta_star);

struct FunnelWindow {
  double phi0_min = 0.0;
  double phi0_max = 0.0;
  double e_bound = 0.0;  // E
};

FunnelWindow phi0_window(const ClassConstants& cc, int r, double eta_star, double delta_loss, double delta_avail,
                         double q, double x_ref_sup);

struct GainRecursion {
  double mu0 = 0.0;
  std::vector<double> mu;  // mu_0 .. mu_{r-1}
  std::vector<double> c;   // c_0 .. c_{r-1}
  std::vector<double> gap; // 1 - c_k^2, kept separately since c_k can sit within 1e-12 of 1
  std::vector<Vector> e0;  // e_1^0 .. e_r^0
  double chi = 1.0;
};

GainRecursion gain_recursion(double phi00, double d, const std::vector<Vector>& e_derivs0, double q);

double chi_from_gains(const std::vector<double>& c, const std::vector<double>& gap);

struct FunnelTemplate {
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> c;
  std::optional<double> phi0_0;
};

/// Chooses (a, b, c) with phi0(0) in the window, c <= (1 - 1e-3)/chi and
/// phi0(rho) >= chi.
FunnelSpec refine_funnel(const FunnelWindow& window, double chi, double rho, const FunnelTemplate& tmpl = {});

/// Smallest b with phi0(rho) >= chi for fixed a, c (clamped to 1e-6).
double minimal_rate(double a, double c, double chi, double rho);

struct InputCertificate {
  double y_max = 0.0;
  double lambda = 0.0;
  double gamma = 0.0;
  double eta_bar = 0.0;
  double c_tilde = 0.0;
  double epsilon = 0.0;
  double one_minus_epsilon = 1.0;
  double c_r = 0.0;
  double one_minus_cr_sq = 1.0;
  double u_max = 0.0;
};

/// epsilon in (0,1) with c_tilde (1 - eps^2) = g eps, plus 1 - eps without cancellation.
std::pair<double, double> certificate_root(double c_tilde, double g);

InputCertificate input_bound_certificate(const ClassConstants& cc, const NormalForm& nf, const FunnelSpec& funnel,
                                         const GainRecursion& gr, double eta_star, const ReferenceBounds& refs,
                                         double q);

struct SynthesisOptions {
  double q = 0.95;
  double theta = 0.9;
  std::optional<double> beta;
  std::optional<double> delta_loss;   // Delta
  std::optional<double> delta_avail;  // delta
  std::optional<double> eta_star;
  std::optional<double> rho;
  FunnelTemplate funnel;
};

struct InitialConditionReport {
  std::vector<double> e_norms;  // ||e_i(0)||, i = 1..r
  std::vector<bool> e_ok;
  double eta_norm = 0.0;
  bool eta_ok = true;

  bool ok() const;
  int first_failure() const;  // 1-based index of e_i, r+1 for eta, 0 if none
};

struct DesignParams {
  bool synthesized = true;
  int r = 1;
  Eigen::Index m = 1;
  double q = 0.95;
  double theta = 0.9;
  ClassConstants cc;
  ReferenceBounds refs;

  double a_r = 0.0;
  DropoutBound dropout;
  double delta_loss = 0.0;  // Delta
  double delta_min = 0.0;
  double delta_avail = 0.0;  // delta
  EtaStarBound eta_star_min;
  double eta_star = 0.0;
  FunnelWindow window;
  double phi0_0 = 0.0;
  FunnelSpec funnel;
  double rho = 0.0;
  GainRecursion gains;
  double mu0_tight = 0.0;  // esssup |phi0'|/phi0
  int refinement_iterations = 0;
  InputCertificate cert;
  InitialConditionReport initial;
};

DesignParams synthesize(const NormalForm& nf, const ReferenceSignal& ref, const InitialConditions& ic,
                        const SynthesisOptions& opts);

/// A user-fixed funnel outside the synthesis guarantees; only the controller
/// fields and class constants are meaningful.
DesignParams fixed_design(const NormalForm& nf, const ReferenceSignal& ref, const InitialConditions& ic,
                          const FunnelSpec& funnel, std::optional<double> beta = {});

}  // namespace funnelsim
