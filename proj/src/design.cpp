#include "funnelsim/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "funnelsim/controller.hpp"
#include "funnelsim/error.hpp"
#include "funnelsim/log.hpp"

namespace funnelsim {

namespace {

constexpr double kStrictMargin = 1e-9;
constexpr double kBisectionTol = 1e-12;
constexpr double kMinRate = 1e-6;
constexpr double kChiSlack = 1e-3;

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void require_q(double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::InvalidQ, "q = " + num(q) + " is outside (0,1)");
}

// Largest x >= 0 with x^2 e^{beta x} <= target (target > 0, beta >= 0).
double solve_quadratic_exponential(double beta, double target) {
  auto g = [beta](double x) { return x * x * std::exp(beta * x); };
  double lo = 0.0;
  double hi = 1.0;
  while (g(hi) < target) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 500 && hi - lo > kBisectionTol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) <= target ? lo : hi) = mid;
  }
  return lo;
}

std::vector<double> block_norms(const NormalForm& nf) {
  std::vector<double> out;
  for (const auto& blk : nf.r_blocks) out.push_back(spectral_norm(blk));
  return out;
}

}  // namespace

FunnelSpec::FunnelSpec(double a_, double b_, double c_) : a(a_), b(b_), c(c_), d(b_) {
  if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0) || !std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
    throw Error(ErrorCode::InvalidArgument, "funnel parameters must be positive and finite (a=" + num(a) +
                                                ", b=" + num(b) + ", c=" + num(c) + ")");
}

double FunnelSpec::value(double t) const { return 1.0 / boundary(t); }

double FunnelSpec::derivative(double t) const {
  const double decay = a * std::exp(-b * t);
  const double psi = decay + c;
  return b * decay / (psi * psi);
}

double FunnelSpec::boundary(double t) const { return a * std::exp(-b * t) + c; }

ReferenceBounds ReferenceBounds::of(const ReferenceSignal& ref, int r) {
  ReferenceBounds out;
  out.y_sup = ref.sup_norm(0);
  out.x_sup = ref.chain_sup_norm(r);
  out.y_max = ref.max_derivative_norm(r);
  return out;
}

std::vector<Vector> initial_error_derivatives(const InitialConditions& ic, const ReferenceSignal& ref) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < ic.y_derivs.size(); ++i) {
    if (ic.y_derivs[i].size() != ref.dim())
      throw Error(ErrorCode::InvalidArgument, "initial output derivative has wrong dimension");
    out.push_back(ic.y_derivs[i] - ref.derivative(static_cast<int>(i), 0.0));
  }
  return out;
}

double partial_geometric_sum(int k, double s) {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "A_k needs k >= 0");
  double acc = 1.0;
  for (int j = 0; j < k; ++j) acc = acc * s + 1.0;
  return acc;
}

double geometric_constant(int r, double q) {
  require_q(q);
  return partial_geometric_sum(r, gains::alpha(q * q));
}

DropoutBound max_dropout_duration(const ClassConstants& cc, int r, double q) {
  DropoutBound out;
  out.a_r = geometric_constant(r, q);
  const double spm = cc.s * cc.p * cc.big_m;
  if (spm > 0.0) out.by_rule[0] = solve_quadratic_exponential(cc.beta, 1.0 / spm);
  const double spm2 = spm * cc.big_m;
  if (spm2 > 0.0)
    out.by_rule[1] = solve_quadratic_exponential(cc.beta, q / (out.a_r * spm2)) * (1.0 - kStrictMargin);
  if (cc.mu * cc.big_m > 0.0) out.by_rule[2] = (1.0 - kStrictMargin) / (2.0 * cc.mu * cc.big_m);
  for (const auto& v : out.by_rule)
    if (v) out.value = out.value ? std::min(*out.value, *v) : *v;
  return out;
}

double min_availability_duration(const ClassConstants& cc, int r, double q, double delta_loss) {
  const double a_r = geometric_constant(r, q);
  if (!(delta_loss > 0.0)) throw Error(ErrorCode::InvalidArgument, "Delta must be positive");
  const double m = cc.big_m;
  const double grow = std::exp(cc.beta * delta_loss);
  const double den1 = 1.0 - cc.mu * m * delta_loss;
  const double den2 = cc.mu * q - cc.mu * cc.s * cc.p * m * m * a_r * delta_loss * delta_loss * grow;
  if (!(den1 > 0.0))
    throw Error(ErrorCode::DeltaTooLarge, "1 - mu M Delta = " + num(den1) + " at Delta = " + num(delta_loss));
  if (!(den2 > 0.0))
    throw Error(ErrorCode::DeltaTooLarge, "availability denominator " + num(den2) + " at Delta = " + num(delta_loss));
  const double r1 = (4.0 * m * m + cc.p * m * delta_loss) / den1;
  const double r2 = 2.0 * cc.s * cc.p * m * m * m * a_r * delta_loss * grow / den2;
  double out = 0.0;
  if (r1 > 1.0) out = std::max(out, std::log(r1) / cc.mu);
  if (r2 > 1.0) out = std::max(out, std::log(r2) / cc.mu);
  return out;
}

namespace {

struct EtaStarTerms {
  std::array<double, 3> rhs{};
  double denominator = 0.0;
};

EtaStarTerms eta_star_terms(const ClassConstants& cc, int r, double delta_loss, double delta_avail, double q,
                            const ReferenceBounds& refs) {
  const double a_r = geometric_constant(r, q);
  const double m = cc.big_m;
  const double grow = std::exp(cc.beta * delta_loss);
  EtaStarTerms out;
  out.rhs[0] = cc.p * delta_loss * std::exp(cc.mu * delta_avail) * refs.y_sup;
  out.rhs[1] = (refs.x_sup + 1.0) * std::exp(cc.beta * delta_loss + cc.mu * delta_avail);
  out.denominator = cc.mu * q - cc.s * cc.p * m * m * a_r * delta_loss * grow *
                                    (cc.mu * delta_loss + 2.0 * m * std::exp(-cc.mu * delta_avail));
  const double numerator = cc.p * m * a_r * (refs.x_sup * (1.0 + grow) + grow);
  if (numerator == 0.0)
    out.rhs[2] = 0.0;
  else
    out.rhs[2] = out.denominator > 0.0 ? numerator / out.denominator : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace

EtaStarBound eta_star_lower_bound(const ClassConstants& cc, int r, double delta_loss, double delta_avail,
                                  double q, const ReferenceBounds& refs) {
  const EtaStarTerms t = eta_star_terms(cc, r, delta_loss, delta_avail, q, refs);
  if (!(t.denominator > 0.0))
    throw Error(ErrorCode::InfeasibleEtaStar, "third eta* denominator is " + num(t.denominator) + " (Delta = " +
                                                  num(delta_loss) + ", delta = " + num(delta_avail) + ")");
  EtaStarBound out;
  out.terms = t.rhs;
  out.denominator = t.denominator;
  out.value = std::max({t.rhs[0], t.rhs[1], t.rhs[2]});
  return out;
}

EtaStarFeasibility eta_star_feasibility(const ClassConstants& cc, int r, double delta_loss, double delta_avail,
                                        double q, const ReferenceBounds& refs, double eta_star) {
  const EtaStarTerms t = eta_star_terms(cc, r, delta_loss, delta_avail, q, refs);
  EtaStarFeasibility out;
  out.rhs = t.rhs;
  out.denominator = t.denominator;
  for (int i = 0; i < 3; ++i) out.pass[i] = eta_star >= t.rhs[i];
  if (!(t.denominator > 0.0) && t.rhs[2] != 0.0) out.pass[2] = false;
  return out;
}

FunnelWindow phi0_window(const ClassConstants& cc, int r, double eta_star, double delta_loss, double delta_avail,
                         double q, double x_ref_sup) {
  const double a_r = geometric_constant(r, q);
  if (!(eta_star > 0.0)) throw Error(ErrorCode::InvalidArgument, "eta* must be positive");
  const double m = cc.big_m;
  const double grow = std::exp(cc.beta * delta_loss);
  FunnelWindow w;
  w.e_bound = x_ref_sup * (1.0 + grow) + grow +
              cc.s * m * delta_loss * grow * (2.0 * m * std::exp(-cc.mu * delta_avail) + cc.mu * delta_loss) * eta_star;
  w.phi0_min = cc.p * m / (cc.mu * eta_star);
  w.phi0_max = q / (a_r * w.e_bound);
  if (w.phi0_min > w.phi0_max)
    throw Error(ErrorCode::EmptyWindow, "phi0_min = " + num(w.phi0_min) + " exceeds phi0_max = " + num(w.phi0_max));
  return w;
}

GainRecursion gain_recursion(double phi00, double d, const std::vector<Vector>& e_derivs0, double q) {
  require_q(q);
  if (!(phi00 > 0.0) || !(d > 0.0)) throw Error(ErrorCode::InvalidArgument, "phi0(0) and d must be positive");
  const int r = static_cast<int>(e_derivs0.size());
  if (r < 1) throw Error(ErrorCode::InvalidArgument, "gain recursion needs r >= 1");

  GainRecursion g;
  g.mu0 = d * (1.0 + phi00) / phi00;
  g.mu.assign(r, 0.0);
  g.c.assign(r, 0.0);
  g.gap.assign(r, 1.0);
  g.mu[0] = g.mu0;

  g.e0.push_back(phi00 * e_derivs0[0]);
  for (int k = 1; k < r; ++k) {
    const double prev_sq = g.e0[k - 1].squaredNorm();
    if (!(prev_sq < 1.0)) throw Error(ErrorCode::CiOverflow, "c_" + std::to_string(k) + " >= 1 (initial cascade)");
    g.e0.push_back(phi00 * e_derivs0[k] + gains::alpha(prev_sq) * g.e0[k - 1]);
  }
  {
    const double last_sq = g.e0[r - 1].squaredNorm();
    if (!(last_sq < 1.0)) throw Error(ErrorCode::CiOverflow, "c_" + std::to_string(r) + " >= 1 (initial cascade)");
  }

  for (int k = 1; k < r; ++k) {
    const double cp = g.c[k - 1];
    const double cp_alpha = cp / g.gap[k - 1];
    const double prev_tilde = (1.0 + cp * cp) / (g.gap[k - 1] * g.gap[k - 1]);
    // mu_1 follows the general line with c_0 = 0, which gives 1 + 2 mu_0.
    g.mu[k] = 1.0 + g.mu0 * (1.0 + cp_alpha) + prev_tilde * (g.mu[k - 1] + cp_alpha);
    const double z = k == 1 ? 1.0 + g.mu0 : g.mu[k];
    const double e_sq = g.e0[k - 1].squaredNorm();
    const double cand = gains::alpha_hat_inv(z);
    g.c[k] = std::sqrt(std::max({e_sq, cand, q * q}));
    // 1 - c_k^2 without cancellation: z/(1+z) leaves 1/(1+z).
    g.gap[k] = std::min({1.0 - e_sq, 1.0 / (1.0 + z), 1.0 - q * q});
    // c_k may round to 1 once mu_k passes ~1e16; the gap still carries 1 - c_k^2.
    if (!(g.gap[k] > 0.0) || !std::isfinite(g.mu[k]))
      throw Error(ErrorCode::CiOverflow, "c_" + std::to_string(k) + " >= 1");
  }
  g.chi = chi_from_gains(g.c, g.gap);
  return g;
}

double chi_from_gains(const std::vector<double>& c, const std::vector<double>& gap) {
  const std::size_t r = c.size();
  double chi = 0.0;
  for (std::size_t i = 1; i < r; ++i) chi += c[i] + c[i - 1] / gap[i - 1];
  chi += 1.0 + c[r - 1] / gap[r - 1];
  return chi;
}

double minimal_rate(double a, double c, double chi, double rho) {
  if (!(rho > 0.0)) throw Error(ErrorCode::InvalidArgument, "rho must be positive");
  const double room = 1.0 / chi - c;
  if (!(room > 0.0))
    throw Error(ErrorCode::InfeasibleRefinement, "c = " + num(c) + " leaves no room below 1/chi = " + num(1.0 / chi));
  const double ratio = a / room;
  if (ratio <= 1.0) return kMinRate;
  double b = std::max(kMinRate, std::log(ratio) / rho);
  // Round-off can leave phi0(rho) a hair under chi at the exact root.
  for (int i = 0; i < 64 && 1.0 / (a * std::exp(-b * rho) + c) < chi; ++i) b *= 1.0 + 1e-14;
  return b;
}

namespace {

double choose_initial_value(const FunnelWindow& window, const FunnelTemplate& tmpl) {
  double phi00 = window.phi0_max;
  if (tmpl.a) {
    if (!tmpl.c) throw Error(ErrorCode::TemplateRejected, "template a needs an explicit c");
    phi00 = 1.0 / (*tmpl.a + *tmpl.c);
  } else if (tmpl.phi0_0) {
    phi00 = *tmpl.phi0_0;
  }
  if (!(phi00 >= window.phi0_min && phi00 <= window.phi0_max))
    throw Error(ErrorCode::TemplateRejected, "(phi1): phi0(0) = " + num(phi00) + " outside [" +
                                                 num(window.phi0_min) + ", " + num(window.phi0_max) + "]");
  return phi00;
}

}  // namespace

FunnelSpec refine_funnel(const FunnelWindow& window, double chi, double rho, const FunnelTemplate& tmpl) {
  const double phi00 = choose_initial_value(window, tmpl);
  const double c_cap = (1.0 - kChiSlack) / chi;
  const double c = tmpl.c.value_or(c_cap);
  if (tmpl.c && c > c_cap)
    throw Error(ErrorCode::TemplateRejected, "(phi2): c = " + num(c) + " exceeds (1-1e-3)/chi = " + num(c_cap));
  if (!(c > 0.0)) throw Error(ErrorCode::TemplateRejected, "c must be positive");
  if (c >= 1.0 / phi00)
    throw Error(ErrorCode::InfeasibleRefinement, "c = " + num(c) + " >= 1/phi0(0) = " + num(1.0 / phi00));
  const double a = 1.0 / phi00 - c;
  if (tmpl.b) {
    FunnelSpec f(a, *tmpl.b, c);
    if (f.value(rho) < chi)
      throw Error(ErrorCode::TemplateRejected,
                  "(phi2): phi0(rho) = " + num(f.value(rho)) + " below chi = " + num(chi));
    return f;
  }
  return FunnelSpec(a, minimal_rate(a, c, chi, rho), c);
}

std::pair<double, double> certificate_root(double c_tilde, double g) {
  if (!(g > 0.0)) throw Error(ErrorCode::DegenerateCertificate, "gamma phi0(0) must be positive");
  if (c_tilde <= 0.0) return {0.0, 1.0};
  const double k = c_tilde / g;
  const double root = std::sqrt(1.0 + 4.0 * k * k);
  // eps = (-1 + sqrt(1+4k^2)) / (2k) rewritten to avoid cancellation in either limit.
  const double eps = 2.0 * k / (1.0 + root);
  const double one_minus = 2.0 / (2.0 * k + 1.0 + root);
  return {eps, one_minus};
}

InputCertificate input_bound_certificate(const ClassConstants& cc, const NormalForm& nf, const FunnelSpec& funnel,
                                         const GainRecursion& gr, double eta_star, const ReferenceBounds& refs,
                                         double q) {
  require_q(q);
  const int r = static_cast<int>(gr.c.size());
  InputCertificate cert;
  cert.y_max = refs.y_max;
  cert.lambda = funnel.c;
  cert.gamma = cc.gamma_min;
  if (!(cert.gamma > 0.0)) throw Error(ErrorCode::DegenerateCertificate, "gamma must be positive");
  const double psi0 = funnel.boundary(0.0);
  cert.eta_bar = std::max(eta_star, cc.big_m * eta_star + cc.p * cc.big_m / cc.mu * (psi0 + refs.y_max));

  const double c_last = gr.c[r - 1];
  const double gap_last = gr.gap[r - 1];
  const double c_alpha_last = c_last / gap_last;
  const double tilde_last = (1.0 + c_last * c_last) / (gap_last * gap_last);
  const double y_over = refs.y_max / cert.lambda;
  double ct = gr.mu0 * (1.0 + c_alpha_last) + tilde_last * (gr.mu[r - 1] + c_alpha_last);
  const std::vector<double> norms = block_norms(nf);
  for (int i = 1; i <= r; ++i) ct += norms[i - 1] * (1.0 + gr.c[i - 1] / gr.gap[i - 1] + y_over);
  ct += cc.s / cert.lambda * cert.eta_bar + y_over;
  cert.c_tilde = ct;

  const double g = cert.gamma * funnel.initial();
  const auto [eps, one_minus_eps] = certificate_root(ct, g);
  cert.epsilon = eps;
  cert.one_minus_epsilon = one_minus_eps;
  const double er_sq = gr.e0[r - 1].squaredNorm();
  const double cr_sq = std::max({er_sq, eps, q * q});
  cert.c_r = std::sqrt(cr_sq);
  cert.one_minus_cr_sq = std::min({1.0 - er_sq, one_minus_eps, 1.0 - q * q});
  if (!(cert.one_minus_cr_sq > 0.0) || !std::isfinite(cert.one_minus_cr_sq))
    throw Error(ErrorCode::DegenerateCertificate,
                "c_r numerically 1 (C~ = " + num(ct) + ", gamma phi0(0) = " + num(g) + ")");
  cert.u_max = cert.c_r / cert.one_minus_cr_sq;
  if (!std::isfinite(cert.u_max)) throw Error(ErrorCode::DegenerateCertificate, "U_max overflows");
  return cert;
}

bool InitialConditionReport::ok() const { return first_failure() == 0; }

int InitialConditionReport::first_failure() const {
  for (std::size_t i = 0; i < e_ok.size(); ++i)
    if (!e_ok[i]) return static_cast<int>(i) + 1;
  if (!eta_ok) return static_cast<int>(e_ok.size()) + 1;
  return 0;
}

namespace {

void check_inputs(const NormalForm& nf, const ReferenceSignal& ref, const InitialConditions& ic) {
  nf.validate();
  if (ref.dim() != nf.m) throw Error(ErrorCode::InvalidArgument, "reference dimension differs from m");
  if (static_cast<int>(ic.y_derivs.size()) != nf.r)
    throw Error(ErrorCode::InvalidArgument, "expected " + std::to_string(nf.r) + " initial output derivatives");
  if (ic.eta.size() != nf.internal_dim())
    throw Error(ErrorCode::InvalidArgument, "eta0 has dimension " + std::to_string(ic.eta.size()) + ", expected " +
                                                std::to_string(nf.internal_dim()));
}

}  // namespace

DesignParams synthesize(const NormalForm& nf, const ReferenceSignal& ref, const InitialConditions& ic,
                        const SynthesisOptions& opts) {
  require_q(opts.q);
  if (!(opts.theta > 0.0 && opts.theta < 1.0))
    throw Error(ErrorCode::InvalidArgument, "theta = " + num(opts.theta) + " is outside (0,1)");
  check_inputs(nf, ref, ic);

  DesignParams dp;
  dp.r = nf.r;
  dp.m = nf.m;
  dp.q = opts.q;
  dp.theta = opts.theta;
  dp.cc = class_constants(nf, opts.beta);
  dp.refs = ReferenceBounds::of(ref, nf.r);
  const ClassConstants& cc = dp.cc;

  // Step 1 and the admissible dropout/availability lengths.
  dp.a_r = geometric_constant(dp.r, dp.q);
  dp.dropout = max_dropout_duration(cc, dp.r, dp.q);
  if (opts.delta_loss) {
    dp.delta_loss = *opts.delta_loss;
    if (!(dp.delta_loss > 0.0)) throw Error(ErrorCode::InvalidArgument, "Delta must be positive");
    if (dp.dropout.value && dp.delta_loss > *dp.dropout.value)
      throw Error(ErrorCode::DeltaTooLarge,
                  "Delta = " + num(dp.delta_loss) + " exceeds the limit " + num(*dp.dropout.value));
  } else if (dp.dropout.value) {
    dp.delta_loss = dp.theta * *dp.dropout.value;
  } else {
    throw Error(ErrorCode::MissingLimits, "dropout length is unbounded for this system; supply Delta");
  }
  dp.delta_min = min_availability_duration(cc, dp.r, dp.q, dp.delta_loss);
  if (opts.delta_avail) {
    dp.delta_avail = *opts.delta_avail;
    if (!(dp.delta_avail > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
    if (dp.delta_avail < dp.delta_min)
      throw Error(ErrorCode::AvailabilityTooShort,
                  "delta = " + num(dp.delta_avail) + " is below the minimum " + num(dp.delta_min));
  } else if (dp.delta_min > 0.0) {
    dp.delta_avail = dp.delta_min / dp.theta;
  } else {
    throw Error(ErrorCode::MissingLimits, "any availability length is admissible for this system; supply delta");
  }
  log::info("Delta = " + num(dp.delta_loss) + ", delta = " + num(dp.delta_avail));

  // Step 2.
  dp.eta_star_min = eta_star_lower_bound(cc, dp.r, dp.delta_loss, dp.delta_avail, dp.q, dp.refs);
  if (opts.eta_star) {
    dp.eta_star = *opts.eta_star;
    if (!(dp.eta_star >= dp.eta_star_min.value) || !(dp.eta_star > 0.0))
      throw Error(ErrorCode::InfeasibleEtaStar,
                  "eta* = " + num(dp.eta_star) + " is below the minimum " + num(dp.eta_star_min.value));
  } else {
    dp.eta_star = dp.eta_star_min.value * (1.0 + 1e-6);
    if (dp.eta_star == 0.0) dp.eta_star = 1e-6;
  }

  // Step 3.
  dp.window = phi0_window(cc, dp.r, dp.eta_star, dp.delta_loss, dp.delta_avail, dp.q, dp.refs.x_sup);
  dp.phi0_0 = choose_initial_value(dp.window, opts.funnel);

  const std::vector<Vector> e_derivs0 = initial_error_derivatives(ic, ref);
  dp.initial = check_initial_conditions(dp, e_derivs0, ic.eta.size() ? ic.eta.norm() : 0.0);
  if (!dp.initial.ok()) {
    const int idx = dp.initial.first_failure();
    throw Error(ErrorCode::InitialConditionViolated,
                idx <= dp.r ? "||e_" + std::to_string(idx) + "(0)|| = " + num(dp.initial.e_norms[idx - 1]) + " >= 1"
                            : "||eta(0)|| = " + num(dp.initial.eta_norm) + " exceeds eta* = " + num(dp.eta_star));
  }

  // Steps 4 and 5. chi depends on d = b, so b is a fixed point unless given.
  if (opts.rho) {
    dp.rho = *opts.rho;
    if (!(dp.rho > 0.0 && dp.rho < dp.delta_avail))
      throw Error(ErrorCode::InvalidArgument, "rho must lie in (0, delta)");
  } else {
    dp.rho = 0.99 * dp.delta_avail;
  }
  FunnelTemplate tmpl = opts.funnel;
  tmpl.phi0_0 = dp.phi0_0;
  tmpl.a.reset();
  if (tmpl.b) {
    dp.gains = gain_recursion(dp.phi0_0, *tmpl.b, e_derivs0, dp.q);
    dp.funnel = refine_funnel(dp.window, dp.gains.chi, dp.rho, tmpl);
    dp.refinement_iterations = 1;
  } else {
    double b = 1.0;
    bool converged = false;
    for (int it = 0; it < 500; ++it) {
      const GainRecursion g = gain_recursion(dp.phi0_0, b, e_derivs0, dp.q);
      const double next = refine_funnel(dp.window, g.chi, dp.rho, tmpl).b;
      dp.refinement_iterations = it + 1;
      const bool done = std::abs(next - b) <= 1e-12 * std::max(b, next);
      b = next;
      if (done) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw Error(ErrorCode::InfeasibleRefinement, "funnel rate did not settle (last b = " + num(b) + ")");
    // Step off the fixed point so (phi2) holds with the chi of the final rate.
    double trial = b * (1.0 + 1e-9);
    bool accepted = false;
    for (int attempt = 0; attempt < 64 && !accepted; ++attempt, trial *= 1.0 + 1e-6) {
      GainRecursion g = gain_recursion(dp.phi0_0, trial, e_derivs0, dp.q);
      FunnelTemplate fixed = tmpl;
      fixed.b = trial;
      try {
        dp.funnel = refine_funnel(dp.window, g.chi, dp.rho, fixed);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::TemplateRejected) throw;
        continue;
      }
      dp.gains = std::move(g);
      accepted = true;
    }
    if (!accepted) throw Error(ErrorCode::InfeasibleRefinement, "no rate satisfies phi0(rho) >= chi");
  }
  dp.mu0_tight = dp.funnel.b * dp.funnel.a / (dp.funnel.a + dp.funnel.c);

  dp.cert = input_bound_certificate(cc, nf, dp.funnel, dp.gains, dp.eta_star, dp.refs, dp.q);
  log::info("chi = " + num(dp.gains.chi) + ", b = " + num(dp.funnel.b) + ", U_max = " + num(dp.cert.u_max));
  return dp;
}

DesignParams fixed_design(const NormalForm& nf, const ReferenceSignal& ref, const InitialConditions& ic,
                          const FunnelSpec& funnel, std::optional<double> beta) {
  check_inputs(nf, ref, ic);
  DesignParams dp;
  dp.synthesized = false;
  dp.r = nf.r;
  dp.m = nf.m;
  dp.q = std::numeric_limits<double>::quiet_NaN();
  dp.theta = std::numeric_limits<double>::quiet_NaN();
  dp.cc = class_constants(nf, beta);
  dp.refs = ReferenceBounds::of(ref, nf.r);
  dp.funnel = funnel;
  dp.phi0_0 = funnel.initial();
  dp.eta_star = std::numeric_limits<double>::infinity();
  dp.mu0_tight = funnel.b * funnel.a / (funnel.a + funnel.c);
  const std::vector<Vector> e_derivs0 = initial_error_derivatives(ic, ref);
  dp.initial = check_initial_conditions(dp, e_derivs0, ic.eta.size() ? ic.eta.norm() : 0.0);
  if (!dp.initial.ok())
    throw Error(ErrorCode::InitialConditionViolated,
                "||e_" + std::to_string(dp.initial.first_failure()) + "(0)|| >= 1 for the fixed funnel");
  return dp;
}

}  // namespace funnelsim
