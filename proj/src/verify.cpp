#include "funnelsim/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "funnelsim/error.hpp"

namespace funnelsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

// Relative margin of value <= bound; 1 when both vanish.
double relative_margin(double value, double bound) {
  if (bound == 0.0 && value == 0.0) return 1.0;
  const double scale = std::abs(bound) > 0.0 ? std::abs(bound) : std::abs(value);
  return (bound - value) / scale;
}

CheckResult make(const std::string& name, bool pass, double margin, double at, std::string detail = {}) {
  return CheckResult{name, pass, margin, at, std::move(detail)};
}

// Runs `sample` over all trace samples, tracking the worst (smallest) margin.
template <class F>
CheckResult worst_over(const std::string& name, const Trace& trace, F&& margin_at, double pass_threshold,
                       bool strict) {
  double worst = 1.0;
  double at = trace.samples.empty() ? 0.0 : trace.samples.front().t;
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const double m = margin_at(i);
    if (m < worst) {
      worst = m;
      at = trace.samples[i].t;
    }
  }
  const bool pass = strict ? worst > pass_threshold : worst >= pass_threshold;
  return make(name, pass, worst, at);
}

}  // namespace

bool VerificationReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

const CheckResult* VerificationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::string VerificationReport::to_text() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << "CHECK " << c.name << (c.pass ? " PASS" : " FAIL") << " margin=" << fmt(c.margin) << " at=";
    if (std::isnan(c.at))
      os << "nan";
    else
      os << fmt(c.at);
    os << '\n';
  }
  return os.str();
}

CheckResult funnel_containment(const Trace& trace) {
  return worst_over(
      "funnel_containment", trace,
      [&](std::size_t i) { return 1.0 - trace.samples[i].phi * trace.samples[i].e_norm; }, 0.0, true);
}

CheckResult input_zero_on_dropout(const Trace& trace) {
  double worst = 0.0;
  double at = trace.samples.empty() ? 0.0 : trace.samples.front().t;
  for (const auto& s : trace.samples) {
    if (s.a != 0) continue;
    const double n = std::max(s.u.size() ? s.u.norm() : 0.0, s.u_norm);
    if (n > worst) {
      worst = n;
      at = s.t;
    }
  }
  return make("input_zero_on_dropout", worst == 0.0, worst == 0.0 ? 0.0 : -worst, at);
}

std::vector<CheckResult> input_and_state_bounds(const Trace& trace, const DesignParams& design) {
  std::vector<CheckResult> out;
  const double u_max = design.cert.u_max;
  out.push_back(worst_over(
      "input_bound", trace, [&](std::size_t i) { return relative_margin(trace.samples[i].u_norm, u_max); }, 0.0,
      false));
  out.push_back(input_zero_on_dropout(trace));

  // t_k^+ is the last dropout sample before the measurement returns.
  double worst = 1.0;
  double at = kNaN;
  for (std::size_t i = 0; i + 1 < trace.samples.size(); ++i) {
    if (trace.samples[i].a == 0 && trace.samples[i + 1].a == 1) {
      const double m = relative_margin(trace.samples[i].eta_norm, design.eta_star);
      if (m < worst || std::isnan(at)) {
        worst = std::min(worst, m);
        at = trace.samples[i].t;
      }
    }
  }
  if (std::isnan(at)) at = trace.samples.empty() ? 0.0 : trace.samples.front().t;
  out.push_back(make("eta_reacquisition", worst >= -kIntegratedSlack, worst, at));

  out.push_back(worst_over(
      "eta_global", trace,
      [&](std::size_t i) { return relative_margin(trace.samples[i].eta_norm, design.cert.eta_bar); },
      -kIntegratedSlack, false));
  return out;
}

CheckResult coasting_bound_check(const Trace& trace, const ClassConstants& cc) {
  if (trace.samples.empty()) return make("coasting_bound", true, 1.0, 0.0);
  const TraceSample& s0 = trace.samples.front();
  if (s0.chain.size() == 0) throw Error(ErrorCode::InvalidArgument, "coasting check needs the recorded chain");
  const double t0 = s0.t;
  const double x0 = s0.chain.norm();
  const double eta0 = s0.eta_norm;
  double sup = 0.0;
  double worst = 1.0;
  double at = t0;
  bool pass = true;
  for (const auto& s : trace.samples) {
    sup = std::max(sup, s.chain.norm());
    const double dt = s.t - t0;
    const double integral = (1.0 - std::exp(-cc.mu * dt)) / cc.mu;
    const double bound = (x0 + cc.s * cc.big_m * eta0 * integral) * std::exp(cc.beta * dt);
    const double m = relative_margin(sup, bound);
    if (m < worst) {
      worst = m;
      at = s.t;
    }
    if (sup > bound * (1.0 + kIntegratedSlack)) pass = false;
  }
  return make("coasting_bound", pass, worst, at);
}

CheckResult internal_envelope_check(const Trace& trace, const ClassConstants& cc) {
  if (trace.samples.empty() || trace.k == 0) return make("internal_envelope", true, 1.0, 0.0);
  const double t0 = trace.samples.front().t;
  const double eta0 = trace.samples.front().eta_norm;
  double y_sup = 0.0;
  double worst = 1.0;
  double at = t0;
  bool pass = true;
  for (const auto& s : trace.samples) {
    y_sup = std::max(y_sup, s.y.norm());
    const double dt = s.t - t0;
    const double factor = std::min(cc.big_m / cc.mu, cc.big_m * dt);
    const double bound = cc.big_m * std::exp(-cc.mu * dt) * eta0 + cc.p * y_sup * factor;
    const double m = relative_margin(s.eta_norm, bound);
    if (m < worst) {
      worst = m;
      at = s.t;
    }
    if (s.eta_norm > bound * (1.0 + kIntegratedSlack) + kAlgebraicSlack) pass = false;
  }
  return make("internal_envelope", pass, worst, at);
}

CheckResult integration_complete(const Trace& trace, double t_end) {
  if (trace.samples.empty()) return make("integration_complete", false, -t_end, 0.0, "empty trace");
  const double last = trace.samples.back().t;
  const double gap = t_end - last;
  const bool pass = std::abs(gap) <= 1e-10 * std::max(1.0, std::abs(t_end));
  return make("integration_complete", pass, pass ? 0.0 : -std::abs(gap), last);
}

namespace {

double geometric_sum_direct(int k, double s) {
  double acc = 0.0;
  for (int j = 0; j <= k; ++j) acc += std::pow(s, j);
  return acc;
}

Vector random_unit(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal;
  Vector v(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

std::mt19937_64 trial_rng(std::uint64_t seed, int salt, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(trial)};
  return std::mt19937_64(seq);
}

bool rho_recursive(const std::vector<Vector>& zeta, std::size_t k, Vector& out) {
  if (k == 1) {
    out = zeta[0];
    return out.norm() < 1.0;
  }
  Vector prev;
  if (!rho_recursive(zeta, k - 1, prev)) return false;
  out = zeta[k - 1] + (1.0 / (1.0 - prev.squaredNorm())) * prev;
  return out.norm() < 1.0;
}

}  // namespace

CheckResult lemma_ar_property(std::uint64_t seed, int r, double q, int trials,
                              const std::function<double(double)>& ell_in) {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::InvalidQ, "q must lie in (0,1)");
  if (r < 1) throw Error(ErrorCode::InvalidArgument, "r must be >= 1");
  const std::function<double(double)> ell = ell_in ? ell_in : [](double s) { return 1.0 / (1.0 - s); };
  const double lq = ell(q * q);
  const double a_r = geometric_sum_direct(r, lq);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = 1.0;
  int violations = 0;
  for (int trial = 0; trial < trials; ++trial) {
    auto rng = trial_rng(seed, 100 + r, trial);
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 3);
    const double e_bound = std::pow(10.0, -2.0 + 4.0 * unif(rng));
    const double u = 1.0 - std::pow(unif(rng), 3.0);
    const double lambda = u * q / (a_r * e_bound);
    const bool aligned = unif(rng) < 0.5;
    const Vector dir = random_unit(rng, n);
    Vector zeta = Vector::Zero(n);
    for (int k = 0; k < r; ++k) {
      const double len = unif(rng) < 0.5 ? e_bound : e_bound * unif(rng);
      const Vector xi = (aligned ? dir : random_unit(rng, n)) * len;
      zeta = lambda * xi + ell(zeta.squaredNorm()) * zeta;
      const double bound = lambda * e_bound * geometric_sum_direct(k, lq);  // A_{k-1} for zeta_{k+1}... index k+1
      const double m = std::min(bound - zeta.norm(), q - bound);
      worst = std::min(worst, m);
      if (zeta.norm() > bound + kAlgebraicSlack * std::max(1.0, bound) || bound > q + kAlgebraicSlack) ++violations;
    }
  }
  return make("lemma_ar_r" + std::to_string(r), violations == 0, worst, kNaN,
              std::to_string(violations) + " violations in " + std::to_string(trials) + " trials");
}

bool rho_map(const std::vector<Vector>& zeta, Vector& out) {
  if (zeta.empty()) throw Error(ErrorCode::InvalidArgument, "rho needs at least one component");
  return rho_recursive(zeta, zeta.size(), out);
}

CheckResult cascade_rho_equivalence(std::uint64_t seed, int r, int trials) {
  if (r < 1) throw Error(ErrorCode::InvalidArgument, "r must be >= 1");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double max_diff = 0.0;
  int mismatches = 0;
  for (int trial = 0; trial < trials; ++trial) {
    auto rng = trial_rng(seed, 200 + r, trial);
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 3);
    const double phi = std::pow(10.0, -3.0 + 4.0 * unif(rng));
    // Every fourth tuple is pushed out of the domain at one stage.
    const bool outside = trial % 4 == 3;
    const int bad_stage = static_cast<int>(rng() % static_cast<unsigned>(r));
    std::vector<Vector> zeta;
    Vector prev;
    for (int k = 0; k < r; ++k) {
      const double len = (outside && k == bad_stage) ? 1.0 + 0.5 * unif(rng) : 0.999 * std::cbrt(unif(rng));
      const Vector target = random_unit(rng, m) * len;
      Vector z = k == 0 ? target : Vector(target - (1.0 / (1.0 - prev.squaredNorm())) * prev);
      zeta.push_back(z);
      if (outside && k == bad_stage) {
        // Fill the rest arbitrarily; the tuple is outside D_r from here on.
        for (int j = k + 1; j < r; ++j) zeta.push_back(random_unit(rng, m) * unif(rng));
        break;
      }
      prev = target;
    }
    std::vector<Vector> e_derivs;
    std::vector<Vector> scaled;
    for (const auto& z : zeta) e_derivs.push_back(z / phi);
    for (const auto& e : e_derivs) scaled.push_back(phi * e);

    Vector rho;
    const bool in_rho = rho_map(scaled, rho);
    std::vector<Vector> stages;
    const bool in_cascade = error_cascade_into(phi, e_derivs, stages) == 0;
    if (in_rho != in_cascade) {
      ++mismatches;
      continue;
    }
    if (in_rho) max_diff = std::max(max_diff, (rho - stages.back()).norm());
  }
  const bool pass = mismatches == 0 && max_diff < kAlgebraicSlack;
  return make("cascade_rho_r" + std::to_string(r), pass, kAlgebraicSlack - max_diff, kNaN,
              std::to_string(mismatches) + " domain mismatches, max diff " + fmt(max_diff));
}

std::vector<CheckResult> design_substitution(const DesignParams& d) {
  std::vector<CheckResult> out;
  if (!d.synthesized) return out;
  const ClassConstants& cc = d.cc;
  const double q = d.q;
  const double al = 1.0 / (1.0 - q * q);
  const double a_r = geometric_sum_direct(d.r, al);
  const double m = cc.big_m;
  const double dl = d.delta_loss;
  const double dv = d.delta_avail;
  const double grow = std::exp(cc.beta * dl);
  const double x_ref = d.refs.x_sup;

  auto le = [&](const std::string& name, double lhs, double rhs, bool strict) {
    const double margin = relative_margin(lhs, rhs);
    const bool pass = strict ? margin > -kAlgebraicSlack : margin >= -kAlgebraicSlack;
    out.push_back(make(name, pass, margin, kNaN, "lhs=" + fmt(lhs) + " rhs=" + fmt(rhs)));
  };

  le("Delta1", cc.s * cc.p * m * dl * dl * grow, 1.0, false);
  le("Delta2", cc.s * cc.p * m * m * dl * dl * grow, q / a_r, true);
  le("Delta3", 2.0 * cc.mu * m * dl, 1.0, true);
  const double avail = std::exp(cc.mu * dv);
  const double den1 = 1.0 - cc.mu * m * dl;
  const double den2 = cc.mu * q - cc.mu * cc.s * cc.p * m * m * a_r * dl * dl * grow;
  le("delta1", den1 > 0.0 ? (4.0 * m * m + cc.p * m * dl) / den1 : std::numeric_limits<double>::infinity(), avail,
     false);
  le("delta2",
     den2 > 0.0 ? 2.0 * cc.s * cc.p * m * m * m * a_r * dl * grow / den2 : std::numeric_limits<double>::infinity(),
     avail, false);

  le("eta_star_a", cc.p * dl * avail * d.refs.y_sup, d.eta_star, false);
  le("eta_star_b", (x_ref + 1.0) * std::exp(cc.beta * dl + cc.mu * dv), d.eta_star, false);
  const double den3 = cc.mu * q - cc.s * cc.p * m * m * a_r * dl * grow * (cc.mu * dl + 2.0 * m * std::exp(-cc.mu * dv));
  const double num3 = cc.p * m * a_r * (x_ref * (1.0 + grow) + grow);
  le("eta_star_c",
     num3 == 0.0 ? 0.0 : (den3 > 0.0 ? num3 / den3 : std::numeric_limits<double>::infinity()), d.eta_star, false);

  const double e_bound = x_ref * (1.0 + grow) + grow +
                         cc.s * m * dl * grow * (2.0 * m * std::exp(-cc.mu * dv) + cc.mu * dl) * d.eta_star;
  const double phi0 = 1.0 / (d.funnel.a + d.funnel.c);
  le("phi1_lower", cc.p * m / (cc.mu * d.eta_star), phi0, false);
  le("phi1_upper", phi0, q / (a_r * e_bound), false);
  const double phi_rho = 1.0 / (d.funnel.a * std::exp(-d.funnel.b * d.rho) + d.funnel.c);
  le("phi2", d.gains.chi, phi_rho, false);

  // Judged on the stored 1 - c_k^2, since c_k itself can round to 1.
  double gap_min = d.cert.one_minus_cr_sq;
  for (double g : d.gains.gap) gap_min = std::min(gap_min, g);
  out.push_back(make("gains_below_one", gap_min > 0.0, gap_min, kNaN));
  const bool rho_ok = d.rho > 0.0 && d.rho < dv;
  out.push_back(make("rho_inside_availability", rho_ok, rho_ok ? std::min(d.rho, dv - d.rho) / dv : -1.0, kNaN));
  return out;
}

VerificationReport verify_trace(const Trace& trace, const DesignParams& design, const ClassConstants& cc,
                                double t_end) {
  VerificationReport rep;
  rep.checks.push_back(funnel_containment(trace));
  if (design.synthesized) {
    for (auto& c : input_and_state_bounds(trace, design)) rep.checks.push_back(std::move(c));
  } else {
    rep.checks.push_back(input_zero_on_dropout(trace));
  }
  rep.checks.push_back(internal_envelope_check(trace, cc));
  rep.checks.push_back(integration_complete(trace, t_end));
  return rep;
}

}  // namespace funnelsim
