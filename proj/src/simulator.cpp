#include "funnelsim/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "funnelsim/error.hpp"
#include "funnelsim/log.hpp"

namespace funnelsim {

StateSpace mass_on_car(double m1, double m2, double k, double d, double theta) {
  for (double v : {m1, m2, k, d, theta})
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "mass-on-car parameters must be finite");
  const double cth = std::cos(theta);
  const double det = (m1 + m2) * m2 - m2 * m2 * cth * cth;
  const double scale = std::max({1.0, std::abs(m1), std::abs(m2)});
  if (!(std::abs(det) > 1e-12 * scale * scale))
    throw Error(ErrorCode::SingularMassMatrix, "mass matrix determinant is " + std::to_string(det));
  // Inverse mass matrix applied to (u, -k s - d s').
  const double i11 = m2 / det;
  const double i12 = -m2 * cth / det;
  const double i22 = (m1 + m2) / det;
  Matrix a = Matrix::Zero(4, 4);
  a(0, 2) = 1.0;
  a(1, 3) = 1.0;
  a(2, 1) = -i12 * k;
  a(2, 3) = -i12 * d;
  a(3, 1) = -i22 * k;
  a(3, 3) = -i22 * d;
  Matrix b = Matrix::Zero(4, 1);
  b(2, 0) = i11;
  b(3, 0) = i12;
  Matrix c = Matrix::Zero(1, 4);
  c(0, 0) = 1.0;
  c(0, 1) = cth;
  return StateSpace(a, b, c);
}

Matrix mass_on_car_internal_rows(double m1, double m2, double k, double d, double theta) {
  (void)m1;
  (void)k;
  const double cth = std::cos(theta);
  const double w = m2 * std::sin(theta) * std::sin(theta);
  if (!(w > 0.0)) throw Error(ErrorCode::InvalidArgument, "physical internal coordinates need m2 sin^2(theta) > 0");
  const double b = m2 * cth / w;
  const double g = d * b / w;
  Matrix n(2, 4);
  n << b, 1.0 + b * cth, 0.0, 0.0,  //
      -g, -g * cth, b, 1.0 + b * cth;
  return n;
}

NormalForm mass_on_car_normal_form(double m1, double m2, double k, double d, double theta) {
  return to_normal_form(mass_on_car(m1, m2, k, d, theta), mass_on_car_internal_rows(m1, m2, k, d, theta));
}

bool closed_loop_rhs(const NormalForm& nf, int sign, double phi, int a, double t, const Vector& state,
                     const ReferenceSignal& y_ref, Vector& dstate, double limit) {
  const Eigen::Index m = nf.m;
  const int r = nf.r;
  const Eigen::Index rm = r * m;
  const Eigen::Index k = nf.internal_dim();
  dstate.resize(state.size());

  Vector u = Vector::Zero(m);
  if (a == 1) {
    std::vector<Vector> e_derivs;
    e_derivs.reserve(r);
    for (int i = 0; i < r; ++i) e_derivs.push_back(state.segment(i * m, m) - y_ref.derivative(i, t));
    std::vector<Vector> stages;
    if (error_cascade_into(phi, e_derivs, stages, limit) != 0) return false;
    u = -static_cast<double>(sign) * gains::alpha(stages.back().squaredNorm()) * stages.back();
  }

  if (r > 1) dstate.head(rm - m) = state.segment(m, rm - m);
  Vector top = nf.gamma * u;
  for (int i = 0; i < r; ++i) top.noalias() += nf.r_blocks[i] * state.segment(i * m, m);
  if (k > 0) {
    top.noalias() += nf.s * state.tail(k);
    dstate.tail(k) = nf.q * state.tail(k) + nf.p * state.head(m);
  }
  dstate.segment(rm - m, m) = top;
  return true;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense output (Hairer's contd5).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct Segment {
  double t0 = 0.0;
  double t1 = 0.0;
  int a = 1;
  double tau = 0.0;
};

class Loop {
 public:
  Loop(const NormalForm& nf, int sign, const ReferenceSignal& ref, const FunnelSpec* funnel, double limit)
      : nf_(nf), sign_(sign), ref_(ref), funnel_(funnel), limit_(limit) {}

  void set_segment(const Segment& seg) { seg_ = seg; }
  const Segment& segment() const { return seg_; }

  double phi(double t) const {
    if (seg_.a == 0 || funnel_ == nullptr) return 0.0;
    return funnel_->value(t - seg_.tau);
  }

  bool rhs(double t, const Vector& x, Vector& dx) {
    ++evaluations;
    return closed_loop_rhs(nf_, sign_, phi(t), seg_.a, t, x, ref_, dx, limit_);
  }

  // Full sample; returns false when a = 1 and the state is outside the domain.
  bool sample(double t, const Vector& x, TraceSample& s) const {
    const Eigen::Index m = nf_.m;
    const int r = nf_.r;
    const Eigen::Index k = nf_.internal_dim();
    s.t = t;
    s.a = seg_.a;
    s.tau = seg_.a == 1 ? seg_.tau : t;
    s.phi = phi(t);
    s.chain = x.head(r * m);
    s.y = x.head(m);
    std::vector<Vector> e_derivs;
    for (int i = 0; i < r; ++i) e_derivs.push_back(x.segment(i * m, m) - ref_.derivative(i, t));
    s.e_norm = e_derivs[0].norm();
    s.e_stage.assign(r, 0.0);
    s.u = Vector::Zero(m);
    bool ok = true;
    if (seg_.a == 1) {
      std::vector<Vector> stages;
      ok = error_cascade_into(s.phi, e_derivs, stages, limit_) == 0;
      for (std::size_t i = 0; i < stages.size(); ++i) s.e_stage[i] = stages[i].norm();
      if (ok) s.u = -static_cast<double>(sign_) * gains::alpha(stages.back().squaredNorm()) * stages.back();
    }
    s.u_norm = s.u.norm();
    s.eta = k > 0 ? Vector(x.tail(k)) : Vector();
    s.eta_norm = k > 0 ? s.eta.norm() : 0.0;
    return ok;
  }

  std::size_t evaluations = 0;

 private:
  const NormalForm& nf_;
  int sign_;
  const ReferenceSignal& ref_;
  const FunnelSpec* funnel_;
  double limit_;
  Segment seg_;
};

std::string describe_state(const Loop& loop, double t, const Vector& x) {
  TraceSample s;
  loop.sample(t, x, s);
  std::ostringstream os;
  os.precision(10);
  os << "t = " << t << ", ||e_r|| = " << (s.e_stage.empty() ? 0.0 : s.e_stage.back()) << ", phi = " << s.phi;
  return os.str();
}

class Dopri {
 public:
  Dopri(Loop& loop, const SimOptions& opts, Trace& trace) : loop_(loop), opts_(opts), trace_(trace) {}

  void run(const Segment& seg, Vector& x) {
    loop_.set_segment(seg);
    double t = seg.t0;
    const Eigen::Index n = x.size();
    std::array<Vector, 7> k;
    for (auto& v : k) v.resize(n);
    Vector xs(n), x_new(n), err(n);

    if (!loop_.rhs(t, x, k[0])) {
      TraceSample s;
      loop_.sample(t, x, s);
      int stage = 1;
      while (stage <= static_cast<int>(s.e_stage.size()) && s.e_stage[stage - 1] < 1.0 - opts_.domain_margin) ++stage;
      throw FunnelViolationError(stage, stage <= static_cast<int>(s.e_stage.size()) ? s.e_stage[stage - 1] : 1.0,
                                 "when the measurement returns (" + describe_state(loop_, t, x) + ")");
    }
    double h = std::min(1e-6, seg.t1 - seg.t0);
    std::vector<TraceSample> pending;

    while (t < seg.t1) {
      if (trace_.stats.accepted + trace_.stats.rejected + trace_.stats.domain_rejections > opts_.max_steps)
        throw Error(ErrorCode::StepUnderflow, "step budget exhausted at " + describe_state(loop_, t, x));
      bool last = false;
      if (t + h >= seg.t1 || seg.t1 - (t + h) <= 1e-13 * std::max(1.0, std::abs(seg.t1))) {
        h = seg.t1 - t;
        last = true;
      }
      const double t_new = last ? seg.t1 : t + h;

      bool in_domain = true;
      xs = x + h * a21 * k[0];
      in_domain = in_domain && loop_.rhs(t + c2 * h, xs, k[1]);
      if (in_domain) {
        xs = x + h * (a31 * k[0] + a32 * k[1]);
        in_domain = loop_.rhs(t + c3 * h, xs, k[2]);
      }
      if (in_domain) {
        xs = x + h * (a41 * k[0] + a42 * k[1] + a43 * k[2]);
        in_domain = loop_.rhs(t + c4 * h, xs, k[3]);
      }
      if (in_domain) {
        xs = x + h * (a51 * k[0] + a52 * k[1] + a53 * k[2] + a54 * k[3]);
        in_domain = loop_.rhs(t + c5 * h, xs, k[4]);
      }
      if (in_domain) {
        xs = x + h * (a61 * k[0] + a62 * k[1] + a63 * k[2] + a64 * k[3] + a65 * k[4]);
        in_domain = loop_.rhs(t + h, xs, k[5]);
      }
      if (in_domain) {
        x_new = x + h * (a71 * k[0] + a73 * k[2] + a74 * k[3] + a75 * k[4] + a76 * k[5]);
        in_domain = loop_.rhs(t_new, x_new, k[6]);
      }
      if (!in_domain) {
        ++trace_.stats.domain_rejections;
        h *= 0.25;
        check_underflow(h, t, x, seg);
        continue;
      }

      err = h * (e1 * k[0] + e3 * k[2] + e4 * k[3] + e5 * k[4] + e6 * k[5] + e7 * k[6]);
      double sum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double sc = opts_.atol + opts_.rtol * std::max(std::abs(x(i)), std::abs(x_new(i)));
        const double q = err(i) / sc;
        sum += q * q;
      }
      const double enorm = n > 0 ? std::sqrt(sum / static_cast<double>(n)) : 0.0;
      if (!(enorm <= 1.0)) {
        ++trace_.stats.rejected;
        const double fac = std::isfinite(enorm) ? std::max(0.2, 0.9 * std::pow(enorm, -0.2)) : 0.2;
        h *= fac;
        check_underflow(h, t, x, seg);
        continue;
      }

      // Grid samples inside the step come from the dense output; one leaving
      // the domain rejects the step like any other violation.
      pending.clear();
      if (!dense_samples(t, t_new, h, x, x_new, k, last, pending)) {
        ++trace_.stats.domain_rejections;
        h *= 0.25;
        check_underflow(h, t, x, seg);
        continue;
      }

      ++trace_.stats.accepted;
      const double used = t_new - t;
      if (trace_.stats.smallest_step == 0.0 || used < trace_.stats.smallest_step) trace_.stats.smallest_step = used;
      trace_.stats.largest_step = std::max(trace_.stats.largest_step, used);
      for (auto& s : pending) trace_.samples.push_back(std::move(s));
      if (opts_.record_steps || last) {
        TraceSample s;
        loop_.sample(t_new, x_new, s);
        trace_.samples.push_back(std::move(s));
      }
      x = x_new;
      k[0] = k[6];
      t = t_new;
      const double grow = enorm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0);
      h *= grow;
    }
  }

 private:
  void check_underflow(double h, double t, const Vector& x, const Segment& seg) const {
    if (h < opts_.h_min && seg.t1 - t > opts_.h_min)
      throw Error(ErrorCode::StepUnderflow, "step " + std::to_string(h) + " below " + std::to_string(opts_.h_min) +
                                                " at " + describe_state(loop_, t, x));
  }

  bool dense_samples(double t, double t_new, double h, const Vector& x, const Vector& x_new,
                     const std::array<Vector, 7>& k, bool last, std::vector<TraceSample>& out) {
    if (!(opts_.output_dt > 0.0)) return true;
    const auto first = static_cast<long long>(std::floor(t / opts_.output_dt)) + 1;
    if (first * opts_.output_dt > t_new) return true;
    const Vector diff = x_new - x;
    const Vector bspl = h * k[0] - diff;
    const Vector r4 = diff - h * k[6] - bspl;
    const Vector r5 = h * (d1 * k[0] + d3 * k[2] + d4 * k[3] + d5 * k[4] + d6 * k[5] + d7 * k[6]);
    for (long long j = first;; ++j) {
      const double g = static_cast<double>(j) * opts_.output_dt;
      if (g > t_new) break;
      if (g <= t) continue;
      if (g == t_new) {
        if (!(opts_.record_steps || last)) {
          TraceSample s;
          loop_.sample(t_new, x_new, s);
          out.push_back(std::move(s));
        }
        break;
      }
      const double th = (g - t) / h;
      const double th1 = 1.0 - th;
      const Vector xg = x + th * (diff + th1 * (bspl + th * (r4 + th1 * r5)));
      TraceSample s;
      if (!loop_.sample(g, xg, s)) return false;
      out.push_back(std::move(s));
    }
    return true;
  }

  Loop& loop_;
  const SimOptions& opts_;
  Trace& trace_;
};

Vector stack_chain(const std::vector<Vector>& parts) {
  Eigen::Index n = 0;
  for (const auto& p : parts) n += p.size();
  Vector out(n);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

Trace empty_trace(const NormalForm& nf) {
  Trace tr;
  tr.r = nf.r;
  tr.m = nf.m;
  tr.k = nf.internal_dim();
  return tr;
}

}  // namespace

Trace integrate(const NormalForm& nf, const ClassConstants& cc, const DesignParams& design,
                const AvailabilitySchedule& sched, const ReferenceSignal& y_ref, const InitialConditions& ic,
                const SimOptions& opts) {
  nf.validate();
  if (y_ref.dim() != nf.m) throw Error(ErrorCode::InvalidArgument, "reference dimension differs from m");
  if (static_cast<int>(ic.y_derivs.size()) != nf.r || ic.eta.size() != nf.internal_dim())
    throw Error(ErrorCode::InvalidArgument, "initial conditions do not match the normal form");
  for (const auto& v : ic.y_derivs)
    if (v.size() != nf.m) throw Error(ErrorCode::InvalidArgument, "initial output derivative has wrong dimension");
  if (!(opts.rtol > 0.0) || !(opts.atol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");

  Vector x(nf.n);
  x.head(nf.r * nf.m) = stack_chain(ic.y_derivs);
  if (nf.internal_dim() > 0) x.tail(nf.internal_dim()) = ic.eta;

  Trace tr = empty_trace(nf);
  Loop loop(nf, cc.sign, y_ref, &design.funnel, 1.0 - opts.domain_margin);

  std::vector<double> cuts{0.0};
  for (double e : sched.event_times()) cuts.push_back(e);
  cuts.push_back(sched.t_end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Sample at t = 0 with the availability there.
  Segment first{0.0, 0.0, sched.availability(0.0), 0.0};
  loop.set_segment(first);
  TraceSample s0;
  if (!loop.sample(0.0, x, s0))
    throw FunnelViolationError(1, s0.e_stage.empty() ? 0.0 : s0.e_stage.front(), "at t = 0");
  tr.samples.push_back(s0);

  Dopri solver(loop, opts, tr);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Segment seg{cuts[i], cuts[i + 1], sched.availability(cuts[i + 1]), 0.0};
    if (!(seg.t1 > seg.t0)) continue;
    seg.tau = seg.a == 1 ? sched.tau(seg.t1) : seg.t1;
    log::debug("segment [" + std::to_string(seg.t0) + ", " + std::to_string(seg.t1) + "] a = " + std::to_string(seg.a));
    solver.run(seg, x);
  }
  tr.stats.rhs_evaluations = loop.evaluations;
  log::info("integration done: " + std::to_string(tr.stats.accepted) + " steps, " +
            std::to_string(tr.stats.rejected) + " rejected, " + std::to_string(tr.stats.domain_rejections) +
            " domain rejections");
  return tr;
}

Trace coasting_run(const NormalForm& nf, const Vector& chain0, const Vector& eta0, double t0, double t1,
                   const SimOptions& opts) {
  nf.validate();
  if (!(t1 > t0)) throw Error(ErrorCode::InvalidArgument, "coasting needs t1 > t0");
  if (chain0.size() != nf.r * nf.m || eta0.size() != nf.internal_dim())
    throw Error(ErrorCode::InvalidArgument, "coasting initial state has wrong dimension");
  Vector x(nf.n);
  x.head(nf.r * nf.m) = chain0;
  if (nf.internal_dim() > 0) x.tail(nf.internal_dim()) = eta0;

  const ReferenceSignal zero = ReferenceSignal::constant(Vector::Zero(nf.m));
  Trace tr = empty_trace(nf);
  Loop loop(nf, 1, zero, nullptr, 1.0);
  Segment seg{t0, t1, 0, t0};
  loop.set_segment(seg);
  TraceSample s0;
  loop.sample(t0, x, s0);
  tr.samples.push_back(s0);
  Dopri solver(loop, opts, tr);
  solver.run(seg, x);
  tr.stats.rhs_evaluations = loop.evaluations;
  return tr;
}

}  // namespace funnelsim
