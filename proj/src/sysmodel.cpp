#include "funnelsim/sysmodel.hpp"

#include <cmath>
#include <sstream>

#include "funnelsim/error.hpp"
#include "funnelsim/log.hpp"

namespace funnelsim {

namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Eigen::Index numerical_rank(const Matrix& a, double rel_tol) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * sv(0)) ++rank;
  return rank;
}

// Walks C A^k B with the same arithmetic path for every caller.
class MarkovSequence {
 public:
  explicit MarkovSequence(const StateSpace& sys) : sys_(sys), akb_(sys.b) {}

  Matrix next() {
    Matrix out = sys_.c * akb_;
    akb_ = sys_.a * akb_;
    return out;
  }

 private:
  const StateSpace& sys_;
  Matrix akb_;
};

}  // namespace

StateSpace::StateSpace(Matrix a_, Matrix b_, Matrix c_)
    : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw Error(ErrorCode::InvalidArgument, "A must be square and non-empty, got " + dims(a));
  if (b.rows() != a.rows() || b.cols() == 0)
    throw Error(ErrorCode::InvalidArgument, "B has shape " + dims(b) + ", A is " + dims(a));
  if (c.cols() != a.rows() || c.rows() != b.cols())
    throw Error(ErrorCode::InvalidArgument,
                "C has shape " + dims(c) + ", expected " + std::to_string(b.cols()) + "x" +
                    std::to_string(a.rows()));
  if (b.cols() > a.rows())
    throw Error(ErrorCode::InvalidArgument, "more inputs than states");
  if (!a.allFinite() || !b.allFinite() || !c.allFinite())
    throw Error(ErrorCode::InvalidArgument, "state-space matrices must be finite");
}

double markov_zero_tolerance(const StateSpace& sys, int k) {
  return 1e-10 * (1.0 + std::pow(spectral_norm(sys.a), k) * spectral_norm(sys.b) * spectral_norm(sys.c));
}

std::vector<Matrix> markov_parameters(const StateSpace& sys, int count) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "markov_parameters needs count >= 1");
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(count));
  MarkovSequence seq(sys);
  for (int k = 0; k < count; ++k) out.push_back(seq.next());
  return out;
}

RelativeDegree relative_degree(const StateSpace& sys) {
  MarkovSequence seq(sys);
  const int n = static_cast<int>(sys.n());
  for (int k = 0; k < n; ++k) {
    Matrix mk = seq.next();
    const double norm = spectral_norm(mk);
    const double tol = markov_zero_tolerance(sys, k);
    if (norm < tol) continue;
    if (norm < 100.0 * tol) {
      std::ostringstream msg;
      msg << "||CA^" << k << "B|| = " << norm << " is within two decades of the zero tolerance " << tol;
      throw Error(ErrorCode::AmbiguousZero, msg.str());
    }
    const double smin = smallest_singular_value(mk);
    if (smin <= 100.0 * tol) {
      std::ostringstream msg;
      msg << "first non-zero Markov parameter CA^" << k << "B is singular (sigma_min = " << smin << ")";
      throw Error(ErrorCode::NoRelativeDegree, msg.str());
    }
    return RelativeDegree{k + 1, std::move(mk)};
  }
  throw Error(ErrorCode::NoRelativeDegree, "all Markov parameters up to CA^(n-1)B vanish");
}

NormalForm to_normal_form(const StateSpace& sys) {
  const RelativeDegree rd = relative_degree(sys);
  const Eigen::Index m = sys.m();
  const Eigen::Index rm = rd.r * m;
  if (rm > sys.n())
    throw Error(ErrorCode::TransformSingular, "r*m exceeds the state dimension");
  Matrix controllability(sys.n(), rm);
  Matrix akb = sys.b;
  for (int i = 0; i < rd.r; ++i) {
    controllability.middleCols(i * m, m) = akb;
    akb = sys.a * akb;
  }
  return to_normal_form(sys, left_null_space_rows(controllability));
}

NormalForm to_normal_form(const StateSpace& sys, const Matrix& internal_rows) {
  const RelativeDegree rd = relative_degree(sys);
  const int r = rd.r;
  const Eigen::Index m = sys.m();
  const Eigen::Index n = sys.n();
  const Eigen::Index rm = r * m;
  const Eigen::Index k = n - rm;
  if (k < 0) throw Error(ErrorCode::TransformSingular, "r*m exceeds the state dimension");
  if (internal_rows.rows() != k || (k > 0 && internal_rows.cols() != n))
    throw Error(ErrorCode::InvalidArgument,
                "internal rows have shape " + dims(internal_rows) + ", expected " +
                    std::to_string(k) + "x" + std::to_string(n));

  Matrix observability(rm, n);
  Matrix controllability(n, rm);
  Matrix ca = sys.c;
  Matrix akb = sys.b;
  for (int i = 0; i < r; ++i) {
    observability.middleRows(i * m, m) = ca;
    controllability.middleCols(i * m, m) = akb;
    ca = ca * sys.a;
    akb = sys.a * akb;
  }
  const Matrix& car = ca;  // C A^r

  if (k > 0) {
    const double leak = spectral_norm(internal_rows * controllability);
    const double scale = spectral_norm(internal_rows) * spectral_norm(controllability);
    if (leak > 1e-9 * std::max(1.0, scale))
      throw Error(ErrorCode::InvalidArgument,
                  "internal rows do not annihilate [B, AB, ...]: residual " + std::to_string(leak));
  }

  Matrix u(n, n);
  u.topRows(rm) = observability;
  if (k > 0) u.bottomRows(k) = internal_rows;
  const Eigen::Index rank = numerical_rank(u, 1e-12);
  if (rank < n)
    throw Error(ErrorCode::TransformSingular,
                "transformation has rank " + std::to_string(rank) + " of " + std::to_string(n) +
                    " (deficiency " + std::to_string(n - rank) + ")");
  const Matrix u_inv = u.fullPivLu().inverse();
  const Matrix chain_cols = u_inv.leftCols(rm);
  const Matrix eta_cols = u_inv.rightCols(k);

  NormalForm nf;
  nf.r = r;
  nf.m = m;
  nf.n = n;
  const Matrix top = car * chain_cols;
  for (int i = 0; i < r; ++i) nf.r_blocks.push_back(top.middleCols(i * m, m));
  nf.s = car * eta_cols;
  nf.gamma = rd.gamma;
  if (k > 0) {
    const Matrix eta_a = internal_rows * sys.a;
    nf.q = eta_a * eta_cols;
    const Matrix coupling = eta_a * chain_cols;
    nf.p = coupling.leftCols(m);
    const double stray = spectral_norm(coupling.rightCols(rm - m));
    if (stray > 1e-8 * std::max(1.0, spectral_norm(coupling)))
      throw Error(ErrorCode::TransformSingular,
                  "internal dynamics depend on output derivatives (residual " + std::to_string(stray) + ")");
  } else {
    nf.q = Matrix(0, 0);
    nf.p = Matrix(0, m);
  }
  nf.u = u;
  nf.validate();
  return nf;
}

void NormalForm::validate() const {
  if (r < 1 || m < 1) throw Error(ErrorCode::InvalidArgument, "normal form needs r >= 1 and m >= 1");
  if (n < r * m) throw Error(ErrorCode::InvalidArgument, "normal form needs n >= r*m");
  const Eigen::Index k = internal_dim();
  if (static_cast<int>(r_blocks.size()) != r)
    throw Error(ErrorCode::InvalidArgument, "expected " + std::to_string(r) + " R blocks");
  for (const auto& block : r_blocks)
    if (block.rows() != m || block.cols() != m)
      throw Error(ErrorCode::InvalidArgument, "R block has shape " + dims(block));
  if (gamma.rows() != m || gamma.cols() != m)
    throw Error(ErrorCode::InvalidArgument, "Gamma has shape " + dims(gamma));
  if (s.rows() != m || s.cols() != k) throw Error(ErrorCode::InvalidArgument, "S has shape " + dims(s));
  if (p.rows() != k || p.cols() != m) throw Error(ErrorCode::InvalidArgument, "P has shape " + dims(p));
  if (q.rows() != k || q.cols() != k) throw Error(ErrorCode::InvalidArgument, "Q has shape " + dims(q));
  if (smallest_singular_value(gamma) <= 1e-14 * std::max(1.0, spectral_norm(gamma)))
    throw Error(ErrorCode::InvalidArgument, "Gamma is singular");
  if (u && (u->rows() != n || u->cols() != n))
    throw Error(ErrorCode::InvalidArgument, "U has shape " + dims(*u));
}

StateSpace NormalForm::realization() const {
  const Eigen::Index rm = r * m;
  const Eigen::Index k = internal_dim();
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < r; ++i) a.block(i * m, (i + 1) * m, m, m).setIdentity();
  for (int i = 0; i < r; ++i) a.block((r - 1) * m, i * m, m, m) = r_blocks[static_cast<std::size_t>(i)];
  if (k > 0) {
    a.block((r - 1) * m, rm, m, k) = s;
    a.block(rm, 0, k, m) = p;
    a.block(rm, rm, k, k) = q;
  }
  Matrix b = Matrix::Zero(n, m);
  b.block((r - 1) * m, 0, m, m) = gamma;
  Matrix c = Matrix::Zero(m, n);
  c.leftCols(m).setIdentity();
  return StateSpace(std::move(a), std::move(b), std::move(c));
}

Vector NormalForm::to_normal_coordinates(const Vector& x) const {
  if (!u) throw Error(ErrorCode::InvalidArgument, "normal form has no transformation matrix");
  if (x.size() != n) throw Error(ErrorCode::InvalidArgument, "state has wrong dimension");
  return (*u) * x;
}

DecayEnvelope decay_envelope(const Matrix& q) {
  if (q.size() == 0) return DecayEnvelope{0.0, 1.0};
  if (q.rows() != q.cols()) throw Error(ErrorCode::InvalidArgument, "Q must be square");
  const ComplexVector ev = eigenvalues(q);
  const double tol = 1e-10 * std::max(1.0, spectral_norm(q));
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i).real() >= -tol) {
      std::ostringstream msg;
      msg << "eigenvalue " << ev(i).real() << (ev(i).imag() >= 0 ? "+" : "") << ev(i).imag()
          << "i is not in the open left half-plane";
      throw Error(ErrorCode::NotHurwitz, msg.str());
    }
  }
  const Matrix k = solve_lyapunov(q);
  const double nk = spectral_norm(k);
  const double nk_inv = spectral_norm(k.inverse());
  return DecayEnvelope{std::sqrt(nk_inv * nk), 1.0 / (2.0 * nk)};
}

ClassConstants class_constants(const NormalForm& nf, std::optional<double> beta_override) {
  nf.validate();
  ClassConstants cc;
  cc.s = spectral_norm(nf.s);
  cc.p = spectral_norm(nf.p);
  const DecayEnvelope env = decay_envelope(nf.q);
  cc.big_m = env.big_m;
  cc.mu = env.mu;
  for (const auto& block : nf.r_blocks) cc.sum_r_norms += spectral_norm(block);
  cc.beta = cc.beta_gronwall();
  if (beta_override) {
    if (!std::isfinite(*beta_override) || *beta_override < cc.beta_assumption_min())
      throw Error(ErrorCode::InvalidArgument,
                  "beta override " + std::to_string(*beta_override) + " is below the class minimum " +
                      std::to_string(cc.beta_assumption_min()));
    if (*beta_override < cc.beta)
      log::warn("beta override undercuts 1 + sum||R_i|| + spM/mu; the coasting estimate may not hold");
    cc.beta = *beta_override;
  }

  const Matrix sym = 0.5 * (nf.gamma + nf.gamma.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  const Vector ev = solver.eigenvalues();
  const double zero_tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() > zero_tol) {
    cc.sign = 1;
    cc.gamma_min = ev.minCoeff();
  } else if (ev.maxCoeff() < -zero_tol) {
    cc.sign = -1;
    cc.gamma_min = -ev.maxCoeff();
  } else {
    std::ostringstream msg;
    msg << "symmetric part of Gamma has eigenvalues in [" << ev.minCoeff() << ", " << ev.maxCoeff() << "]";
    throw Error(ErrorCode::IndefiniteGamma, msg.str());
  }
  return cc;
}

}  // namespace funnelsim
