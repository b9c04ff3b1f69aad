#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "funnelsim/design.hpp"
#include "funnelsim/simulator.hpp"
#include "funnelsim/sysmodel.hpp"

namespace testutil {

using funnelsim::Matrix;
using funnelsim::Vector;

inline const double kQuarterPi = std::numbers::pi / 4.0;

inline funnelsim::StateSpace car() { return funnelsim::mass_on_car(4, 1, 2, 1, kQuarterPi); }
inline funnelsim::NormalForm car_nf() { return funnelsim::mass_on_car_normal_form(4, 1, 2, 1, kQuarterPi); }

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

/// Chain-only normal form y^(r) = sum R_i y^(i-1) + Gamma u.
inline funnelsim::NormalForm chain_nf(int r, const Matrix& gamma, std::vector<Matrix> r_blocks = {}) {
  funnelsim::NormalForm nf;
  nf.r = r;
  nf.m = gamma.rows();
  nf.n = r * nf.m;
  if (r_blocks.empty()) r_blocks.assign(static_cast<std::size_t>(r), Matrix::Zero(nf.m, nf.m));
  nf.r_blocks = std::move(r_blocks);
  nf.s = Matrix(nf.m, 0);
  nf.p = Matrix(0, nf.m);
  nf.q = Matrix(0, 0);
  nf.gamma = gamma;
  return nf;
}

/// Operator 2-norm via SVD; independent of the library's Gram-eigenvalue route.
inline double norm2(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
}

inline Matrix expm(const Matrix& a) { return a.exp(); }

/// Random Hurwitz matrix: -(X X^T + 0.3 I) + skew part.
inline Matrix random_hurwitz(std::mt19937_64& rng, Eigen::Index k) {
  std::normal_distribution<double> nd;
  Matrix x(k, k), w(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) x(i, j) = nd(rng), w(i, j) = nd(rng);
  return -(x * x.transpose() / static_cast<double>(k) + 0.3 * Matrix::Identity(k, k)) + 0.5 * (w - w.transpose());
}

struct RandomPlant {
  funnelsim::NormalForm nf;  // as generated, chain coordinates
  funnelsim::StateSpace ss;  // after a random similarity transform
};

/// Random minimum-phase plant with n <= 6, r <= 3, m <= 2.
inline RandomPlant random_plant(std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> r_dist(1, 3);
  funnelsim::NormalForm nf;
  nf.r = r_dist(rng);
  nf.m = (nf.r <= 2 && rng() % 2 == 0) ? 2 : 1;
  const Eigen::Index rm = nf.r * nf.m;
  const Eigen::Index k = static_cast<Eigen::Index>(rng() % static_cast<unsigned>(6 - rm + 1));
  nf.n = rm + k;
  const Eigen::Index m = nf.m;
  for (int i = 0; i < nf.r; ++i) {
    Matrix ri(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) ri(a, b) = 0.3 * nd(rng);
    nf.r_blocks.push_back(ri);
  }
  nf.s = Matrix(m, k);
  nf.p = Matrix(k, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < k; ++b) nf.s(a, b) = 0.5 * nd(rng), nf.p(b, a) = 0.5 * nd(rng);
  nf.q = random_hurwitz(rng, k);
  Matrix g(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) g(a, b) = (a == b ? 1.0 + std::abs(nd(rng)) : 0.2 * nd(rng));
  nf.gamma = g;
  const funnelsim::StateSpace chain = nf.realization();
  Matrix t(nf.n, nf.n);
  for (Eigen::Index a = 0; a < nf.n; ++a)
    for (Eigen::Index b = 0; b < nf.n; ++b) t(a, b) = (a == b ? 2.0 : 0.0) + 0.4 * nd(rng);
  const Matrix ti = t.inverse();
  RandomPlant out;
  out.nf = nf;
  out.ss = funnelsim::StateSpace(ti * chain.a * t, ti * chain.b, chain.c * t);
  return out;
}

}  // namespace testutil
