#include "funnelsim/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "funnelsim/error.hpp"

namespace funnelsim {

namespace {

Eigen::VectorXd gram_eigenvalues(const Matrix& a) {
  const Matrix gram = a.cols() <= a.rows() ? Matrix(a.transpose() * a) : Matrix(a * a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

}  // namespace

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const Eigen::VectorXd ev = gram_eigenvalues(a);
  return std::sqrt(std::max(0.0, ev.maxCoeff()));
}

double smallest_singular_value(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const Eigen::VectorXd ev = gram_eigenvalues(a);
  return std::sqrt(std::max(0.0, ev.minCoeff()));
}

ComplexVector eigenvalues(const Matrix& a) {
  if (a.size() == 0) return ComplexVector();
  Eigen::EigenSolver<Matrix> solver(a, false);
  return solver.eigenvalues();
}

Matrix solve_lyapunov(const Matrix& q) {
  const Eigen::Index k = q.rows();
  if (q.cols() != k) throw Error(ErrorCode::InvalidArgument, "Lyapunov solve needs a square matrix");
  if (k == 0) return Matrix();
  // vec(K Q + Q^T K) = (Q^T (x) I + I (x) Q^T) vec(K), column-major vec.
  const Eigen::Index n = k * k;
  Matrix op = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < k; ++i) {
      const Eigen::Index row = j * k + i;  // entry (i, j) of K Q + Q^T K
      for (Eigen::Index l = 0; l < k; ++l) {
        op(row, l * k + i) += q(l, j);  // sum_l K(i,l) Q(l,j)
        op(row, j * k + l) += q(l, i);  // sum_l Q(l,i) K(l,j)
      }
    }
  }
  Vector rhs = Vector::Zero(n);
  for (Eigen::Index i = 0; i < k; ++i) rhs(i * k + i) = -1.0;
  const Vector vec_k = op.fullPivLu().solve(rhs);
  Matrix sol = Eigen::Map<const Matrix>(vec_k.data(), k, k);
  return 0.5 * (sol + sol.transpose());
}

Matrix left_null_space_rows(const Matrix& a, double rank_tol) {
  const Eigen::Index n = a.rows();
  const Eigen::Index c = a.cols();
  if (c == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double scale = sv.size() > 0 ? sv(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rank_tol * std::max(1.0, scale)) ++rank;
  if (rank < c) {
    throw Error(ErrorCode::TransformSingular,
                "column block has rank " + std::to_string(rank) + " < " + std::to_string(c));
  }
  return svd.matrixU().rightCols(n - c).transpose();
}

}  // namespace funnelsim
