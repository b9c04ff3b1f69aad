#pragma once

#include <Eigen/Dense>

namespace funnelsim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

/// Induced 2-norm from the largest eigenvalue of the Gram matrix. Empty -> 0.
double spectral_norm(const Matrix& a);

/// Smallest singular value (sqrt of the smallest Gram eigenvalue). Empty -> 0.
double smallest_singular_value(const Matrix& a);

ComplexVector eigenvalues(const Matrix& a);

/// Solves K Q + Q^T K = -I for symmetric K through the Kronecker form.
/// Q must be Hurwitz for the solution to be positive definite.
Matrix solve_lyapunov(const Matrix& q);

/// Orthonormal basis (as rows) of the left null space of a tall matrix of full
/// column rank; rows N satisfy N * a = 0 and N * N^T = I.
Matrix left_null_space_rows(const Matrix& a, double rank_tol = 1e-12);

}  // namespace funnelsim
