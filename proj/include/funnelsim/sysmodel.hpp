#pragma once

#include <optional>
#include <vector>

#include "funnelsim/linalg.hpp"

namespace funnelsim {

/// x' = A x + B u, y = C x with square input/output dimension m.
struct StateSpace {
  Matrix a;
  Matrix b;
  Matrix c;

  StateSpace() = default;
  StateSpace(Matrix a_, Matrix b_, Matrix c_);

  Eigen::Index n() const { return a.rows(); }
  Eigen::Index m() const { return b.cols(); }
};

/// Byrnes-Isidori form
///   y^(r) = sum_i R_i y^(i-1) + S eta + Gamma u,   eta' = Q eta + P y,
/// together with the transformation (y, ..., y^(r-1), eta) = U x when derived
/// from a state-space model.
struct NormalForm {
  int r = 1;
  Eigen::Index m = 1;
  Eigen::Index n = 1;
  std::vector<Matrix> r_blocks;  // R_1 .. R_r, each m x m
  Matrix s;                      // m x (n - rm)
  Matrix p;                      // (n - rm) x m
  Matrix q;                      // (n - rm) x (n - rm)
  Matrix gamma;                  // m x m
  std::optional<Matrix> u;       // n x n

  Eigen::Index internal_dim() const { return n - r * m; }
  bool trivial_internal_dynamics() const { return internal_dim() == 0; }

  /// Checks dimensions and invertibility of Gamma.
  void validate() const;

  /// Realization in chain coordinates: state (y, y', ..., y^(r-1), eta).
  StateSpace realization() const;

  /// Splits a full state x into chain and eta coordinates via U.
  Vector to_normal_coordinates(const Vector& x) const;
};

/// Constants of the system class.
struct ClassConstants {
  double big_m = 0.0;   // decay amplitude M
  double mu = 1.0;      // decay rate
  double s = 0.0;       // ||S||
  double p = 0.0;       // ||P||
  double beta = 1.0;    // Gronwall rate
  double gamma_min = 0.0;
  int sign = 1;
  double sum_r_norms = 0.0;

  /// beta lower limit of the system-class assumption: sum ||R_i|| + (spM - mu)/mu.
  double beta_assumption_min() const { return sum_r_norms + (s * p * big_m - mu) / mu; }
  /// Bracket the coasting estimate needs: 1 + sum ||R_i|| + spM/mu.
  double beta_gronwall() const { return 1.0 + sum_r_norms + s * p * big_m / mu; }
};

struct RelativeDegree {
  int r = 0;
  Matrix gamma;
};

struct DecayEnvelope {
  double big_m = 0.0;
  double mu = 1.0;
};

/// Zero test for Markov parameters: ||C A^k B|| < 1e-10 (1 + ||A||^k ||B|| ||C||).
double markov_zero_tolerance(const StateSpace& sys, int k);

RelativeDegree relative_degree(const StateSpace& sys);

/// Constructs the normal form with U = [C; CA; ...; CA^(r-1); N] where the rows
/// of N are an orthonormal basis of the left null space of [B, AB, ..., A^(r-1)B].
NormalForm to_normal_form(const StateSpace& sys);

/// Same construction with caller-supplied internal rows N (requires N [B .. A^(r-1)B] = 0).
NormalForm to_normal_form(const StateSpace& sys, const Matrix& internal_rows);

/// C A^k B for k = 0 .. count-1.
std::vector<Matrix> markov_parameters(const StateSpace& sys, int count);

/// (M, mu) with ||e^{Qt}|| <= M e^{-mu t}; (0, 1) for an empty Q.
DecayEnvelope decay_envelope(const Matrix& q);

/// Class constants with beta from the Gronwall bracket unless an override is
/// supplied; the override may not undercut the assumption minimum.
ClassConstants class_constants(const NormalForm& nf, std::optional<double> beta_override = {});

}  // namespace funnelsim
