#pragma once

#include <string>
#include <vector>

#include "funnelsim/linalg.hpp"

namespace funnelsim {

struct SinusoidTerm {
  double amplitude = 0.0;
  double omega = 0.0;  // rad/s
  double phase = 0.0;  // term is amplitude * cos(omega t + phase)
};

/// Closed-form reference y_ref with per-component offset plus a sum of cosines.
/// All derivatives are exact, so every order needed by the controller exists.
class ReferenceSignal {
 public:
  enum class Family { Constant, Sinusoid, SumOfSinusoids };

  struct Component {
    double offset = 0.0;
    std::vector<SinusoidTerm> terms;
  };

  ReferenceSignal() = default;
  ReferenceSignal(Family family, std::vector<Component> components);

  static ReferenceSignal constant(const Vector& value);
  /// y_j(t) = amplitude_j cos(omega_j t + phase_j).
  static ReferenceSignal sinusoid(const Vector& amplitude, const Vector& omega, const Vector& phase);
  static ReferenceSignal sum_of_sinusoids(std::vector<Component> components);

  Family family() const { return family_; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(components_.size()); }
  const std::vector<Component>& components() const { return components_; }

  /// i-th time derivative at t.
  Vector derivative(int order, double t) const;

  /// Upper bound on ||y_ref^(i)||_inf; exact for a constant or a single term per component.
  double sup_norm(int order) const;

  /// ||(y_ref, ..., y_ref^(r-1))||_inf. Exact when every component is a single
  /// cosine of a shared frequency (or constant); otherwise the root-sum-square
  /// of the per-order bounds.
  double chain_sup_norm(int r) const;

  /// max_{i=0..r} ||y_ref^(i)||_inf.
  double max_derivative_norm(int r) const;

 private:
  Family family_ = Family::Constant;
  std::vector<Component> components_;
};

std::string family_name(ReferenceSignal::Family family);

}  // namespace funnelsim
