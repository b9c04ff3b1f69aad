#include "funnelsim/reference.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "funnelsim/error.hpp"

namespace funnelsim {

namespace {

void check_finite(const ReferenceSignal::Component& c) {
  if (!std::isfinite(c.offset)) throw Error(ErrorCode::InvalidArgument, "reference offset must be finite");
  for (const auto& term : c.terms) {
    if (!std::isfinite(term.amplitude) || !std::isfinite(term.omega) || !std::isfinite(term.phase))
      throw Error(ErrorCode::InvalidArgument, "reference term must be finite");
    if (term.omega < 0.0) throw Error(ErrorCode::InvalidArgument, "reference frequency must be >= 0");
  }
}

}  // namespace

std::string family_name(ReferenceSignal::Family family) {
  switch (family) {
    case ReferenceSignal::Family::Constant: return "constant";
    case ReferenceSignal::Family::Sinusoid: return "sinusoid";
    case ReferenceSignal::Family::SumOfSinusoids: return "sum_of_sinusoids";
  }
  return "unknown";
}

ReferenceSignal::ReferenceSignal(Family family, std::vector<Component> components)
    : family_(family), components_(std::move(components)) {
  if (components_.empty()) throw Error(ErrorCode::InvalidArgument, "reference needs at least one component");
  for (const auto& c : components_) check_finite(c);
}

ReferenceSignal ReferenceSignal::constant(const Vector& value) {
  std::vector<Component> comps;
  for (Eigen::Index j = 0; j < value.size(); ++j) comps.push_back(Component{value(j), {}});
  return ReferenceSignal(Family::Constant, std::move(comps));
}

ReferenceSignal ReferenceSignal::sinusoid(const Vector& amplitude, const Vector& omega, const Vector& phase) {
  if (amplitude.size() != omega.size() || amplitude.size() != phase.size())
    throw Error(ErrorCode::InvalidArgument, "sinusoid parameters need equal length");
  std::vector<Component> comps;
  for (Eigen::Index j = 0; j < amplitude.size(); ++j)
    comps.push_back(Component{0.0, {SinusoidTerm{amplitude(j), omega(j), phase(j)}}});
  return ReferenceSignal(Family::Sinusoid, std::move(comps));
}

ReferenceSignal ReferenceSignal::sum_of_sinusoids(std::vector<Component> components) {
  return ReferenceSignal(Family::SumOfSinusoids, std::move(components));
}

Vector ReferenceSignal::derivative(int order, double t) const {
  Vector out(dim());
  const double shift = order * std::numbers::pi / 2.0;
  for (std::size_t j = 0; j < components_.size(); ++j) {
    const Component& c = components_[j];
    double v = order == 0 ? c.offset : 0.0;
    for (const auto& term : c.terms)
      v += term.amplitude * std::pow(term.omega, order) * std::cos(term.omega * t + term.phase + shift);
    out(static_cast<Eigen::Index>(j)) = v;
  }
  return out;
}

double ReferenceSignal::sup_norm(int order) const {
  double sq = 0.0;
  for (const auto& c : components_) {
    double bound = order == 0 ? std::abs(c.offset) : 0.0;
    for (const auto& term : c.terms) bound += std::abs(term.amplitude) * std::pow(term.omega, order);
    sq += bound * bound;
  }
  return std::sqrt(sq);
}

double ReferenceSignal::chain_sup_norm(int r) const {
  // Exact case: each component is a pure constant or one cosine with zero
  // offset, and all cosines share one non-zero frequency.
  bool exact = true;
  double omega = -1.0;
  for (const auto& c : components_) {
    if (c.terms.empty()) continue;
    if (c.terms.size() > 1 || c.offset != 0.0) { exact = false; break; }
    const double w = c.terms.front().omega;
    if (w == 0.0 || (omega >= 0.0 && w != omega)) { exact = false; break; }
    omega = w;
  }
  if (exact) {
    double constant_sq = 0.0;
    double even = 0.0;
    double odd = 0.0;
    std::complex<double> phasor{0.0, 0.0};
    for (const auto& c : components_) {
      if (c.terms.empty()) {
        constant_sq += c.offset * c.offset;
        continue;
      }
      const SinusoidTerm& term = c.terms.front();
      phasor += term.amplitude * term.amplitude * std::polar(1.0, 2.0 * term.phase);
    }
    double amp_sq = 0.0;
    for (const auto& c : components_)
      if (!c.terms.empty()) amp_sq += c.terms.front().amplitude * c.terms.front().amplitude;
    if (omega > 0.0) {
      for (int i = 0; i < r; ++i) (i % 2 == 0 ? even : odd) += std::pow(omega, 2 * i);
    }
    // sum_j A_j^2 [E cos^2 th_j + O sin^2 th_j] peaks at (E+O)/2 sum A^2 + |E-O|/2 |Z|.
    const double peak = constant_sq + 0.5 * (even + odd) * amp_sq + 0.5 * std::abs(even - odd) * std::abs(phasor);
    return std::sqrt(std::max(0.0, peak));
  }
  double sq = 0.0;
  for (int i = 0; i < r; ++i) {
    const double b = sup_norm(i);
    sq += b * b;
  }
  return std::sqrt(sq);
}

double ReferenceSignal::max_derivative_norm(int r) const {
  double best = 0.0;
  for (int i = 0; i <= r; ++i) best = std::max(best, sup_norm(i));
  return best;
}

}  // namespace funnelsim
