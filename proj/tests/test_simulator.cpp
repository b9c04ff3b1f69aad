#include <doctest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "funnelsim/error.hpp"
#include "funnelsim/simulator.hpp"
#include "helpers.hpp"

using namespace funnelsim;
using testutil::mat;
using testutil::vec;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

InitialConditions zero_ic(const NormalForm& nf) {
  InitialConditions ic;
  ic.y_derivs.assign(static_cast<std::size_t>(nf.r), Vector::Zero(nf.m));
  ic.eta = Vector::Zero(nf.internal_dim());
  return ic;
}

ReferenceSignal cosine() { return ReferenceSignal::sinusoid(vec({1}), vec({1}), vec({0})); }

struct ScenarioB {
  NormalForm nf = testutil::car_nf();
  InitialConditions ic = zero_ic(nf);
  DesignParams dp = fixed_design(nf, cosine(), ic, FunnelSpec(5, 1, 0.2));

  Trace run(const AvailabilitySchedule& s, SimOptions o = {}) const {
    return integrate(nf, dp.cc, dp, s, cosine(), ic, o);
  }
};

}  // namespace

TEST_CASE("mass-on-car plant") {
  const StateSpace sys = testutil::car();
  CHECK(sys.n() == 4);
  const RelativeDegree rd = relative_degree(sys);
  CHECK(rd.r == 2);
  CHECK(rd.gamma(0, 0) == doctest::Approx(1.0 / 9.0).epsilon(1e-14));

  CHECK(code_of([] { mass_on_car(-0.5, 1, 2, 1, testutil::kQuarterPi); }) == ErrorCode::SingularMassMatrix);

  SUBCASE("theta = pi/2 decouples the output from the ramp") {
    const StateSpace s = mass_on_car(4, 1, 2, 1, std::numbers::pi / 2);
    const RelativeDegree r2 = relative_degree(s);
    CHECK(r2.r == 2);
    CHECK(r2.gamma(0, 0) == doctest::Approx(1.0 / 5.0).epsilon(1e-12));
  }

  SUBCASE("matches the equations of motion") {
    // (m1+m2) z'' + m2 cos(th) s'' = u,  m2 cos(th) z'' + m2 s'' = -k s - d s'.
    const double m1 = 4, m2 = 1, k = 2, d = 1, c = std::cos(testutil::kQuarterPi);
    const Vector x = vec({0.3, -0.2, 0.1, 0.5});
    const double u = 0.7;
    const Vector dx = sys.a * x + sys.b * vec({u});
    CHECK(dx(0) == doctest::Approx(x(2)));
    CHECK(dx(1) == doctest::Approx(x(3)));
    CHECK((m1 + m2) * dx(2) + m2 * c * dx(3) == doctest::Approx(u).epsilon(1e-13));
    CHECK(m2 * c * dx(2) + m2 * dx(3) == doctest::Approx(-k * x(1) - d * x(3)).epsilon(1e-13));
    CHECK((sys.c * x)(0) == doctest::Approx(0.3 - 0.2 * c));
  }
}

TEST_CASE("closed-loop right-hand side") {
  const ReferenceSignal zero = ReferenceSignal::constant(vec({0}));
  Vector dx;
  SUBCASE("scalar r = 1") {
    const double g = 1.7;
    const NormalForm nf = testutil::chain_nf(1, mat({{g}}));
    REQUIRE(closed_loop_rhs(nf, 1, 1.0, 1, 0.0, vec({0.5}), zero, dx));
    CHECK(dx(0) == doctest::Approx(-g * 0.5 / 0.75).epsilon(1e-15));
    CHECK_FALSE(closed_loop_rhs(nf, 1, 2.0, 1, 0.0, vec({0.5}), zero, dx));
  }
  SUBCASE("dropout at the origin") {
    const NormalForm nf = testutil::car_nf();
    REQUIRE(closed_loop_rhs(nf, 1, 0.0, 0, 1.0, Vector::Zero(4), zero, dx));
    CHECK(dx.norm() == 0.0);
  }
  SUBCASE("mass-on-car coasting matches the realization") {
    const NormalForm nf = testutil::car_nf();
    const Vector x = vec({0.1, -0.3, 0.4, 0.2});
    REQUIRE(closed_loop_rhs(nf, 1, 0.0, 0, 1.0, x, cosine(), dx));
    const Vector ref = nf.realization().a * x;
    CHECK((dx - ref).norm() < 1e-13);
  }
}

TEST_CASE("trivial equilibrium") {
  const NormalForm nf = testutil::chain_nf(1, mat({{1.0}}));
  const InitialConditions ic = zero_ic(nf);
  const ReferenceSignal zero = ReferenceSignal::constant(vec({0}));
  const DesignParams dp = fixed_design(nf, zero, ic, FunnelSpec(1, 1, 0.5));
  const Trace tr = integrate(nf, dp.cc, dp, AvailabilitySchedule({}, 2.0), zero, ic);
  CHECK(tr.samples.back().t == doctest::Approx(2.0));
  for (const auto& s : tr.samples) {
    CHECK(s.y.norm() == 0.0);
    CHECK(s.u_norm == 0.0);
  }
}

TEST_CASE("coasting runs") {
  SUBCASE("zero state stays at zero") {
    const NormalForm nf = testutil::car_nf();
    const Trace tr = coasting_run(nf, Vector::Zero(2), Vector::Zero(2), 0.0, 1.0);
    for (const auto& s : tr.samples) {
      CHECK(s.y.norm() == 0.0);
      CHECK(s.eta_norm == 0.0);
    }
  }
  SUBCASE("scalar exponential") {
    NormalForm nf = testutil::chain_nf(1, mat({{1.0}}), {mat({{-0.7}})});
    const Trace tr = coasting_run(nf, vec({2.0}), Vector(0), 1.0, 3.0);
    CHECK(tr.samples.front().t == 1.0);
    CHECK(tr.samples.back().t == doctest::Approx(3.0));
    for (const auto& s : tr.samples) CHECK(s.y(0) == doctest::Approx(2.0 * std::exp(-0.7 * (s.t - 1.0))).epsilon(1e-7));
  }
  SUBCASE("mass-on-car against the matrix exponential") {
    const NormalForm nf = testutil::car_nf();
    const Matrix a = nf.realization().a;
    const Vector x0 = vec({0.2, -0.1, 0.3, 0.05});
    const Trace tr = coasting_run(nf, x0.head(2), x0.tail(2), 0.0, 5.0);
    for (std::size_t i = 0; i < tr.samples.size(); i += 53) {
      const auto& s = tr.samples[i];
      const Vector x = testutil::expm(a * s.t) * x0;
      CHECK(std::abs(s.y(0) - x(0)) < 1e-7);
      CHECK((s.eta - x.tail(2)).norm() < 1e-7);
    }
  }
  CHECK(code_of([] { coasting_run(testutil::car_nf(), Vector::Zero(2), Vector::Zero(2), 1.0, 1.0); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("scenario B fixed funnel") {
  const ScenarioB b;
  const AvailabilitySchedule sched({{3.0, 5.0}, {8.0, 10.0}}, 20.0);
  const Trace tr = b.run(sched);
  REQUIRE_FALSE(tr.empty());
  CHECK(tr.samples.back().t == doctest::Approx(20.0));

  SUBCASE("samples land on every event and respect the schedule") {
    for (double ev : sched.event_times()) {
      bool hit = false;
      for (const auto& s : tr.samples) hit = hit || s.t == ev;
      CHECK(hit);
    }
    double prev = -1.0;
    for (const auto& s : tr.samples) {
      CHECK(s.t > prev);
      prev = s.t;
      CHECK(s.a == sched.availability(s.t));
      if (s.a == 0) CHECK(s.u_norm == 0.0);
      if (s.a == 1) CHECK(s.phi * s.e_norm < 1.0);
    }
  }

  SUBCASE("chain (y, y') is consistent with the sampled output") {
    // Trapezoid rule on y' between neighbouring samples of one segment.
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < tr.samples.size(); ++i) {
      const auto& p = tr.samples[i];
      const auto& n = tr.samples[i + 1];
      if (p.a != n.a) continue;
      const double dt = n.t - p.t;
      const double dy = n.y(0) - p.y(0);
      worst = std::max(worst, std::abs(dy - 0.5 * dt * (p.chain(1) + n.chain(1))));
    }
    CHECK(worst < 1e-7);
  }

  SUBCASE("halving the tolerances barely moves the result") {
    SimOptions tight;
    tight.rtol = 1e-10;
    tight.atol = 1e-12;
    const Trace fine = b.run(sched, tight);
    CHECK(std::abs(fine.samples.back().y(0) - tr.samples.back().y(0)) < 1e-6);
    CHECK(fine.samples.back().eta_norm == doctest::Approx(tr.samples.back().eta_norm).epsilon(1e-6));
  }
}

TEST_CASE("scenario B on the longest periodic schedule leaves the funnel") {
  const ScenarioB b;
  const AvailabilitySchedule sched = AvailabilitySchedule::periodic(3.0, 2.0, 3.0, 100, 60.0);
  try {
    b.run(sched);
    FAIL("integration should fail");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FunnelViolation);
  }
}

TEST_CASE("trace CSV") {
  const ScenarioB b;
  const Trace tr = b.run(AvailabilitySchedule({{1.0, 1.5}}, 2.0));
  std::ostringstream os;
  write_trace_csv(tr, os);
  const std::string text = os.str();
  CHECK(text.rfind("t,a,tau,phi,psi,y_1,e_norm,e1_norm,e2_norm,u_1,u_norm,eta_1,eta_2,eta_norm\n", 0) == 0);

  std::istringstream is(text);
  const Trace back = read_trace_csv(is);
  CHECK(back.r == 2);
  CHECK(back.m == 1);
  CHECK(back.k == 2);
  REQUIRE(back.samples.size() == tr.samples.size());
  for (std::size_t i = 0; i < tr.samples.size(); i += 17) {
    const auto& x = tr.samples[i];
    const auto& y = back.samples[i];
    CHECK(y.t == doctest::Approx(x.t).epsilon(1e-11));
    CHECK(y.a == x.a);
    CHECK(y.phi == doctest::Approx(x.phi).epsilon(1e-11));
    CHECK(y.e_norm == doctest::Approx(x.e_norm).epsilon(1e-11));
    CHECK(y.u_norm == doctest::Approx(x.u_norm).epsilon(1e-11));
  }

  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return read_trace_csv(in);
  };
  SUBCASE("malformed input") {
    const std::string header = text.substr(0, text.find('\n') + 1);
    const std::string row1 = text.substr(header.size(), text.find('\n', header.size()) + 1 - header.size());
    CHECK(code_of([&] { parse(""); }) == ErrorCode::TraceFormatError);
    CHECK(code_of([&] { parse("t,a,phi\n"); }) == ErrorCode::TraceFormatError);
    CHECK(code_of([&] { parse(text.substr(0, text.size() - 5)); }) == ErrorCode::TraceFormatError);
    CHECK(code_of([&] { parse(header + row1 + row1); }) == ErrorCode::TraceFormatError);
    std::string bad_a = row1;
    bad_a[bad_a.find(',') + 1] = '2';
    CHECK(code_of([&] { parse(header + bad_a); }) == ErrorCode::TraceFormatError);
    std::string nan_row = row1;
    nan_row.replace(0, nan_row.find(','), "nan");
    CHECK(code_of([&] { parse(header + nan_row); }) == ErrorCode::TraceFormatError);
    CHECK(parse(header).samples.empty());
  }
  CHECK(code_of([] { read_trace_csv(std::string("/nonexistent/trace.csv")); }) == ErrorCode::IoError);
}
