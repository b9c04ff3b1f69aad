#include <doctest.h>

#include <cmath>

#include "funnelsim/controller.hpp"
#include "funnelsim/error.hpp"
#include "helpers.hpp"

using namespace funnelsim;
using testutil::vec;

namespace {
AvailabilitySchedule one_dropout() { return AvailabilitySchedule({{3.0, 4.0}}, 10.0); }
}  // namespace

TEST_CASE("availability follows the half-open dropout intervals") {
  const AvailabilitySchedule none({}, 10.0);
  for (double t : {0.0, 1.0, 10.0}) CHECK(none.availability(t) == 1);

  const AvailabilitySchedule s = one_dropout();
  CHECK(s.availability(3.0) == 1);
  CHECK(s.availability(3.5) == 0);
  CHECK(s.availability(4.0) == 0);
  CHECK(s.availability(4.1) == 1);
  CHECK(s.availability(3.0 - 1e-12) == 1);
  CHECK(s.availability(3.0 + 1e-12) == 0);
  CHECK(s.availability(4.0 + 1e-12) == 1);

  SUBCASE("a dropout starting at zero covers t = 0") {
    const AvailabilitySchedule z({{0.0, 1.0}}, 5.0);
    CHECK(z.availability(0.0) == 0);
    CHECK(z.tau(0.0) == 0.0);
    CHECK(z.availability(1.5) == 1);
    CHECK(z.tau(1.5) == 1.0);
  }
}

TEST_CASE("reset clock") {
  const AvailabilitySchedule s({{3.0, 4.0}, {6.0, 7.5}}, 10.0);
  CHECK(s.tau(0.0) == 0.0);
  CHECK(s.tau(2.9) == 0.0);
  CHECK(s.tau(3.5) == 3.5);
  CHECK(s.tau(4.0) == 4.0);
  CHECK(s.tau(5.0) == 4.0);
  CHECK(s.tau(6.0) == 4.0);
  CHECK(s.tau(7.0) == 7.0);
  CHECK(s.tau(9.0) == 7.5);
  // Constant on every availability interval.
  for (double t = 4.01; t <= 6.0; t += 0.01) CHECK(s.tau(t) == 4.0);
  const std::vector<double> ev = s.event_times();
  CHECK(ev == std::vector<double>{3.0, 4.0, 6.0, 7.5});
}

TEST_CASE("funnel value restarts after each dropout") {
  const FunnelSpec f(5, 1, 0.2);
  const AvailabilitySchedule none({}, 10.0);
  for (double t : {0.0, 0.5, 3.0, 9.0}) CHECK(funnel_value(none, f, t) == f.value(t));

  const AvailabilitySchedule s = one_dropout();
  CHECK(funnel_value(s, f, 3.5) == 0.0);
  CHECK(funnel_value(s, f, 5.0) == doctest::Approx(f.value(1.0)).epsilon(1e-15));

  SUBCASE("two dropouts at the breakpoints") {
    const AvailabilitySchedule two({{3.0, 5.0}, {8.0, 10.0}}, 20.0);
    CHECK(funnel_value(two, f, 3.0) == f.value(3.0));
    CHECK(funnel_value(two, f, 4.0) == 0.0);
    CHECK(funnel_value(two, f, 8.0) == doctest::Approx(f.value(3.0)));
    CHECK(funnel_value(two, f, 12.0) == doctest::Approx(f.value(2.0)));
    for (double h : {1e-6, 0.5, 2.5}) CHECK(funnel_value(two, f, 5.0 + h) == doctest::Approx(f.value(h)));
  }

  SUBCASE("stateful path matches the pure one") {
    const AvailabilitySchedule two({{3.0, 5.0}, {8.0, 10.0}}, 20.0);
    ControllerState st;
    for (int i = 0; i <= 2000; ++i) {
      const double t = 0.01 * i;
      CHECK(funnel_value(st, two, f, t) == funnel_value(two, f, t));
    }
    CHECK_THROWS_AS(funnel_value(st, two, f, 1.0), Error);
    try {
      funnel_value(st, two, f, 1.0);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonMonotoneTime);
    }
  }
}

TEST_CASE("error cascade") {
  const std::vector<Vector> es = error_cascade(1.0, {vec({0.5}), vec({0.1})});
  REQUIRE(es.size() == 2);
  CHECK(es[0](0) == doctest::Approx(0.5));
  CHECK(es[1](0) == doctest::Approx(0.1 + 0.5 / 0.75).epsilon(1e-15));
  CHECK(es[1](0) == doctest::Approx(0.76667).epsilon(1e-5));

  const std::vector<Vector> zero = error_cascade(0.0, {vec({50, -3}), vec({7, 7}), vec({1e6, 0})});
  for (const Vector& e : zero) CHECK(e.norm() == 0.0);

  SUBCASE("domain violation reports the stage") {
    try {
      error_cascade(1.0, {vec({0.9}), vec({0.5})});
      FAIL("no violation");
    } catch (const FunnelViolationError& e) {
      CHECK(e.code() == ErrorCode::FunnelViolation);
      CHECK(e.index() == 2);
    }
    std::vector<Vector> out;
    CHECK(error_cascade_into(1.0, {vec({1.0})}, out) == 1);
    CHECK(error_cascade_into(2.0, {vec({0.3, 0.3}), vec({0.0, 0.0})}, out, 0.8) == 1);
    CHECK(error_cascade_into(0.5, {vec({0.3}), vec({0.0})}, out, 1.0) == 0);
  }
}

TEST_CASE("control input") {
  CHECK(control_input(0, vec({0.5, 0.2}), 1).norm() == 0.0);
  const double er = 0.1 + 0.5 / 0.75;
  const Vector u = control_input(1, vec({er}), 1, 2);
  CHECK(u(0) == doctest::Approx(-er / (1 - er * er)).epsilon(1e-15));
  CHECK(u(0) == doctest::Approx(-1.8596).epsilon(1e-4));
  CHECK(control_input(1, vec({er}), -1, 2)(0) == doctest::Approx(-u(0)).epsilon(1e-15));
  try {
    control_input(1, vec({0.6, 0.8}), 1, 3);
    FAIL("no violation");
  } catch (const FunnelViolationError& e) {
    CHECK(e.index() == 3);
  }
}

TEST_CASE("initial conditions") {
  DesignParams dp;
  dp.phi0_0 = 1.4449e-4;
  dp.eta_star = 10.0;
  InitialConditionReport rep = check_initial_conditions(dp, {vec({-1.0}), vec({0.0})}, 0.0);
  CHECK(rep.ok());
  CHECK(rep.e_norms[0] == doctest::Approx(1.4449e-4));
  CHECK(rep.e_norms[1] == doctest::Approx(1.4449e-4).epsilon(1e-6));

  dp.phi0_0 = 0.5;
  rep = check_initial_conditions(dp, {vec({2.0}), vec({0.0})}, 0.0);
  CHECK_FALSE(rep.ok());
  CHECK(rep.first_failure() == 1);

  dp.phi0_0 = 1.0;
  rep = check_initial_conditions(dp, {vec({0.1}), vec({0.0})}, 11.0);
  CHECK(rep.first_failure() == 3);
  rep = check_initial_conditions(dp, {vec({0.1}), vec({0.0})}, 10.0);
  CHECK(rep.ok());
}

TEST_CASE("schedule construction") {
  const AvailabilitySchedule p = AvailabilitySchedule::periodic(1.0, 0.5, 2.0, 4, 8.0);
  REQUIRE(p.dropouts().size() == 3);
  CHECK(p.dropouts()[1].t_minus == doctest::Approx(3.5));
  CHECK(p.dropouts()[2].t_plus == doctest::Approx(6.5));
  CHECK(AvailabilitySchedule::periodic(1.0, 0.5, 2.0, 0, 8.0).dropouts().empty());

  CHECK_THROWS_AS(AvailabilitySchedule({{2.0, 1.0}}, 5.0), Error);
  CHECK_THROWS_AS(AvailabilitySchedule({{1.0, 2.0}, {2.0, 3.0}}, 5.0), Error);
  CHECK_THROWS_AS(AvailabilitySchedule({{1.0, 6.0}}, 5.0), Error);
  CHECK_THROWS_AS(AvailabilitySchedule({{-1.0, 2.0}}, 5.0), Error);
  CHECK_THROWS_AS(AvailabilitySchedule::periodic(0.0, 0.0, 1.0, 2, 5.0), Error);

  SUBCASE("limit warnings") {
    const AvailabilitySchedule s({{3.0, 5.0}, {8.0, 10.0}}, 20.0);
    CHECK(s.limit_warnings(2.0, 3.0).empty());
    CHECK(s.limit_warnings(1.5, 3.0).size() == 2);
    CHECK(s.limit_warnings(2.0, 3.5).size() == 2);
    // Endpoint rounding in the periodic generator stays quiet.
    const AvailabilitySchedule q = AvailabilitySchedule::periodic(0.2, 0.1, 0.2, 50, 20.0);
    CHECK(q.limit_warnings(0.1, 0.2).empty());
  }
}
