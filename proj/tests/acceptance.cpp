// Acceptance run: one line per criterion, exit status 1 when any fails.
// Usage: funnelsim_acceptance <path to funnelsim CLI> [work dir]
#include <chrono>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "funnelsim/config.hpp"
#include "funnelsim/error.hpp"
#include "funnelsim/verify.hpp"
#include "helpers.hpp"

using namespace funnelsim;
using testutil::mat;
using testutil::vec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail += " (over the " + std::to_string(static_cast<int>(budget_s)) + " s budget)";
  }
  if (!o.pass) ++failures;
  std::printf("CRITERION %d %s %s [%.2f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

InitialConditions zero_ic(const NormalForm& nf) {
  InitialConditions ic;
  ic.y_derivs.assign(static_cast<std::size_t>(nf.r), Vector::Zero(nf.m));
  ic.eta = Vector::Zero(nf.internal_dim());
  return ic;
}

ReferenceSignal sinusoid(Eigen::Index m) {
  Vector amp(m), om(m), ph(m);
  for (Eigen::Index j = 0; j < m; ++j) amp(j) = 1.0, om(j) = 1.0, ph(j) = 0.5 * static_cast<double>(j);
  return ReferenceSignal::sinusoid(amp, om, ph);
}

double max_markov_diff(const StateSpace& a, const StateSpace& b, int count) {
  const auto ma = markov_parameters(a, count);
  const auto mb = markov_parameters(b, count);
  double worst = 0.0;
  for (int k = 0; k < count; ++k) worst = std::max(worst, (ma[k] - mb[k]).cwiseAbs().maxCoeff());
  return worst;
}

Outcome envelope() {
  const DecayEnvelope env = decay_envelope(mat({{0, 1}, {-4, -2}}));
  const bool ok = std::abs(env.mu - 0.3305) <= 1e-3 && std::abs(env.big_m - 2.2477) <= 1e-3;
  return {ok, "mu=" + num(env.mu) + " M=" + num(env.big_m)};
}

Outcome normal_form() {
  const StateSpace sys = testutil::car();
  const NormalForm nf = testutil::car_nf();
  const bool r_ok = nf.r == 2;
  const double g_err = std::abs(nf.gamma(0, 0) - 1.0 / 9.0);
  Eigen::EigenSolver<Matrix> es(nf.q);
  const std::complex<double> want(-1.0, std::sqrt(3.0));
  double eig_err = 0.0;
  for (int i = 0; i < 2; ++i) {
    const std::complex<double> l = es.eigenvalues()(i);
    eig_err = std::max(eig_err, std::min(std::abs(l - want), std::abs(l - std::conj(want))));
  }
  const double mk = max_markov_diff(sys, nf.realization(), 8);
  const bool ok = r_ok && g_err <= 1e-12 && eig_err <= 1e-9 && mk <= 1e-9;
  return {ok, "r=" + std::to_string(nf.r) + " |Gamma-1/9|=" + num(g_err) + " eig_err=" + num(eig_err) +
                  " markov_err=" + num(mk)};
}

Outcome window_formula() {
  const ClassConstants cc = class_constants(testutil::car_nf());
  const double v = cc.p * cc.big_m / (cc.mu * 133145.0);
  return {std::abs(v - 1.4449e-4) <= 1e-7, "pM/(mu eta*)=" + num(v)};
}

Outcome synthesis_sweep() {
  std::mt19937_64 rng(20240501);
  int synthesized = 0, failed_checks = 0, infeasible = 0;
  std::string first_failure;
  auto check = [&](const DesignParams& d, const std::string& label) {
    ++synthesized;
    for (const CheckResult& c : design_substitution(d))
      if (!c.pass) {
        ++failed_checks;
        if (first_failure.empty()) first_failure = label + ":" + c.name;
      }
  };
  const NormalForm car = testutil::car_nf();
  check(synthesize(car, sinusoid(1), zero_ic(car), {}), "mass_on_car");
  for (int i = 0; i < 50; ++i) {
    const testutil::RandomPlant rp = testutil::random_plant(rng);
    const NormalForm nf = to_normal_form(rp.ss);
    SynthesisOptions o;
    if (nf.trivial_internal_dynamics()) {
      o.delta_loss = 0.5;
      o.delta_avail = 1.0;
    }
    try {
      check(synthesize(nf, sinusoid(nf.m), zero_ic(nf), o), "plant" + std::to_string(i));
    } catch (const Error& e) {
      ++infeasible;
      if (first_failure.empty()) first_failure = "plant" + std::to_string(i) + " " + e.what();
    }
  }
  return {failed_checks == 0 && infeasible == 0,
          std::to_string(synthesized) + " designs, " + std::to_string(failed_checks) + " failed inequalities, " +
              std::to_string(infeasible) + " infeasible" + (first_failure.empty() ? "" : " (" + first_failure + ")")};
}

Outcome scenario(const std::string& preset) {
  const Scenario sc = prepare_scenario(preset_config(preset));
  const Trace tr = integrate(sc.nf, sc.cc, sc.design, sc.schedule, sc.config.reference, sc.ic, sc.config.sim);
  const VerificationReport rep = verify_trace(tr, sc.design, sc.cc, sc.config.t_end);
  bool ok = rep.all_pass() && sc.schedule.dropouts().size() == 2 && sc.warnings.empty();
  std::string detail = std::to_string(tr.samples.size()) + " samples";
  for (const auto& c : rep.checks) {
    detail += " " + c.name + (c.pass ? "=ok" : "=FAIL");
    if (c.name == "funnel_containment") detail += "(margin " + num(c.margin) + ")";
  }
  for (const char* required : {"funnel_containment", "input_zero_on_dropout", "integration_complete"})
    ok = ok && rep.find(required) != nullptr;
  if (sc.design.synthesized)
    for (const char* required : {"input_bound", "eta_reacquisition"}) ok = ok && rep.find(required) != nullptr;
  return {ok, detail};
}

Outcome coasting() {
  std::mt19937_64 rng(777);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const NormalForm car = testutil::car_nf();
  const ClassConstants car_cc = class_constants(car);
  const double car_delta = 0.9 * *max_dropout_duration(car_cc, car.r, 0.95).value;
  int violations = 0;
  double worst = 1.0;
  for (int run = 0; run < 100; ++run) {
    NormalForm nf = car;
    ClassConstants cc = car_cc;
    double delta = car_delta;
    if (run % 2 == 1) {
      nf = to_normal_form(testutil::random_plant(rng).ss);
      cc = class_constants(nf);
      const DropoutBound b = max_dropout_duration(cc, nf.r, 0.95);
      delta = b.value ? 0.9 * *b.value : 1.0;
    }
    Vector chain(nf.r * nf.m), eta(nf.internal_dim());
    for (Eigen::Index i = 0; i < chain.size(); ++i) chain(i) = nd(rng);
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = nd(rng);
    const double t0 = 10.0 * unif(rng);
    const double len = delta * (0.05 + 0.95 * unif(rng));
    const Trace tr = coasting_run(nf, chain, eta, t0, t0 + len);
    const CheckResult c = coasting_bound_check(tr, cc);
    if (!c.pass) ++violations;
    worst = std::min(worst, c.margin);
  }
  return {violations == 0, "100 runs, " + std::to_string(violations) + " violations, worst margin " + num(worst)};
}

Outcome lemma() {
  int bad = 0;
  double worst = 1.0;
  for (int r = 1; r <= 3; ++r)
    for (double q : {0.5, 0.9, 0.95}) {
      const CheckResult c = lemma_ar_property(12345, r, q, 1000);
      if (!c.pass) ++bad;
      worst = std::min(worst, c.margin);
    }
  return {bad == 0, "9000 trials, " + std::to_string(bad) + " failing (r,q) pairs, worst margin " + num(worst)};
}

Outcome cascade() {
  int bad = 0;
  double worst = 1.0;
  for (int r = 1; r <= 3; ++r) {
    const CheckResult c = cascade_rho_equivalence(12345, r, 1000);
    if (!c.pass) ++bad;
    worst = std::min(worst, c.margin);
  }
  return {bad == 0, "3000 tuples, " + std::to_string(bad) + " failing r, slack left " + num(worst)};
}

Outcome chain_only() {
  const NormalForm nf = testutil::chain_nf(1, mat({{1.0, 0.3}, {-0.2, 0.8}}));
  const ReferenceSignal ref = sinusoid(2);
  const InitialConditions ic = zero_ic(nf);
  bool missing = false;
  try {
    synthesize(nf, ref, ic, {});
  } catch (const Error& e) {
    missing = e.code() == ErrorCode::MissingLimits;
  }
  SynthesisOptions o;
  o.delta_loss = 10.0;
  o.delta_avail = 0.5;
  const DesignParams d = synthesize(nf, ref, ic, o);
  const bool unbounded = !d.dropout.value.has_value() && d.delta_min == 0.0;
  const double t_end = 32.0;
  const AvailabilitySchedule sched = AvailabilitySchedule::periodic(0.5, 10.0, 0.5, 3, t_end);
  const Trace tr = integrate(nf, d.cc, d, sched, ref, ic);
  const VerificationReport rep = verify_trace(tr, d, d.cc, t_end);
  const CheckResult* cont = rep.find("funnel_containment");
  return {missing && unbounded && rep.all_pass() && sched.dropouts().size() == 3,
          std::string("Delta ") + (d.dropout.value ? "bounded" : "unbounded") + ", delta_min=" + num(d.delta_min) +
              ", " + std::to_string(sched.dropouts().size()) + " dropouts of 10 s, containment margin " +
              num(cont ? cont->margin : -1.0) + (rep.all_pass() ? "" : ", some trace check failed")};
}

Outcome discrepancy(const std::string& cli, const std::filesystem::path& work) {
  if (cli.empty()) return {false, "no CLI path given"};
  const std::filesystem::path out = work / "reproduce_a";
  std::filesystem::remove_all(out);
  const std::string cmd = "\"" + cli + "\" reproduce --preset scenario_a --trials 200 --out \"" + out.string() +
                          "\" > \"" + (work / "reproduce_a.log").string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  const int code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ifstream in(out / "scenario_a_report.txt");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::size_t at = text.find("# discrepancy table");
  bool rows = at != std::string::npos;
  for (const char* q : {"\nDelta ", "\ndelta ", "\neta_star ", "\nchi ", "\nphi0_min ", "\nphi0_max "})
    rows = rows && text.find(q, at) != std::string::npos;
  return {code == 0 && rows, "exit " + std::to_string(code) + (rows ? ", table present" : ", table incomplete")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const std::filesystem::path work =
      argc > 2 ? std::filesystem::path(argv[2]) : std::filesystem::temp_directory_path() / "funnelsim_acceptance";
  std::filesystem::create_directories(work);

  run(1, 1, envelope);
  run(2, 60, normal_form);
  run(3, 60, window_formula);
  run(4, 30, synthesis_sweep);
  run(5, 60, [] { return scenario("scenario_a"); });
  run(6, 60, [] { return scenario("scenario_b"); });
  run(7, 300, coasting);
  run(8, 5, lemma);
  run(9, 60, cascade);
  run(10, 300, chain_only);
  run(11, 300, [&] { return discrepancy(cli, work); });
  return failures == 0 ? 0 : 1;
}
