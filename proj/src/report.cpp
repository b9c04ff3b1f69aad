#include "funnelsim/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "funnelsim/error.hpp"

namespace funnelsim {

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class KeyValues {
 public:
  void add(const std::string& key, double v) { os_ << key << " = " << num(v) << '\n'; }
  void add(const std::string& key, const std::string& v) { os_ << key << " = " << v << '\n'; }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

void class_section(KeyValues& kv, const Scenario& sc) {
  const ClassConstants& cc = sc.cc;
  kv.add("system", mode_name(sc.config.system.mode));
  kv.add("r", sc.nf.r);
  kv.add("m", static_cast<double>(sc.nf.m));
  kv.add("n", static_cast<double>(sc.nf.n));
  kv.add("M", cc.big_m);
  kv.add("mu", cc.mu);
  kv.add("s", cc.s);
  kv.add("p", cc.p);
  kv.add("beta", cc.beta);
  kv.add("gamma_min", cc.gamma_min);
  kv.add("sign", cc.sign);
}

}  // namespace

std::string design_report(const Scenario& sc) {
  const DesignParams& d = sc.design;
  KeyValues kv;
  kv.add("scenario", sc.config.name);
  kv.add("design", d.synthesized ? "synthesized" : "fixed");
  class_section(kv, sc);
  if (d.synthesized) {
    kv.add("q", d.q);
    kv.add("theta", d.theta);
    kv.add("A_r", d.a_r);
    kv.add("Delta_bar", d.dropout.value ? *d.dropout.value : std::numeric_limits<double>::infinity());
    kv.add("Delta", d.delta_loss);
    kv.add("delta_min", d.delta_min);
    kv.add("delta", d.delta_avail);
    kv.add("eta_star_min", d.eta_star_min.value);
    kv.add("eta_star", d.eta_star);
    kv.add("E", d.window.e_bound);
    kv.add("phi0_min", d.window.phi0_min);
    kv.add("phi0_max", d.window.phi0_max);
  }
  kv.add("phi0_0", d.phi0_0);
  kv.add("a", d.funnel.a);
  kv.add("b", d.funnel.b);
  kv.add("c", d.funnel.c);
  kv.add("d", d.funnel.d);
  if (d.synthesized) {
    kv.add("rho", d.rho);
    kv.add("phi0_rho", d.funnel.value(d.rho));
    kv.add("mu0", d.gains.mu0);
    for (std::size_t i = 0; i < d.gains.c.size(); ++i) kv.add("c_" + std::to_string(i), d.gains.c[i]);
    kv.add("c_" + std::to_string(d.r), d.cert.c_r);
    kv.add("chi", d.gains.chi);
    kv.add("eta_bar", d.cert.eta_bar);
    kv.add("U_max", d.cert.u_max);
    kv.add("refinement_iterations", d.refinement_iterations);
  } else {
    kv.add("note", "user-fixed funnel; the synthesis guarantees do not apply");
  }
  for (std::size_t i = 0; i < d.initial.e_norms.size(); ++i)
    kv.add("e" + std::to_string(i + 1) + "_0", d.initial.e_norms[i]);
  kv.add("dropouts", static_cast<double>(sc.schedule.dropouts().size()));
  for (const auto& w : sc.warnings) kv.add("warning", w);
  return kv.str();
}

bool is_reference_mass_on_car(const ScenarioConfig& cfg) {
  if (cfg.system.mode != SystemConfig::Mode::MassOnCar) return false;
  const MassOnCarParams& p = cfg.system.car;
  return p.m1 == 4.0 && p.m2 == 1.0 && p.k == 2.0 && p.d == 1.0 &&
         std::abs(p.theta - std::numbers::pi / 4.0) < 1e-12;
}

std::vector<DiscrepancyRow> discrepancy_table(const Scenario& sc, const ReportedValues& rep) {
  const DesignParams& d = sc.design;
  if (!d.synthesized) throw Error(ErrorCode::InvalidArgument, "discrepancy table needs a synthesized design");
  const ClassConstants& cc = d.cc;
  const int r = d.r;
  const double q = d.q;
  std::vector<DiscrepancyRow> rows;

  rows.push_back({"Delta", rep.delta_loss, d.delta_loss, "recomputed: theta times the largest admissible value"});
  rows.push_back({"Delta_bar", std::nullopt, d.dropout.value, "largest Delta meeting all three dropout bounds"});
  rows.push_back({"delta", rep.delta_avail, d.delta_avail, "recomputed: delta_min / theta"});
  rows.push_back({"delta_min", std::nullopt, d.delta_min, ""});
  rows.push_back({"eta_star", rep.eta_star, d.eta_star, "recomputed: lower bound times (1 + 1e-6)"});
  rows.push_back({"phi0_min", rep.phi0_window, d.window.phi0_min, ""});
  rows.push_back({"phi0_max", rep.phi0_window, d.window.phi0_max, ""});
  rows.push_back({"chi", rep.chi, d.gains.chi, "recomputed for the synthesized funnel"});

  // The reported constants substituted into the same inequalities.
  const double window_min = cc.p * cc.big_m / (cc.mu * rep.eta_star);
  rows.push_back({"phi0_min(reported eta_star)", rep.phi0_window, window_min, "p M / (mu eta_star)"});
  const char* dropout_rules[3] = {"Delta rule 1 at reported Delta", "Delta rule 2 at reported Delta",
                                  "Delta rule 3 at reported Delta"};
  for (int i = 0; i < 3; ++i) {
    const auto& bound = d.dropout.by_rule[static_cast<std::size_t>(i)];
    const bool ok = !bound || rep.delta_loss <= *bound;
    rows.push_back({dropout_rules[i], rep.delta_loss, bound, ok ? "satisfied" : "violated"});
  }
  try {
    const double dmin = min_availability_duration(cc, r, q, rep.delta_loss);
    rows.push_back({"delta_min at reported Delta", rep.delta_avail, dmin,
                    rep.delta_avail >= dmin ? "reported delta satisfied" : "reported delta too short"});
  } catch (const Error& e) {
    rows.push_back({"delta_min at reported Delta", rep.delta_avail, std::nullopt,
                    std::string("not defined: ") + error_code_name(e.code()).data()});
  }
  const EtaStarFeasibility feas =
      eta_star_feasibility(cc, r, rep.delta_loss, rep.delta_avail, q, d.refs, rep.eta_star);
  for (int i = 0; i < 3; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    rows.push_back({"eta_star rule " + std::to_string(i + 1) + " at reported values", rep.eta_star,
                    std::isfinite(feas.rhs[idx]) ? std::optional<double>(feas.rhs[idx]) : std::nullopt,
                    feas.pass[idx] ? "satisfied" : "violated"});
  }
  try {
    const FunnelWindow w = phi0_window(cc, r, rep.eta_star, rep.delta_loss, rep.delta_avail, q, d.refs.x_sup);
    rows.push_back({"phi0_max at reported values", rep.phi0_window, w.phi0_max,
                    w.phi0_min <= w.phi0_max ? "window non-empty" : "window empty"});
  } catch (const Error& e) {
    rows.push_back({"phi0_max at reported values", rep.phi0_window, std::nullopt,
                    std::string("not defined: ") + error_code_name(e.code()).data()});
  }

  // The reported funnel choice: phi0(0) = phi0_min, b = 1, c = 0.03.
  try {
    const std::vector<Vector> e0 = initial_error_derivatives(sc.ic, sc.config.reference);
    const GainRecursion gr = gain_recursion(window_min, rep.b, e0, q);
    rows.push_back({"chi for the reported funnel", rep.chi, gr.chi, "phi0(0) = p M / (mu eta_star), b = 1"});
    const FunnelSpec f(1.0 / window_min - rep.c, rep.b, rep.c);
    rows.push_back({"phi0(rho) for the reported funnel", rep.phi_rho, f.value(rep.rho_fraction * rep.delta_avail),
                    "rho = 0.99 delta"});
  } catch (const Error& e) {
    rows.push_back({"chi for the reported funnel", rep.chi, std::nullopt,
                    std::string("not defined: ") + error_code_name(e.code()).data()});
  }
  return rows;
}

std::string discrepancy_text(const std::vector<DiscrepancyRow>& rows) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-42s %-16s %-16s %-12s %s\n", "quantity", "reported", "recomputed", "rel_diff",
                "note");
  os << "# discrepancy table\n" << buf;
  for (const auto& row : rows) {
    const std::string rep_s = row.reported ? num(*row.reported) : "-";
    const std::string rec_s = row.recomputed ? num(*row.recomputed) : "-";
    std::string rel = "-";
    if (row.reported && row.recomputed && *row.reported != 0.0 && std::isfinite(*row.recomputed))
      rel = num((*row.recomputed - *row.reported) / std::abs(*row.reported));
    std::snprintf(buf, sizeof buf, "%-42s %-16s %-16s %-12s %s\n", row.quantity.c_str(), rep_s.c_str(),
                  rec_s.c_str(), rel.c_str(), row.note.c_str());
    os << buf;
  }
  return os.str();
}

}  // namespace funnelsim
