#include "funnelsim/funnelsim.h"

#include <cstdio>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "funnelsim/config.hpp"
#include "funnelsim/error.hpp"
#include "funnelsim/log.hpp"
#include "funnelsim/plot.hpp"
#include "funnelsim/report.hpp"
#include "funnelsim/simulator.hpp"
#include "funnelsim/verify.hpp"

struct fs_scenario {
  funnelsim::Scenario sc;
};

struct fs_trace {
  funnelsim::Trace trace;
};

struct fs_report {
  funnelsim::VerificationReport report;
};

namespace {

using funnelsim::ErrorCode;

thread_local std::string g_code;
thread_local std::string g_message;

fs_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return FS_ERR_INVALID_ARGUMENT;
    case ErrorCode::ConfigError: return FS_ERR_CONFIG;
    case ErrorCode::TraceFormatError: return FS_ERR_TRACE_FORMAT;
    case ErrorCode::IoError: return FS_ERR_IO;
    case ErrorCode::NoRelativeDegree:
    case ErrorCode::AmbiguousZero:
    case ErrorCode::TransformSingular:
    case ErrorCode::NotHurwitz:
    case ErrorCode::IndefiniteGamma:
    case ErrorCode::SingularMassMatrix: return FS_ERR_SYSTEM_CLASS;
    case ErrorCode::InvalidQ:
    case ErrorCode::DeltaTooLarge:
    case ErrorCode::AvailabilityTooShort:
    case ErrorCode::InfeasibleEtaStar:
    case ErrorCode::EmptyWindow:
    case ErrorCode::CiOverflow:
    case ErrorCode::InfeasibleRefinement:
    case ErrorCode::TemplateRejected:
    case ErrorCode::DegenerateCertificate:
    case ErrorCode::InitialConditionViolated:
    case ErrorCode::MissingLimits: return FS_ERR_SYNTHESIS;
    case ErrorCode::NonMonotoneTime:
    case ErrorCode::FunnelViolation:
    case ErrorCode::StepUnderflow: return FS_ERR_INTEGRATION;
  }
  return FS_ERR_INTERNAL;
}

fs_status set_error(fs_status st, std::string code, std::string message) {
  g_code = std::move(code);
  g_message = std::move(message);
  return st;
}

template <class F>
fs_status guarded(F&& body) {
  try {
    body();
    return FS_OK;
  } catch (const funnelsim::Error& e) {
    return set_error(status_of(e.code()), std::string(funnelsim::error_code_name(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(FS_ERR_INTERNAL, "OutOfMemory", "allocation failed");
  } catch (const std::exception& e) {
    return set_error(FS_ERR_INTERNAL, "Internal", e.what());
  }
}

fs_status null_argument(const char* what) {
  return set_error(FS_ERR_INVALID_ARGUMENT, "InvalidArgument", std::string("null argument: ") + what);
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

#define FS_REQUIRE(ptr) \
  if (!(ptr)) return null_argument(#ptr)

fs_status make_scenario(const funnelsim::ScenarioConfig& cfg, fs_scenario** out) {
  auto* sc = new fs_scenario{funnelsim::prepare_scenario(cfg)};
  *out = sc;
  return FS_OK;
}

}  // namespace

extern "C" {

const char* fs_version(void) { return "0.1.0"; }

const char* fs_last_error_code(void) { return g_code.c_str(); }
const char* fs_last_error_message(void) { return g_message.c_str(); }

void fs_set_log_level(int level) {
  if (level < 0) level = 0;
  if (level > 3) level = 3;
  funnelsim::log::set_threshold(static_cast<funnelsim::log::Level>(level));
}

void fs_string_free(char* s) { delete[] s; }

fs_status fs_scenario_from_file(const char* path, fs_scenario** out) {
  FS_REQUIRE(path);
  FS_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { make_scenario(funnelsim::load_config(path), out); });
}

fs_status fs_scenario_from_json(const char* json_text, fs_scenario** out) {
  FS_REQUIRE(json_text);
  FS_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { make_scenario(funnelsim::parse_config(json_text), out); });
}

fs_status fs_scenario_from_preset(const char* name, fs_scenario** out) {
  FS_REQUIRE(name);
  FS_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { make_scenario(funnelsim::preset_config(name), out); });
}

void fs_scenario_free(fs_scenario* sc) { delete sc; }

const char* fs_preset_names(void) { return "scenario_a,scenario_b"; }

const char* fs_scenario_name(const fs_scenario* sc) { return sc ? sc->sc.config.name.c_str() : ""; }
const char* fs_scenario_trace_file(const fs_scenario* sc) { return sc ? sc->sc.config.trace_file.c_str() : ""; }
const char* fs_scenario_report_file(const fs_scenario* sc) { return sc ? sc->sc.config.report_file.c_str() : ""; }
int fs_scenario_is_synthesized(const fs_scenario* sc) { return sc && sc->sc.design.synthesized ? 1 : 0; }
int fs_scenario_is_reference_plant(const fs_scenario* sc) {
  return sc && funnelsim::is_reference_mass_on_car(sc->sc.config) ? 1 : 0;
}

fs_status fs_scenario_get(const fs_scenario* sc, const char* key, double* value) {
  FS_REQUIRE(sc);
  FS_REQUIRE(key);
  FS_REQUIRE(value);
  const funnelsim::DesignParams& d = sc->sc.design;
  const std::string k = key;
  if (k == "r") *value = d.r;
  else if (k == "m") *value = static_cast<double>(d.m);
  else if (k == "M") *value = d.cc.big_m;
  else if (k == "mu") *value = d.cc.mu;
  else if (k == "beta") *value = d.cc.beta;
  else if (k == "q") *value = d.q;
  else if (k == "A_r") *value = d.a_r;
  else if (k == "Delta") *value = d.delta_loss;
  else if (k == "delta") *value = d.delta_avail;
  else if (k == "delta_min") *value = d.delta_min;
  else if (k == "eta_star") *value = d.eta_star;
  else if (k == "phi0_min") *value = d.window.phi0_min;
  else if (k == "phi0_max") *value = d.window.phi0_max;
  else if (k == "phi0_0") *value = d.phi0_0;
  else if (k == "a") *value = d.funnel.a;
  else if (k == "b") *value = d.funnel.b;
  else if (k == "c") *value = d.funnel.c;
  else if (k == "rho") *value = d.rho;
  else if (k == "chi") *value = d.gains.chi;
  else if (k == "c_r") *value = d.cert.c_r;
  else if (k == "U_max") *value = d.cert.u_max;
  else if (k == "eta_bar") *value = d.cert.eta_bar;
  else if (k == "t_end") *value = sc->sc.config.t_end;
  else return set_error(FS_ERR_INVALID_ARGUMENT, "InvalidArgument", "unknown key " + k);
  return FS_OK;
}

fs_status fs_scenario_design_report(const fs_scenario* sc, char** text) {
  FS_REQUIRE(sc);
  FS_REQUIRE(text);
  *text = nullptr;
  return guarded([&] { *text = dup_string(funnelsim::design_report(sc->sc)); });
}

fs_status fs_scenario_discrepancy_report(const fs_scenario* sc, char** text) {
  FS_REQUIRE(sc);
  FS_REQUIRE(text);
  *text = nullptr;
  return guarded(
      [&] { *text = dup_string(funnelsim::discrepancy_text(funnelsim::discrepancy_table(sc->sc))); });
}

fs_status fs_simulate(const fs_scenario* sc, fs_trace** out) {
  FS_REQUIRE(sc);
  FS_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    const funnelsim::Scenario& s = sc->sc;
    *out = new fs_trace{funnelsim::integrate(s.nf, s.cc, s.design, s.schedule, s.config.reference, s.ic,
                                             s.config.sim)};
  });
}

fs_status fs_trace_read(const char* path, fs_trace** out) {
  FS_REQUIRE(path);
  FS_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new fs_trace{funnelsim::read_trace_csv(std::string(path))}; });
}

fs_status fs_trace_write(const fs_trace* trace, const char* path) {
  FS_REQUIRE(trace);
  FS_REQUIRE(path);
  return guarded([&] { funnelsim::write_trace_csv(trace->trace, std::string(path)); });
}

void fs_trace_free(fs_trace* trace) { delete trace; }

size_t fs_trace_size(const fs_trace* trace) { return trace ? trace->trace.samples.size() : 0; }

fs_status fs_trace_sample(const fs_trace* trace, size_t index, fs_sample* out) {
  FS_REQUIRE(trace);
  FS_REQUIRE(out);
  if (index >= trace->trace.samples.size())
    return set_error(FS_ERR_INVALID_ARGUMENT, "InvalidArgument", "sample index out of range");
  const funnelsim::TraceSample& s = trace->trace.samples[index];
  *out = fs_sample{s.t, s.a, s.tau, s.phi, s.e_norm, s.u_norm, s.eta_norm};
  return FS_OK;
}

void fs_trace_dims(const fs_trace* trace, int* r, int* m, int* k) {
  if (!trace) return;
  if (r) *r = trace->trace.r;
  if (m) *m = static_cast<int>(trace->trace.m);
  if (k) *k = static_cast<int>(trace->trace.k);
}

fs_status fs_trace_write_plot_data(const fs_trace* trace, const char* dir, const char* stem) {
  FS_REQUIRE(trace);
  FS_REQUIRE(dir);
  FS_REQUIRE(stem);
  return guarded([&] { funnelsim::write_plot_files(trace->trace, dir, stem); });
}

fs_status fs_verify(const fs_scenario* sc, const fs_trace* trace, fs_report** out) {
  FS_REQUIRE(sc);
  FS_REQUIRE(trace);
  FS_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    const funnelsim::Scenario& s = sc->sc;
    if (trace->trace.r != s.nf.r || trace->trace.m != s.nf.m || trace->trace.k != s.nf.internal_dim())
      throw funnelsim::Error(ErrorCode::TraceFormatError, "trace dimensions do not match the scenario");
    *out = new fs_report{funnelsim::verify_trace(trace->trace, s.design, s.cc, s.config.t_end)};
  });
}

fs_status fs_verify_properties(const fs_scenario* sc, uint64_t seed, int trials, fs_report** out) {
  FS_REQUIRE(sc);
  FS_REQUIRE(out);
  *out = nullptr;
  if (trials < 1) return set_error(FS_ERR_INVALID_ARGUMENT, "InvalidArgument", "trials must be >= 1");
  return guarded([&] {
    funnelsim::VerificationReport rep;
    for (int r = 1; r <= 3; ++r) {
      for (double q : {0.5, 0.9, 0.95}) {
        funnelsim::CheckResult c = funnelsim::lemma_ar_property(seed, r, q, trials);
        char suffix[16];
        std::snprintf(suffix, sizeof suffix, "_q%.2f", q);
        c.name += suffix;
        rep.checks.push_back(std::move(c));
      }
    }
    for (int r = 1; r <= 3; ++r) rep.checks.push_back(funnelsim::cascade_rho_equivalence(seed, r, trials));
    for (auto& c : funnelsim::design_substitution(sc->sc.design)) rep.checks.push_back(std::move(c));
    *out = new fs_report{std::move(rep)};
  });
}

void fs_report_free(fs_report* report) { delete report; }

int fs_report_all_pass(const fs_report* report) { return report && report->report.all_pass() ? 1 : 0; }

size_t fs_report_size(const fs_report* report) { return report ? report->report.checks.size() : 0; }

fs_status fs_report_check(const fs_report* report, size_t index, const char** name, int* pass, double* margin,
                          double* at) {
  FS_REQUIRE(report);
  if (index >= report->report.checks.size())
    return set_error(FS_ERR_INVALID_ARGUMENT, "InvalidArgument", "check index out of range");
  const funnelsim::CheckResult& c = report->report.checks[index];
  if (name) *name = c.name.c_str();
  if (pass) *pass = c.pass ? 1 : 0;
  if (margin) *margin = c.margin;
  if (at) *at = c.at;
  return FS_OK;
}

fs_status fs_report_text(const fs_report* report, char** text) {
  FS_REQUIRE(report);
  FS_REQUIRE(text);
  *text = nullptr;
  return guarded([&] { *text = dup_string(report->report.to_text()); });
}

}  // extern "C"
