// Command-line driver. Links only the C interface of libfunnelsim.
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "funnelsim/funnelsim.h"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSynthesis = 3;
constexpr int kExitIntegration = 4;

struct ScenarioDeleter {
  void operator()(fs_scenario* p) const { fs_scenario_free(p); }
};
struct TraceDeleter {
  void operator()(fs_trace* p) const { fs_trace_free(p); }
};
struct ReportDeleter {
  void operator()(fs_report* p) const { fs_report_free(p); }
};
using ScenarioPtr = std::unique_ptr<fs_scenario, ScenarioDeleter>;
using TracePtr = std::unique_ptr<fs_trace, TraceDeleter>;
using ReportPtr = std::unique_ptr<fs_report, ReportDeleter>;

// Carries the exit code of a failed library call up to main.
struct Failure {
  int code;
};

int exit_code_for(fs_status st) {
  switch (st) {
    case FS_OK: return kExitOk;
    case FS_ERR_SYSTEM_CLASS:
    case FS_ERR_SYNTHESIS: return kExitSynthesis;
    case FS_ERR_INTEGRATION: return kExitIntegration;
    default: return kExitConfig;
  }
}

void check(fs_status st) {
  if (st == FS_OK) return;
  std::cerr << "error: " << fs_last_error_message() << '\n';
  throw Failure{exit_code_for(st)};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  fs_string_free(s);
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) {
    std::cerr << "error: cannot write " << path.string() << '\n';
    throw Failure{kExitConfig};
  }
}

struct Options {
  std::string command;
  std::string config;
  std::string preset;
  std::string trace;
  std::string out = ".";
  std::uint64_t seed = 1;
  int trials = 1000;
};

ScenarioPtr load(const Options& o) {
  fs_scenario* sc = nullptr;
  if (!o.config.empty())
    check(fs_scenario_from_file(o.config.c_str(), &sc));
  else if (!o.preset.empty())
    check(fs_scenario_from_preset(o.preset.c_str(), &sc));
  else {
    std::cerr << "error: --config or --preset is required for '" << o.command << "'\n";
    throw Failure{kExitConfig};
  }
  return ScenarioPtr(sc);
}

std::string design_text(fs_scenario* sc) {
  char* text = nullptr;
  check(fs_scenario_design_report(sc, &text));
  std::string out = take(text);
  if (fs_scenario_is_reference_plant(sc) && fs_scenario_is_synthesized(sc)) {
    check(fs_scenario_discrepancy_report(sc, &text));
    out += take(text);
  }
  return out;
}

std::string report_text(fs_report* rep) {
  char* text = nullptr;
  check(fs_report_text(rep, &text));
  return take(text);
}

TracePtr simulate_and_write(fs_scenario* sc, const fs::path& trace_path) {
  fs_trace* tr = nullptr;
  check(fs_simulate(sc, &tr));
  TracePtr trace(tr);
  check(fs_trace_write(trace.get(), trace_path.string().c_str()));
  return trace;
}

int cmd_synthesize(const Options& o) {
  ScenarioPtr sc = load(o);
  const std::string text = design_text(sc.get());
  write_file(fs::path(o.out) / fs_scenario_report_file(sc.get()), text);
  std::cout << text;
  return kExitOk;
}

int cmd_simulate(const Options& o) {
  ScenarioPtr sc = load(o);
  const fs::path path = fs::path(o.out) / fs_scenario_trace_file(sc.get());
  TracePtr trace = simulate_and_write(sc.get(), path);
  std::cout << "wrote " << fs_trace_size(trace.get()) << " samples to " << path.string() << '\n';
  return kExitOk;
}

int cmd_verify(const Options& o) {
  ScenarioPtr sc = load(o);
  const fs::path trace_path = o.trace.empty() ? fs::path(o.out) / fs_scenario_trace_file(sc.get()) : fs::path(o.trace);
  fs_trace* tr = nullptr;
  check(fs_trace_read(trace_path.string().c_str(), &tr));
  TracePtr trace(tr);
  fs_report* rep = nullptr;
  check(fs_verify(sc.get(), trace.get(), &rep));
  ReportPtr report(rep);
  const std::string text = report_text(report.get());
  write_file(fs::path(o.out) / (std::string(fs_scenario_name(sc.get())) + "_verify.txt"), text);
  std::cout << text;
  return fs_report_all_pass(report.get()) ? kExitOk : kExitVerifyFail;
}

int reproduce_one(const Options& o) {
  ScenarioPtr sc = load(o);
  const std::string name = fs_scenario_name(sc.get());
  std::string text = design_text(sc.get());
  const fs::path trace_path = fs::path(o.out) / fs_scenario_trace_file(sc.get());
  const fs::path report_path = fs::path(o.out) / fs_scenario_report_file(sc.get());
  int code = kExitOk;
  try {
    TracePtr trace = simulate_and_write(sc.get(), trace_path);
    fs_report* rep = nullptr;
    check(fs_verify(sc.get(), trace.get(), &rep));
    ReportPtr checks(rep);
    text += "# trace checks\n" + report_text(checks.get());
    if (!fs_report_all_pass(checks.get())) code = kExitVerifyFail;
  } catch (const Failure& f) {
    text += std::string("# simulation failed: ") + fs_last_error_message() + "\n";
    write_file(report_path, text);
    std::cout << text;
    return f.code;
  }
  fs_report* rep = nullptr;
  check(fs_verify_properties(sc.get(), o.seed, o.trials, &rep));
  ReportPtr props(rep);
  text += "# property checks (seed " + std::to_string(o.seed) + ")\n" + report_text(props.get());
  if (!fs_report_all_pass(props.get()) && code == kExitOk) code = kExitVerifyFail;
  write_file(report_path, text);
  std::cout << "## " << name << '\n' << text;
  return code;
}

int cmd_reproduce(const Options& o) {
  if (!o.config.empty() || !o.preset.empty()) return reproduce_one(o);
  int worst = kExitOk;
  for (const char* preset : {"scenario_a", "scenario_b"}) {
    Options each = o;
    each.preset = preset;
    int code;
    try {
      code = reproduce_one(each);
    } catch (const Failure& f) {
      code = f.code;
    }
    worst = std::max(worst, code);
  }
  return worst;
}

int cmd_plot(const Options& o) {
  fs::path trace_path;
  if (!o.trace.empty()) {
    trace_path = o.trace;
  } else {
    ScenarioPtr sc = load(o);
    trace_path = fs::path(o.out) / fs_scenario_trace_file(sc.get());
  }
  fs_trace* tr = nullptr;
  check(fs_trace_read(trace_path.string().c_str(), &tr));
  TracePtr trace(tr);
  check(fs_trace_write_plot_data(trace.get(), o.out.c_str(), trace_path.stem().string().c_str()));
  std::cout << "wrote plot data for " << trace_path.string() << " to " << o.out << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Funnel control synthesis, simulation and verification"};
  Options o;
  app.add_option("command", o.command, "synthesize | simulate | verify | reproduce | plot")
      ->required()
      ->check(CLI::IsMember({"synthesize", "simulate", "verify", "reproduce", "plot"}));
  app.add_option("--config", o.config, "scenario JSON file");
  app.add_option("--preset", o.preset, "built-in scenario")->check(CLI::IsMember({"scenario_a", "scenario_b"}));
  app.add_option("--seed", o.seed, "seed for the property checks");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--trace", o.trace, "trace CSV (verify, plot)");
  app.add_option("--trials", o.trials, "trials per property check")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    std::error_code ec;
    fs::create_directories(o.out, ec);
    if (o.command == "synthesize") return cmd_synthesize(o);
    if (o.command == "simulate") return cmd_simulate(o);
    if (o.command == "verify") return cmd_verify(o);
    if (o.command == "reproduce") return cmd_reproduce(o);
    return cmd_plot(o);
  } catch (const Failure& f) {
    return f.code;
  }
}
