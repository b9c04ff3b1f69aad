#include "funnelsim/plot.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>

#include "funnelsim/error.hpp"

namespace funnelsim {

namespace {

void put(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.11e", v);
  out << buf;
}

void write_blocks(const Trace& trace, std::ostream& out, const std::string& header,
                  const std::function<void(const TraceSample&)>& row) {
  out << "# " << header << '\n';
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    if (i > 0 && trace.samples[i].a != trace.samples[i - 1].a) out << '\n';
    row(trace.samples[i]);
    out << '\n';
  }
}

}  // namespace

void write_error_columns(const Trace& trace, std::ostream& out) {
  write_blocks(trace, out, "t\ta\te_norm\tpsi\tminus_psi", [&](const TraceSample& s) {
    put(out, s.t);
    out << '\t' << s.a << '\t';
    put(out, s.e_norm);
    out << '\t';
    if (s.a == 1 && s.phi > 0.0) put(out, s.psi());
    out << '\t';
    if (s.a == 1 && s.phi > 0.0) put(out, -s.psi());
  });
}

void write_input_columns(const Trace& trace, std::ostream& out) {
  std::string header = "t";
  for (Eigen::Index j = 1; j <= trace.m; ++j) header += "\tu_" + std::to_string(j);
  write_blocks(trace, out, header + "\tu_norm", [&](const TraceSample& s) {
    put(out, s.t);
    for (Eigen::Index j = 0; j < s.u.size(); ++j) out << '\t', put(out, s.u(j));
    out << '\t';
    put(out, s.u_norm);
  });
}

void write_internal_columns(const Trace& trace, std::ostream& out) {
  std::string header = "t";
  for (Eigen::Index j = 1; j <= trace.k; ++j) header += "\teta_" + std::to_string(j);
  write_blocks(trace, out, header + "\teta_norm", [&](const TraceSample& s) {
    put(out, s.t);
    for (Eigen::Index j = 0; j < s.eta.size(); ++j) out << '\t', put(out, s.eta(j));
    out << '\t';
    put(out, s.eta_norm);
  });
}

void write_plot_files(const Trace& trace, const std::string& dir, const std::string& stem) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  const auto write = [&](const char* suffix, void (*fn)(const Trace&, std::ostream&)) {
    const std::string path = (fs::path(dir) / (stem + suffix)).string();
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    fn(trace, out);
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
  };
  write("_error.dat", write_error_columns);
  write("_input.dat", write_input_columns);
  write("_internal.dat", write_internal_columns);
}

}  // namespace funnelsim
