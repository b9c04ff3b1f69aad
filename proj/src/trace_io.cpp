#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "funnelsim/error.hpp"
#include "funnelsim/simulator.hpp"

namespace funnelsim {

namespace {

void put(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.11e", v);
  out << buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void bad(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::TraceFormatError, "line " + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& field, std::size_t line, const std::string& column) {
  if (field.empty()) bad(line, "empty field in column " + column);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || errno == ERANGE || !std::isfinite(v))
    bad(line, "cannot parse '" + field + "' in column " + column);
  return v;
}

}  // namespace

void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << "t,a,tau,phi,psi";
  for (Eigen::Index j = 1; j <= trace.m; ++j) out << ",y_" << j;
  out << ",e_norm";
  for (int i = 1; i <= trace.r; ++i) out << ",e" << i << "_norm";
  for (Eigen::Index j = 1; j <= trace.m; ++j) out << ",u_" << j;
  out << ",u_norm";
  for (Eigen::Index j = 1; j <= trace.k; ++j) out << ",eta_" << j;
  out << ",eta_norm\n";
  for (const auto& s : trace.samples) {
    put(out, s.t);
    out << ',' << s.a << ',';
    put(out, s.tau);
    out << ',';
    put(out, s.phi);
    out << ',';
    if (s.a == 1 && s.phi > 0.0) put(out, s.psi());
    for (Eigen::Index j = 0; j < trace.m; ++j) out << ',', put(out, s.y(j));
    out << ',';
    put(out, s.e_norm);
    for (int i = 0; i < trace.r; ++i) out << ',', put(out, s.e_stage[i]);
    for (Eigen::Index j = 0; j < trace.m; ++j) out << ',', put(out, s.u(j));
    out << ',';
    put(out, s.u_norm);
    for (Eigen::Index j = 0; j < trace.k; ++j) out << ',', put(out, s.eta(j));
    out << ',';
    put(out, s.eta_norm);
    out << '\n';
  }
}

void write_trace_csv(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_trace_csv(trace, out);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::TraceFormatError, "missing header");
  const std::vector<std::string> header = split(line);

  // Recover m, r and k from the column names and insist on the exact layout.
  Trace tr;
  tr.m = 0;
  tr.r = 0;
  tr.k = 0;
  for (const auto& h : header) {
    if (h.rfind("y_", 0) == 0) ++tr.m;
    if (h.rfind("eta_", 0) == 0 && h != "eta_norm") ++tr.k;
    if (h.size() > 6 && h[0] == 'e' && h.compare(h.size() - 5, 5, "_norm") == 0 && h != "e_norm" &&
        h.rfind("eta", 0) != 0)
      ++tr.r;
  }
  std::vector<std::string> expect{"t", "a", "tau", "phi", "psi"};
  for (Eigen::Index j = 1; j <= tr.m; ++j) expect.push_back("y_" + std::to_string(j));
  expect.push_back("e_norm");
  for (int i = 1; i <= tr.r; ++i) expect.push_back("e" + std::to_string(i) + "_norm");
  for (Eigen::Index j = 1; j <= tr.m; ++j) expect.push_back("u_" + std::to_string(j));
  expect.push_back("u_norm");
  for (Eigen::Index j = 1; j <= tr.k; ++j) expect.push_back("eta_" + std::to_string(j));
  expect.push_back("eta_norm");
  if (tr.m < 1 || tr.r < 1 || header != expect) throw Error(ErrorCode::TraceFormatError, "unexpected header");

  std::size_t lineno = 1;
  bool have_prev = false;
  double prev_t = 0.0;
  bool saw_eof_newline = true;
  while (std::getline(in, line)) {
    ++lineno;
    saw_eof_newline = !in.eof();
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split(line);
    if (f.size() != expect.size())
      bad(lineno, "expected " + std::to_string(expect.size()) + " fields, found " + std::to_string(f.size()));
    TraceSample s;
    std::size_t c = 0;
    auto next = [&]() {
      const std::size_t at = c++;
      return parse_number(f[at], lineno, expect[at]);
    };
    s.t = next();
    const std::string& a_field = f[c++];
    if (a_field != "0" && a_field != "1") bad(lineno, "a must be 0 or 1");
    s.a = a_field == "1" ? 1 : 0;
    s.tau = next();
    s.phi = next();
    const std::string& psi_field = f[c++];
    if (s.a == 1) {
      const double psi = parse_number(psi_field, lineno, "psi");
      if (!(psi > 0.0)) bad(lineno, "psi must be positive when a = 1");
    } else if (!psi_field.empty()) {
      bad(lineno, "psi must be empty when a = 0");
    }
    s.y.resize(tr.m);
    for (Eigen::Index j = 0; j < tr.m; ++j) s.y(j) = next();
    s.e_norm = next();
    for (int i = 0; i < tr.r; ++i) s.e_stage.push_back(next());
    s.u.resize(tr.m);
    for (Eigen::Index j = 0; j < tr.m; ++j) s.u(j) = next();
    s.u_norm = next();
    s.eta.resize(tr.k);
    for (Eigen::Index j = 0; j < tr.k; ++j) s.eta(j) = next();
    s.eta_norm = next();
    if (have_prev && !(s.t > prev_t)) bad(lineno, "time is not strictly increasing");
    have_prev = true;
    prev_t = s.t;
    tr.samples.push_back(std::move(s));
  }
  // A final row without its newline is how an interrupted write looks.
  if (!saw_eof_newline && !tr.samples.empty()) bad(lineno, "last row is not terminated");
  return tr;
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  return read_trace_csv(in);
}

}  // namespace funnelsim
