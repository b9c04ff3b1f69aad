#include "funnelsim/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "funnelsim/error.hpp"
#include "funnelsim/log.hpp"

namespace funnelsim {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigError, path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  require_object(j, path);
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) fail(join(path, it.key()), "unknown key");
}

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

const json& need(const json& j, const std::string& path, const char* key) {
  const json* v = find(j, key);
  if (!v) fail(join(path, key), "missing");
  return *v;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

double number(const json& j, const std::string& path, const char* key) {
  return as_number(need(j, path, key), join(path, key));
}

std::optional<double> opt_number(const json& j, const std::string& path, const char* key) {
  const json* v = find(j, key);
  if (!v) return std::nullopt;
  return as_number(*v, join(path, key));
}

double positive(double v, const std::string& path) {
  if (!(v > 0.0)) fail(path, "must be positive");
  return v;
}

int integer(const json& j, const std::string& path, const char* key) {
  const json& v = need(j, path, key);
  if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
  return v.get<int>();
}

std::string string(const json& j, const std::string& path, const char* key) {
  const json& v = need(j, path, key);
  if (!v.is_string()) fail(join(path, key), "expected a string");
  return v.get<std::string>();
}

Vector vector_of(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = as_number(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

// Row-major nested arrays; [] is an empty matrix.
Matrix matrix_of(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of rows");
  if (v.empty()) return Matrix(0, 0);
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != cols) fail(row_path, "rows must be arrays of equal length");
    for (std::size_t j = 0; j < cols; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          as_number(v[i][j], row_path + "[" + std::to_string(j) + "]");
  }
  return out;
}

// Accepts a number or the string "design".
DesignLinked linked(const json& j, const std::string& path, const char* key) {
  const json& v = need(j, path, key);
  if (v.is_string()) {
    if (v.get<std::string>() != "design") fail(join(path, key), "expected a number or \"design\"");
    return std::nullopt;
  }
  return positive(as_number(v, join(path, key)), join(path, key));
}

SystemConfig parse_system(const json& j) {
  const std::string path = "system";
  require_object(j, path);
  SystemConfig sys;
  const std::string mode = string(j, path, "mode");
  if (mode == "mass_on_car") {
    allow_keys(j, path, {"mode", "m1", "m2", "k", "d", "theta", "x0"});
    sys.mode = SystemConfig::Mode::MassOnCar;
    sys.car.m1 = number(j, path, "m1");
    sys.car.m2 = number(j, path, "m2");
    sys.car.k = number(j, path, "k");
    sys.car.d = number(j, path, "d");
    sys.car.theta = number(j, path, "theta");
    sys.x0 = find(j, "x0") ? vector_of(*find(j, "x0"), join(path, "x0")) : Vector::Zero(4);
    if (sys.x0.size() != 4) fail(join(path, "x0"), "needs 4 entries (z, s, z', s')");
  } else if (mode == "state_space") {
    allow_keys(j, path, {"mode", "A", "B", "C", "x0"});
    sys.mode = SystemConfig::Mode::StateSpace;
    const Matrix a = matrix_of(need(j, path, "A"), join(path, "A"));
    const Matrix b = matrix_of(need(j, path, "B"), join(path, "B"));
    const Matrix c = matrix_of(need(j, path, "C"), join(path, "C"));
    try {
      sys.ss = StateSpace(a, b, c);
    } catch (const Error& e) {
      fail(path, e.what());
    }
    sys.x0 = find(j, "x0") ? vector_of(*find(j, "x0"), join(path, "x0")) : Vector::Zero(a.rows());
    if (sys.x0.size() != a.rows()) fail(join(path, "x0"), "dimension does not match A");
  } else if (mode == "normal_form") {
    allow_keys(j, path, {"mode", "r", "R", "S", "P", "Q", "Gamma", "y0", "eta0"});
    sys.mode = SystemConfig::Mode::NormalForm;
    NormalForm& nf = sys.nf;
    nf.r = integer(j, path, "r");
    if (nf.r < 1) fail(join(path, "r"), "must be >= 1");
    nf.gamma = matrix_of(need(j, path, "Gamma"), join(path, "Gamma"));
    nf.m = nf.gamma.rows();
    if (nf.m < 1 || nf.gamma.cols() != nf.m) fail(join(path, "Gamma"), "must be square and non-empty");
    const json& rb = need(j, path, "R");
    if (!rb.is_array() || static_cast<int>(rb.size()) != nf.r) fail(join(path, "R"), "needs r blocks");
    for (std::size_t i = 0; i < rb.size(); ++i) {
      Matrix block = matrix_of(rb[i], join(path, "R") + "[" + std::to_string(i) + "]");
      if (block.rows() != nf.m || block.cols() != nf.m) fail(join(path, "R"), "blocks must be m x m");
      nf.r_blocks.push_back(std::move(block));
    }
    nf.q = find(j, "Q") ? matrix_of(*find(j, "Q"), join(path, "Q")) : Matrix(0, 0);
    const Eigen::Index k = nf.q.rows();
    nf.s = find(j, "S") ? matrix_of(*find(j, "S"), join(path, "S")) : Matrix(nf.m, 0);
    nf.p = find(j, "P") ? matrix_of(*find(j, "P"), join(path, "P")) : Matrix(0, nf.m);
    if (k == 0) {
      nf.s.resize(nf.m, 0);
      nf.p.resize(0, nf.m);
    }
    nf.n = nf.r * nf.m + k;
    try {
      nf.validate();
    } catch (const Error& e) {
      fail(path, e.what());
    }
    if (const json* y0 = find(j, "y0")) {
      if (!y0->is_array() || static_cast<int>(y0->size()) != nf.r) fail(join(path, "y0"), "needs r vectors");
      for (std::size_t i = 0; i < y0->size(); ++i) {
        Vector v = vector_of((*y0)[i], join(path, "y0") + "[" + std::to_string(i) + "]");
        if (v.size() != nf.m) fail(join(path, "y0"), "vectors must have m entries");
        sys.y0.push_back(std::move(v));
      }
    } else {
      sys.y0.assign(static_cast<std::size_t>(nf.r), Vector::Zero(nf.m));
    }
    sys.eta0 = find(j, "eta0") ? vector_of(*find(j, "eta0"), join(path, "eta0")) : Vector::Zero(k);
    if (sys.eta0.size() != k) fail(join(path, "eta0"), "dimension does not match Q");
  } else {
    fail(join(path, "mode"), "unknown mode '" + mode + "'");
  }
  return sys;
}

ReferenceSignal parse_reference(const json& j) {
  const std::string path = "reference";
  require_object(j, path);
  const std::string family = string(j, path, "family");
  if (family == "constant") {
    allow_keys(j, path, {"family", "value"});
    return ReferenceSignal::constant(vector_of(need(j, path, "value"), join(path, "value")));
  }
  if (family == "sinusoid") {
    allow_keys(j, path, {"family", "amplitude", "omega", "phase"});
    const Vector amp = vector_of(need(j, path, "amplitude"), join(path, "amplitude"));
    const Vector om = vector_of(need(j, path, "omega"), join(path, "omega"));
    const Vector ph = find(j, "phase") ? vector_of(*find(j, "phase"), join(path, "phase")) : Vector::Zero(amp.size());
    if (om.size() != amp.size() || ph.size() != amp.size()) fail(path, "amplitude, omega and phase differ in length");
    return ReferenceSignal::sinusoid(amp, om, ph);
  }
  if (family == "sum_of_sinusoids") {
    allow_keys(j, path, {"family", "components"});
    const json& comps = need(j, path, "components");
    if (!comps.is_array() || comps.empty()) fail(join(path, "components"), "expected a non-empty array");
    std::vector<ReferenceSignal::Component> out;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const std::string cp = join(path, "components") + "[" + std::to_string(i) + "]";
      allow_keys(comps[i], cp, {"offset", "terms"});
      ReferenceSignal::Component c;
      c.offset = opt_number(comps[i], cp, "offset").value_or(0.0);
      if (const json* terms = find(comps[i], "terms")) {
        if (!terms->is_array()) fail(join(cp, "terms"), "expected an array");
        for (std::size_t t = 0; t < terms->size(); ++t) {
          const std::string tp = join(cp, "terms") + "[" + std::to_string(t) + "]";
          allow_keys((*terms)[t], tp, {"amplitude", "omega", "phase"});
          c.terms.push_back(SinusoidTerm{number((*terms)[t], tp, "amplitude"), number((*terms)[t], tp, "omega"),
                                         opt_number((*terms)[t], tp, "phase").value_or(0.0)});
        }
      }
      out.push_back(std::move(c));
    }
    return ReferenceSignal::sum_of_sinusoids(std::move(out));
  }
  fail(join(path, "family"), "unknown family '" + family + "'");
}

AvailabilityConfig parse_availability(const json& j) {
  const std::string path = "availability";
  require_object(j, path);
  AvailabilityConfig av;
  if (const json* g = find(j, "generator")) {
    allow_keys(j, path, {"generator", "start", "loss", "available", "count"});
    if (!g->is_string() || g->get<std::string>() != "periodic") fail(join(path, "generator"), "only \"periodic\"");
    av.kind = AvailabilityConfig::Kind::Periodic;
    av.start = linked(j, path, "start");
    av.loss = linked(j, path, "loss");
    av.available = linked(j, path, "available");
    av.count = integer(j, path, "count");
    if (av.count < 0) fail(join(path, "count"), "must be >= 0");
    return av;
  }
  allow_keys(j, path, {"dropouts"});
  av.kind = AvailabilityConfig::Kind::Dropouts;
  const json& d = need(j, path, "dropouts");
  if (!d.is_array()) fail(join(path, "dropouts"), "expected an array of [t_minus, t_plus] pairs");
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::string ip = join(path, "dropouts") + "[" + std::to_string(i) + "]";
    const Vector pair = vector_of(d[i], ip);
    if (pair.size() != 2) fail(ip, "expected [t_minus, t_plus]");
    av.dropouts.push_back({pair(0), pair(1)});
  }
  return av;
}

DesignConfig parse_design(const json& j) {
  const std::string path = "design";
  require_object(j, path);
  DesignConfig dc;
  const std::string mode = find(j, "mode") ? string(j, path, "mode") : "synthesize";
  if (mode == "fixed") {
    allow_keys(j, path, {"mode", "a", "b", "c", "beta"});
    dc.mode = DesignConfig::Mode::Fixed;
    try {
      dc.fixed = FunnelSpec(number(j, path, "a"), number(j, path, "b"), number(j, path, "c"));
    } catch (const Error& e) {
      fail(path, e.what());
    }
    dc.beta = opt_number(j, path, "beta");
    return dc;
  }
  if (mode != "synthesize") fail(join(path, "mode"), "expected \"synthesize\" or \"fixed\"");
  allow_keys(j, path, {"mode", "q", "theta", "beta", "Delta", "delta", "eta_star", "rho", "phi0_0", "a", "b", "c"});
  SynthesisOptions& o = dc.synth;
  o.q = opt_number(j, path, "q").value_or(o.q);
  o.theta = opt_number(j, path, "theta").value_or(o.theta);
  o.beta = opt_number(j, path, "beta");
  o.delta_loss = opt_number(j, path, "Delta");
  o.delta_avail = opt_number(j, path, "delta");
  o.eta_star = opt_number(j, path, "eta_star");
  o.rho = opt_number(j, path, "rho");
  o.funnel.phi0_0 = opt_number(j, path, "phi0_0");
  o.funnel.a = opt_number(j, path, "a");
  o.funnel.b = opt_number(j, path, "b");
  o.funnel.c = opt_number(j, path, "c");
  return dc;
}

void parse_sim(const json& j, ScenarioConfig& cfg) {
  const std::string path = "sim";
  allow_keys(j, path, {"t_end", "rtol", "atol", "output_dt", "h_min", "record_steps"});
  cfg.t_end = positive(number(j, path, "t_end"), join(path, "t_end"));
  SimOptions& s = cfg.sim;
  if (auto v = opt_number(j, path, "rtol")) s.rtol = positive(*v, join(path, "rtol"));
  if (auto v = opt_number(j, path, "atol")) s.atol = positive(*v, join(path, "atol"));
  if (auto v = opt_number(j, path, "output_dt")) s.output_dt = positive(*v, join(path, "output_dt"));
  if (auto v = opt_number(j, path, "h_min")) s.h_min = positive(*v, join(path, "h_min"));
  if (const json* v = find(j, "record_steps")) {
    if (!v->is_boolean()) fail(join(path, "record_steps"), "expected a boolean");
    s.record_steps = v->get<bool>();
  }
}

void parse_output(const json& j, ScenarioConfig& cfg) {
  const std::string path = "output";
  allow_keys(j, path, {"trace", "report"});
  if (find(j, "trace")) cfg.trace_file = string(j, path, "trace");
  if (find(j, "report")) cfg.report_file = string(j, path, "report");
}

constexpr const char* kScenarioA = R"({
  "name": "scenario_a",
  "system": {"mode": "mass_on_car", "m1": 4, "m2": 1, "k": 2, "d": 1,
             "theta": 0.7853981633974483, "x0": [0, 0, 0, 0]},
  "reference": {"family": "sinusoid", "amplitude": [1], "omega": [1], "phase": [0]},
  "availability": {"generator": "periodic", "start": "design", "loss": "design",
                   "available": "design", "count": 2},
  "design": {"mode": "synthesize", "q": 0.95, "theta": 0.9},
  "sim": {"t_end": 60, "rtol": 1e-8, "atol": 1e-10, "output_dt": 1e-3},
  "output": {"trace": "scenario_a_trace.csv", "report": "scenario_a_report.txt"}
})";

constexpr const char* kScenarioB = R"({
  "name": "scenario_b",
  "system": {"mode": "mass_on_car", "m1": 4, "m2": 1, "k": 2, "d": 1,
             "theta": 0.7853981633974483, "x0": [0, 0, 0, 0]},
  "reference": {"family": "sinusoid", "amplitude": [1], "omega": [1], "phase": [0]},
  "availability": {"dropouts": [[3, 5], [8, 10]]},
  "design": {"mode": "fixed", "a": 5, "b": 1, "c": 0.2},
  "sim": {"t_end": 60, "rtol": 1e-8, "atol": 1e-10, "output_dt": 1e-3},
  "output": {"trace": "scenario_b_trace.csv", "report": "scenario_b_report.txt"}
})";

}  // namespace

std::string mode_name(SystemConfig::Mode mode) {
  switch (mode) {
    case SystemConfig::Mode::StateSpace: return "state_space";
    case SystemConfig::Mode::NormalForm: return "normal_form";
    case SystemConfig::Mode::MassOnCar: return "mass_on_car";
  }
  return "?";
}

ScenarioConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    // Includes number overflow, which nlohmann reports as out_of_range.
    throw Error(ErrorCode::ConfigError, std::string("invalid JSON: ") + e.what());
  }
  allow_keys(j, "", {"name", "system", "reference", "availability", "design", "sim", "output"});
  ScenarioConfig cfg;
  if (find(j, "name")) cfg.name = string(j, "", "name");
  cfg.system = parse_system(need(j, "", "system"));
  cfg.reference = parse_reference(need(j, "", "reference"));
  if (const json* av = find(j, "availability")) cfg.availability = parse_availability(*av);
  if (const json* d = find(j, "design")) cfg.design = parse_design(*d);
  parse_sim(need(j, "", "sim"), cfg);
  if (const json* o = find(j, "output")) parse_output(*o, cfg);
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> preset_names() { return {"scenario_a", "scenario_b"}; }

std::string preset_json(const std::string& name) {
  if (name == "scenario_a") return kScenarioA;
  if (name == "scenario_b") return kScenarioB;
  throw Error(ErrorCode::ConfigError, "unknown preset '" + name + "'");
}

ScenarioConfig preset_config(const std::string& name) { return parse_config(preset_json(name)); }

Scenario prepare_scenario(const ScenarioConfig& config) {
  Scenario sc;
  sc.config = config;
  const SystemConfig& sys = config.system;

  Vector chain_eta;
  switch (sys.mode) {
    case SystemConfig::Mode::MassOnCar: {
      const MassOnCarParams& p = sys.car;
      sc.nf = mass_on_car_normal_form(p.m1, p.m2, p.k, p.d, p.theta);
      chain_eta = sc.nf.to_normal_coordinates(sys.x0);
      break;
    }
    case SystemConfig::Mode::StateSpace:
      sc.nf = to_normal_form(sys.ss);
      chain_eta = sc.nf.to_normal_coordinates(sys.x0);
      break;
    case SystemConfig::Mode::NormalForm:
      sc.nf = sys.nf;
      break;
  }
  const Eigen::Index m = sc.nf.m;
  if (config.reference.dim() != m)
    throw Error(ErrorCode::ConfigError, "reference has dimension " + std::to_string(config.reference.dim()) +
                                            " but the plant has " + std::to_string(m) + " outputs");
  if (sys.mode == SystemConfig::Mode::NormalForm) {
    sc.ic.y_derivs = sys.y0;
    sc.ic.eta = sys.eta0;
  } else {
    for (int i = 0; i < sc.nf.r; ++i) sc.ic.y_derivs.push_back(chain_eta.segment(i * m, m));
    sc.ic.eta = chain_eta.tail(sc.nf.internal_dim());
  }

  if (config.design.mode == DesignConfig::Mode::Synthesize)
    sc.design = synthesize(sc.nf, config.reference, sc.ic, config.design.synth);
  else
    sc.design = fixed_design(sc.nf, config.reference, sc.ic, config.design.fixed, config.design.beta);
  sc.cc = sc.design.cc;

  const AvailabilityConfig& av = config.availability;
  try {
    if (av.kind == AvailabilityConfig::Kind::Periodic) {
      const bool needs_design = !av.start || !av.loss || !av.available;
      if (needs_design && !sc.design.synthesized)
        throw Error(ErrorCode::ConfigError, "availability values \"design\" need a synthesized design");
      const double start = av.start.value_or(sc.design.delta_avail);
      const double loss = av.loss.value_or(sc.design.delta_loss);
      const double available = av.available.value_or(sc.design.delta_avail);
      sc.schedule = AvailabilitySchedule::periodic(start, loss, available, av.count, config.t_end);
    } else {
      sc.schedule = AvailabilitySchedule(av.dropouts, config.t_end);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, std::string("availability: ") + e.what());
  }
  if (sc.design.synthesized) {
    sc.warnings = sc.schedule.limit_warnings(sc.design.delta_loss, sc.design.delta_avail);
    for (const auto& w : sc.warnings) log::warn(w);
  }
  return sc;
}

}  // namespace funnelsim
