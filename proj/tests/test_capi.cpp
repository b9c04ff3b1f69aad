// Exercises the shared library through its C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include "funnelsim/funnelsim.h"

namespace {

const char* kScenarioJson = R"({
  "name": "short_b",
  "system": {"mode": "mass_on_car", "m1": 4, "m2": 1, "k": 2, "d": 1,
             "theta": 0.7853981633974483, "x0": [0, 0, 0, 0]},
  "reference": {"family": "sinusoid", "amplitude": [1], "omega": [1], "phase": [0]},
  "availability": {"dropouts": [[1, 2]]},
  "design": {"mode": "fixed", "a": 5, "b": 1, "c": 0.2},
  "sim": {"t_end": 3},
  "output": {"trace": "short_b_trace.csv", "report": "short_b_report.txt"}
})";

std::string take(char* s) {
  std::string out = s ? s : "";
  fs_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("version and presets") {
  CHECK(std::strlen(fs_version()) > 0);
  CHECK(std::string(fs_preset_names()) == "scenario_a,scenario_b");
}

TEST_CASE("null arguments are rejected") {
  fs_scenario* sc = nullptr;
  CHECK(fs_scenario_from_json(nullptr, &sc) == FS_ERR_INVALID_ARGUMENT);
  CHECK(sc == nullptr);
  CHECK(std::string(fs_last_error_code()) == "InvalidArgument");
  CHECK(fs_scenario_from_preset("scenario_b", nullptr) == FS_ERR_INVALID_ARGUMENT);
  double v = 0;
  CHECK(fs_scenario_get(nullptr, "a", &v) == FS_ERR_INVALID_ARGUMENT);
  CHECK(fs_simulate(nullptr, nullptr) == FS_ERR_INVALID_ARGUMENT);
  fs_scenario_free(nullptr);
  fs_trace_free(nullptr);
  fs_report_free(nullptr);
  fs_string_free(nullptr);
}

TEST_CASE("error codes map to status values") {
  fs_scenario* sc = nullptr;
  std::string bad_q = kScenarioJson;
  const std::string fixed = "\"mode\": \"fixed\", \"a\": 5, \"b\": 1, \"c\": 0.2";
  bad_q.replace(bad_q.find(fixed), fixed.size(), "\"mode\": \"synthesize\", \"q\": 1.2");
  CHECK(fs_scenario_from_json(bad_q.c_str(), &sc) == FS_ERR_SYNTHESIS);
  CHECK(std::string(fs_last_error_code()) == "InvalidQ");
  CHECK(std::strlen(fs_last_error_message()) > 0);

  CHECK(fs_scenario_from_json("{\"name\": 1}", &sc) == FS_ERR_CONFIG);
  CHECK(fs_scenario_from_preset("nope", &sc) == FS_ERR_CONFIG);
  CHECK(fs_scenario_from_file("/nonexistent/x.json", &sc) == FS_ERR_CONFIG);

  fs_trace* tr = nullptr;
  CHECK(fs_trace_read("/nonexistent/trace.csv", &tr) == FS_ERR_IO);
}

TEST_CASE("scenario, simulation and reports") {
  fs_scenario* sc = nullptr;
  REQUIRE(fs_scenario_from_json(kScenarioJson, &sc) == FS_OK);
  CHECK(std::string(fs_scenario_name(sc)) == "short_b");
  CHECK(std::string(fs_scenario_trace_file(sc)) == "short_b_trace.csv");
  CHECK(fs_scenario_is_synthesized(sc) == 0);
  CHECK(fs_scenario_is_reference_plant(sc) == 1);

  double v = 0;
  REQUIRE(fs_scenario_get(sc, "a", &v) == FS_OK);
  CHECK(v == 5.0);
  REQUIRE(fs_scenario_get(sc, "r", &v) == FS_OK);
  CHECK(v == 2.0);
  CHECK(fs_scenario_get(sc, "no_such_key", &v) == FS_ERR_INVALID_ARGUMENT);

  char* text = nullptr;
  REQUIRE(fs_scenario_design_report(sc, &text) == FS_OK);
  CHECK(take(text).find("design = fixed") != std::string::npos);
  CHECK(fs_scenario_discrepancy_report(sc, &text) != FS_OK);

  fs_trace* tr = nullptr;
  REQUIRE(fs_simulate(sc, &tr) == FS_OK);
  const size_t n = fs_trace_size(tr);
  CHECK(n > 3000);
  int r = 0, m = 0, k = 0;
  fs_trace_dims(tr, &r, &m, &k);
  CHECK(r == 2);
  CHECK(m == 1);
  CHECK(k == 2);
  fs_sample s;
  REQUIRE(fs_trace_sample(tr, n - 1, &s) == FS_OK);
  CHECK(s.t == doctest::Approx(3.0));
  CHECK(fs_trace_sample(tr, n, &s) == FS_ERR_INVALID_ARGUMENT);

  const auto dir = std::filesystem::temp_directory_path() / "funnelsim_capi_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "t.csv").string();
  REQUIRE(fs_trace_write(tr, path.c_str()) == FS_OK);
  fs_trace* back = nullptr;
  REQUIRE(fs_trace_read(path.c_str(), &back) == FS_OK);
  CHECK(fs_trace_size(back) == n);
  CHECK(fs_trace_write_plot_data(back, dir.string().c_str(), "t") == FS_OK);
  CHECK(std::filesystem::exists(dir / "t_error.dat"));

  fs_report* rep = nullptr;
  REQUIRE(fs_verify(sc, back, &rep) == FS_OK);
  CHECK(fs_report_all_pass(rep) == 1);
  CHECK(fs_report_size(rep) == 4);
  for (size_t i = 0; i < fs_report_size(rep); ++i) {
    const char* name = nullptr;
    int pass = 0;
    double margin = 0, at = 0;
    REQUIRE(fs_report_check(rep, i, &name, &pass, &margin, &at) == FS_OK);
    CHECK(std::strlen(name) > 0);
    CHECK(pass == 1);
  }
  REQUIRE(fs_report_text(rep, &text) == FS_OK);
  CHECK(take(text).rfind("CHECK funnel_containment PASS", 0) == 0);
  fs_report_free(rep);

  REQUIRE(fs_verify_properties(sc, 3, 50, &rep) == FS_OK);
  CHECK(fs_report_all_pass(rep) == 1);
  CHECK(fs_report_size(rep) == 12);
  fs_report_free(rep);

  // A trace of another shape does not fit this scenario.
  std::FILE* f = std::fopen(path.c_str(), "w");
  std::fputs("t,a,tau,phi,psi,y_1,e_norm,e1_norm,u_1,u_norm,eta_norm\n0,1,0,1,1,0,0,0,0,0,0\n", f);
  std::fclose(f);
  fs_trace* other = nullptr;
  REQUIRE(fs_trace_read(path.c_str(), &other) == FS_OK);
  CHECK(fs_verify(sc, other, &rep) == FS_ERR_TRACE_FORMAT);

  fs_trace_free(other);
  fs_trace_free(back);
  fs_trace_free(tr);
  fs_scenario_free(sc);
  std::filesystem::remove_all(dir);
}

TEST_CASE("synthesized preset") {
  fs_scenario* sc = nullptr;
  REQUIRE(fs_scenario_from_preset("scenario_a", &sc) == FS_OK);
  CHECK(fs_scenario_is_synthesized(sc) == 1);
  double chi = 0, phi_max = 0;
  REQUIRE(fs_scenario_get(sc, "chi", &chi) == FS_OK);
  REQUIRE(fs_scenario_get(sc, "phi0_max", &phi_max) == FS_OK);
  CHECK(chi > 1.0);
  CHECK(phi_max > 0.0);
  char* text = nullptr;
  REQUIRE(fs_scenario_discrepancy_report(sc, &text) == FS_OK);
  CHECK(take(text).find("# discrepancy table") != std::string::npos);
  fs_scenario_free(sc);
}
