#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ionpair/report.hpp"
#include "ionpair/scenario.hpp"

using namespace ionpair;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("ionpair_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(IONPAIR_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string minimal(const std::string& extra = "") {
  return "name = t\nkind = quadrupole_product\naxial_freqs_hz = 890e3\n"
         "alpha_hz_per_v_per_mm2 = 2.977\nwaits_s = linspace(0, 0.1, 11)\nshots_per_point = 10\n" + extra;
}

std::string failing_field(const std::string& text) {
  try {
    scenario::parse_scenario(text);
  } catch (const scenario::ValidationError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("built-in registry") {
  const auto names = scenario::builtin_names();
  CHECK(names.size() == 6);
  CHECK(scenario::resolve_builtin("fig4_quadrupole_sweep").size() == 2);
  CHECK(scenario::resolve_builtin("fig7_linewidth").size() == 1);
  CHECK_THROWS_AS(scenario::resolve_builtin("bogus"), scenario::UnknownScenario);
  CHECK_THROWS_AS(scenario::builtin_text("fig4"), scenario::UnknownScenario);
  for (const auto& n : names) {
    const auto scn = scenario::parse_scenario(scenario::builtin_text(n));
    CHECK(scn.name == n);
    // Shipped files match the compiled-in text byte for byte.
    CHECK(slurp(fs::path(IONPAIR_SCENARIO_DIR) / (n + ".scn")) == scenario::builtin_text(n));
  }
}

TEST_CASE("describe prints the gradient grid and N") {
  const auto scn = scenario::parse_scenario(scenario::builtin_text("fig4_quadrupole_sweep_product"));
  const auto text = scenario::describe(scn);
  CHECK(text.find("gradients (V/mm^2): 12.09") != std::string::npos);
  CHECK(text.find("shots per point (N): 100") != std::string::npos);
  CHECK(scenario::gradient_grid(scn).size() == 5);
  CHECK(scenario::parity_slope(scn) == doctest::Approx(2.977).epsilon(1e-12));
}

TEST_CASE("list syntax") {
  auto scn = scenario::parse_scenario(minimal());
  CHECK(scn.waits.size() == 11);
  CHECK(scn.waits.back() == doctest::Approx(0.1));
  scn = scenario::parse_scenario(
      "name = l\nkind = linewidth\nwaits_s = 1e-3, linspace(2e-3, 4e-3, 3), 8e-3\n"
      "phases_rad = circle(4)\nshots_per_point = 5\nlaser_fwhm_hz = 48\nphase_policy = randomized_laser\n");
  CHECK(scn.waits == std::vector<double>{1e-3, 2e-3, 3e-3, 4e-3, 8e-3});
  CHECK(scn.phases.size() == 4);
  CHECK(scn.phases[2] == doctest::Approx(std::acos(-1.0)));
}

TEST_CASE("validation names the offending field") {
  CHECK(failing_field("kind = gradient\nwaits_s = 1\nshots_per_point = 1\n") == "name");
  CHECK(failing_field(minimal("colour = blue\n")) == "colour");
  CHECK(failing_field(minimal("shots_per_point = 3\n")) == "shots_per_point");
  CHECK(failing_field(minimal("b_rms_gauss = -1\n")) == "b_rms_gauss");
  CHECK(failing_field(minimal("ion1_lower = D5/2:-7/2\nion1_upper = D5/2:-1/2\n"
                              "ion2_lower = D5/2:-1/2\nion2_upper = D5/2:+3/2\n")) == "ion1_lower");
  CHECK(failing_field(minimal("ion1_lower = D5/2:-5/2\n")) == "ion1_upper");
  CHECK(failing_field(minimal("preparation = entangled\n")) == "preparation");
  CHECK(failing_field(minimal("phase_policy = randomized_laser\n")) == "phase_policy");
  CHECK(failing_field("name = x\nkind = custom\nwaits_s = 0\nshots_per_point = 1\n") == "ion1_lower");
  CHECK(failing_field("name = x\nkind = gradient\nwaits_s = 0\nshots_per_point = 1\n") == "db_dz_g_per_m");
  CHECK(failing_field("name = x\nkind = linewidth\nwaits_s = 0\nshots_per_point = 1\n") == "phases_rad");
  CHECK(failing_field("name = x\nkind = quadrupole_bell\nwaits_s = 0\nshots_per_point = 1\n"
                      "axial_freqs_hz = 1e6\n") == "alpha_hz_per_v_per_mm2");
  CHECK(failing_field("name = x\nkind = gradient\nwaits_s = abc\nshots_per_point = 1\n") == "waits_s");
  CHECK(failing_field("name = x\njunk line\n") == "line 2");
}

TEST_CASE("custom level syntax") {
  const auto scn = scenario::parse_scenario(
      "name = c\nkind = custom\nion1_lower = S1/2:+1/2\nion1_upper = D5/2:+5/2\n"
      "ion2_lower = S1/2:-1/2\nion2_upper = D5/2:-3/2\nwaits_s = 0, 0.001\nshots_per_point = 4\n");
  REQUIRE(scn.levels);
  const auto pairs = scenario::level_pairs(scn);
  CHECK(pairs[0].laser_coupled);
  CHECK(pairs[0].zeeman_sensitivity == doctest::Approx(2.797e6).epsilon(1e-3));
  const auto r = scenario::run_scenario(scn);
  CHECK(r.blocks.size() == 1);
  CHECK(r.blocks[0].traces.size() == 2);
}

TEST_CASE("FNV-1a reference vectors") {
  CHECK(scenario::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(scenario::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(report::config_hash("a") == "af63dc4c8601ec8c");
}

TEST_CASE("shortest round-trip number format") {
  CHECK(report::format_double(0.1) == "0.1");
  CHECK(report::format_double(1.0 / 3.0) == "0.3333333333333333");
  CHECK(std::stod(report::format_double(38.557682833451544)) == 38.557682833451544);
}

TEST_CASE("cli: list and describe") {
  CHECK(cli("list-scenarios") == 0);
  CHECK(cli("describe fig4_quadrupole_sweep") == 0);
  CHECK(cli("describe bogus") == 2);
}

TEST_CASE("cli: fig3 run writes CSV, report and manifest") {
  const auto dir = fresh_dir("fig3");
  REQUIRE(cli("run " IONPAIR_SCENARIO_DIR "/fig3_quadrupole_product.scn --seed 1 --out " + dir.string()) == 0);
  const auto csv = slurp(dir / "fig3_quadrupole_product_trace.csv");
  CHECK(csv.rfind("wait_s,parity,parity_err,ion1_mean,ion2_mean\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
  const auto rep = nlohmann::json::parse(slurp(dir / "fig3_quadrupole_product_report.json"));
  const auto fit = rep["per_gradient"][0]["fit"];
  CHECK(std::abs(fit["freq"]["value"].get<double>() - 38.6) < 3 * fit["freq"]["stderr"].get<double>());
  const auto man = nlohmann::json::parse(slurp(dir / "fig3_quadrupole_product_manifest.json"));
  CHECK(man["seed"] == 1);
  CHECK(man["config_hash"].get<std::string>().size() == 16);
  CHECK(man["tool"] == "ionpair");
}

TEST_CASE("cli: manifest rerun reproduces the outputs") {
  const auto a = fresh_dir("man_a"), b = fresh_dir("man_b");
  REQUIRE(cli("run sec41_gradient --seed 99 --shots-override 20 --out " + a.string()) == 0);
  REQUIRE(cli("run " + (a / "sec41_gradient_manifest.json").string() + " --out " + b.string()) == 0);
  for (const char* f : {"sec41_gradient_trace.csv", "sec41_gradient_report.json", "sec41_gradient_manifest.json"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("cli: identical CSV across thread counts") {
  const auto a = fresh_dir("thr_a"), b = fresh_dir("thr_b");
  REQUIRE(cli("run fig3_quadrupole_product --seed 5 --threads 1 --out " + a.string()) == 0);
  REQUIRE(cli("run fig3_quadrupole_product --seed 5 --threads 8 --out " + b.string()) == 0);
  CHECK(slurp(a / "fig3_quadrupole_product_trace.csv") == slurp(b / "fig3_quadrupole_product_trace.csv"));
}

TEST_CASE("cli: json format and sweep columns") {
  const auto dir = fresh_dir("json");
  REQUIRE(cli("run fig4_quadrupole_sweep_product --shots-override 20 --format json --out " + dir.string()) <= 3);
  const auto j = nlohmann::json::parse(slurp(dir / "fig4_quadrupole_sweep_product_trace.json"));
  CHECK(j["blocks"].size() == 5);
  REQUIRE(cli("run fig4_quadrupole_sweep_product --shots-override 20 --out " + dir.string()) <= 3);
  CHECK(slurp(dir / "fig4_quadrupole_sweep_product_trace.csv")
            .rfind("gradient_v_per_mm2,wait_s,parity,", 0) == 0);
  REQUIRE(cli("run fig6_phase_scan --shots-override 20 --out " + dir.string()) == 0);
  CHECK(slurp(dir / "fig6_phase_scan_trace.csv").rfind("wait_s,phi0_rad,parity,", 0) == 0);
}

TEST_CASE("cli: validation failure writes nothing") {
  const auto dir = fresh_dir("bad");
  const auto scn = dir / "bad.scn";
  std::ofstream(scn) << "kind = gradient\nwaits_s = 0.1\nshots_per_point = 10\n";
  const auto out = dir / "out";
  CHECK(cli("run " + scn.string() + " --out " + out.string()) == 2);
  CHECK_FALSE(fs::exists(out));
  CHECK(cli("run no_such_scenario --out " + out.string()) == 2);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("cli: non-converging fit exits 3") {
  const auto dir = fresh_dir("flat");
  const auto scn = dir / "flat.scn";
  std::ofstream(scn) << "name = flat\nkind = gradient\ndb_dz_g_per_m = 0\nion_distance_m = 5e-6\n"
                        "b_rms_gauss = 0\nwaits_s = linspace(0, 0.1, 11)\nshots_per_point = 10\n"
                        "preparation = bell\nd_lifetime_s = 1e9\n";
  // Zero gradient: no oscillation to fit. The runner skips the fit when the
  // analytic frequency is zero, so force the path through a sweep instead.
  std::ofstream(dir / "flat2.scn") << "name = flat2\nkind = quadrupole_product\naxial_freqs_hz = 1e6\n"
                                       "theta_hz_per_v_per_mm2 = 0\nwaits_s = linspace(0, 0.1, 11)\n"
                                       "shots_per_point = 50\npreparation = dephased_product\n";
  CHECK(cli("run " + scn.string() + " --out " + (dir / "o").string()) == 0);
  CHECK(cli("run " + (dir / "flat2.scn").string() + " --out " + (dir / "o").string()) == 3);
  CHECK(fs::exists(dir / "o" / "flat2_report.json"));
}

TEST_CASE("fig7 linewidth scenario recovers the laser width") {
  const auto r = scenario::run_scenario(scenario::parse_scenario(scenario::builtin_text("fig7_linewidth")));
  REQUIRE(r.fits_converged);
  CHECK(r.report["tau_half_s"].get<double>() == doctest::Approx(4.6e-3).epsilon(0.1));
  CHECK(r.report["fwhm_hz"].get<double>() == doctest::Approx(48.0).epsilon(0.1));
}
