#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ionpair/experiment.hpp"
#include "ionpair/trap.hpp"

using namespace ionpair;
using namespace ionpair::experiment;
using atomic::d_level;
using atomic::s_level;

namespace {

constexpr double kPi = std::numbers::pi;

atomic::LevelPair pair(const atomic::Sublevel& l, const atomic::Sublevel& u, double theta = 0.0) {
  return atomic::coherence_sensitivities(l, u, {0.0, 0.0, theta}, l.term != u.term);
}

RamseyPlan laser_plan(double fwhm) {
  RamseyPlan p;
  p.pair1 = pair(s_level(-1), d_level(-1));
  p.pair2 = pair(s_level(+1), d_level(+1));
  p.noise.laser_fwhm = fwhm;
  p.noise.master_seed = 17;
  return p;
}

// Quadrupole pairs with theta set for a 2.977 Hz/(V/mm^2) parity slope.
RamseyPlan quadrupole_plan() {
  const double theta = atomic::moment_for_slope(2.977, 2.4, 0.0);
  RamseyPlan p;
  p.pair1 = pair(d_level(-5), d_level(-1), theta);
  p.pair2 = pair(d_level(-1), d_level(+3), theta);
  p.env.field_gradient = trap::gradient_from_axial_freq({890e3, 4e6, 40.0});
  p.b0 = 4.0;
  p.noise.b_rms = 30e-6;
  p.noise.master_seed = 3;
  return p;
}

bool same_traces(const std::vector<ParityTrace>& a, const std::vector<ParityTrace>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].parity_mean != b[i].parity_mean || a[i].parity_stderr != b[i].parity_stderr ||
        a[i].single_ion_means != b[i].single_ion_means || a[i].abscissa != b[i].abscissa) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("noiseless Bell parity at zero wait is one") {
  RamseyPlan p = laser_plan(0.0);
  p.preparation.kind = Preparation::Kind::Bell;
  p.scan = WaitScan{{0.0}};
  p.shots_per_point = 500;
  const auto t = run_plan(p);
  REQUIRE(t.size() == 1);
  CHECK(t[0].parity_mean == 1.0);
  CHECK(t[0].parity_stderr == 0.0);
  CHECK(t[0].shots == 500);
  CHECK(expected_parity(p, {0.0, 0.0}) == doctest::Approx(1.0));
}

TEST_CASE("expected parity: deterministic phases") {
  RamseyPlan p = laser_plan(0.0);
  CHECK(expected_parity(p, {0.0, 0.0}) == doctest::Approx(1.0));
  p.policy.kind = PhasePolicy::Kind::RandomizedLaserSensitive;
  p.policy.phi0 = kPi;
  CHECK(expected_parity(p, {0.0, 0.0}) == doctest::Approx(-0.5));
  p.scan = PhaseScan{{0.0, kPi / 2, kPi}, 0.003};
  CHECK(expected_parity(p, {0.003, kPi}) == doctest::Approx(-0.5));
  CHECK(std::abs(expected_parity(p, {0.003, kPi / 2})) < 1e-12);
}

TEST_CASE("Gaussian laser contrast, closed form against Monte Carlo") {
  const double fwhm = 48.0, tau = 0.004;
  const double sf = fwhm / (2 * std::sqrt(2 * std::log(2.0)));
  RamseyPlan p = laser_plan(fwhm);
  p.policy.kind = PhasePolicy::Kind::RandomizedLaserSensitive;
  p.scan = PhaseScan{{0.0}, tau};
  p.shots_per_point = 100000;
  const double analytic = 0.5 * std::exp(-2 * std::pow(2 * kPi * sf * tau, 2));
  CHECK(expected_parity(p, {tau, 0.0}) == doctest::Approx(analytic).epsilon(1e-12));
  const auto t = run_plan(p);
  CHECK(std::abs(t[0].parity_mean - analytic) < 4 * t[0].parity_stderr);

  // Exponent of the two-ion contrast is four times the single-ion one.
  const double single = std::exp(-std::pow(2 * kPi * sf * tau, 2) / 2);
  CHECK(std::log(2 * analytic) / std::log(single) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("randomized laser phase scan: contrast at most half, single ions flat") {
  RamseyPlan p = laser_plan(48.0);
  p.policy.kind = PhasePolicy::Kind::RandomizedLaserSensitive;
  p.noise.b_rms = 30e-6;
  p.b0 = 4.0;
  std::vector<double> phases;
  for (int k = 0; k < 16; ++k) phases.push_back(2 * kPi * k / 16);
  p.scan = PhaseScan{phases, 1.51e-3};
  p.shots_per_point = 400;
  const auto t = run_plan(p);
  double maxp = 0, minp = 0;
  for (const auto& tr : t) {
    maxp = std::max(maxp, tr.parity_mean);
    minp = std::min(minp, tr.parity_mean);
    CHECK(std::abs(tr.single_ion_means[0]) < 4 / std::sqrt(400.0));
    CHECK(std::abs(tr.single_ion_means[1]) < 4 / std::sqrt(400.0));
    CHECK(std::abs(expected_parity(p, {tr.wait, tr.phi0})) <= 0.5 + 1e-12);
  }
  CHECK(maxp > 0.3);
  CHECK(minp < -0.3);
}

TEST_CASE("randomized field policy averages the single-ion signals") {
  RamseyPlan p = quadrupole_plan();
  p.policy.kind = PhasePolicy::Kind::RandomizedBFieldSensitive;
  p.scan = PhaseScan{{0.0, 1.0, 2.0, 3.0}, 0.001};
  p.shots_per_point = 400;
  for (const auto& tr : run_plan(p)) {
    CHECK(std::abs(tr.single_ion_means[0]) < 4 / std::sqrt(400.0));
    CHECK(std::abs(tr.single_ion_means[1]) < 4 / std::sqrt(400.0));
  }
}

TEST_CASE("analysis phase policies") {
  PhasePolicy pol{PhasePolicy::Kind::RandomizedLaserSensitive, 0, 0, 0.4};
  auto ph = analysis_phases(pol, {0.0, 0.0}, false, 1.3);
  CHECK(ph[0] == doctest::Approx(1.7));
  CHECK(ph[1] == doctest::Approx(-1.3));
  pol.kind = PhasePolicy::Kind::RandomizedBFieldSensitive;
  ph = analysis_phases(pol, {0.0, 0.0}, false, 1.3);
  CHECK(ph[1] == doctest::Approx(1.3));
  ph = analysis_phases(pol, {0.0, 2.0}, true, 1.3);
  CHECK(ph[0] == doctest::Approx(3.3));
  pol = {PhasePolicy::Kind::Fixed, 0.1, 0.2, 0.0};
  ph = analysis_phases(pol, {0.0, 2.0}, true, 1.3);
  CHECK(ph[0] == doctest::Approx(2.1));
  CHECK(ph[1] == doctest::Approx(0.2));
}

TEST_CASE("plan validation") {
  RamseyPlan p = quadrupole_plan();
  p.policy.kind = PhasePolicy::Kind::RandomizedLaserSensitive;
  CHECK_THROWS_AS(validate(p), ConfigError);
  p = quadrupole_plan();
  p.shots_per_point = 0;
  CHECK_THROWS_AS(validate(p), ConfigError);
  p = quadrupole_plan();
  p.scan = WaitScan{};
  CHECK_THROWS_AS(run_plan(p), ConfigError);
  p.scan = WaitScan{{-1.0}};
  CHECK_THROWS_AS(run_plan(p), ConfigError);
  p.scan = PhaseScan{{}, 0.0};
  CHECK_THROWS_AS(validate(p), ConfigError);
  p = laser_plan(0.0);
  p.pair1.zeeman_sensitivity = p.pair2.zeeman_sensitivity = 0.0;
  p.policy.kind = PhasePolicy::Kind::RandomizedBFieldSensitive;
  CHECK_THROWS_AS(validate(p), ConfigError);
}

TEST_CASE("parity estimator is unbiased over seeds") {
  RamseyPlan p = quadrupole_plan();
  p.preparation.kind = Preparation::Kind::Product;
  p.scan = WaitScan{{0.0005, 0.002, 0.011, 0.023, 0.037}};
  p.shots_per_point = 200;
  int total = 0, inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    p.noise.master_seed = 1000 + seed;
    for (const auto& tr : run_plan(p)) {
      ++total;
      // Short waits: spontaneous decay shifts the mean by < 0.03 * stderr.
      if (std::abs(tr.parity_mean - expected_parity(p, {tr.wait, 0.0})) < 4 * tr.parity_stderr) ++inside;
    }
  }
  CHECK(inside >= 0.99 * total);
}

TEST_CASE("dephased product traces follow the closed form") {
  RamseyPlan p = quadrupole_plan();
  p.preparation.kind = Preparation::Kind::DephasedProduct;
  p.pair1.lower.decay_rate = p.pair1.upper.decay_rate = 0.0;
  p.pair2.lower.decay_rate = p.pair2.upper.decay_rate = 0.0;
  p.scan = WaitScan{{0.0, 0.005, 0.013, 0.02}};
  p.shots_per_point = 4000;
  CHECK(expected_parity(p, {0.0, 0.0}) == doctest::Approx(0.5));
  const double f = 2.977 * p.env.field_gradient;
  for (const auto& tr : run_plan(p)) {
    const double e = expected_parity(p, {tr.wait, 0.0});
    CHECK(e == doctest::Approx(0.5 * std::cos(2 * kPi * f * tr.wait)).epsilon(1e-9));
    CHECK(std::abs(tr.parity_mean - e) < 4 * tr.parity_stderr + 1e-12);
  }
}

TEST_CASE("Bell state on the DFS ignores field noise") {
  RamseyPlan p = quadrupole_plan();
  p.preparation.kind = Preparation::Kind::Bell;
  p.noise.b_rms = 1e-3;
  p.scan = WaitScan{{0.0, 0.01, 0.05}};
  p.shots_per_point = 2000;
  for (const auto& tr : run_plan(p)) {
    const double e = expected_parity(p, {tr.wait, 0.0});
    // Decay is the only loss: contrast exp(-2 t / tau_D).
    CHECK(std::abs(tr.parity_mean - e * std::exp(-2 * tr.wait / 1.16)) < 4 * tr.parity_stderr + 0.02);
  }
}

TEST_CASE("OpenMP and serial kernels agree bit for bit") {
  RamseyPlan p = quadrupole_plan();
  p.scan = WaitScan{{0.0, 0.004, 0.02, 0.05}};
  p.shots_per_point = 301;
  const auto serial = run_plan_serial(p);
  for (int threads : {1, 2, 3, 8}) CHECK(same_traces(serial, run_plan(p, {threads})));
  CHECK(same_traces(run_plan(p), run_plan(p)));
}

TEST_CASE("swapping ion labels leaves parity invariant") {
  RamseyPlan p = laser_plan(48.0);
  p.pair2 = pair(s_level(-1), d_level(+3));
  p.noise.b_rms = 30e-6;
  p.scan = WaitScan{{0.0, 0.002, 0.004, 0.008}};
  p.shots_per_point = 500;
  RamseyPlan q = p;
  std::swap(q.pair1, q.pair2);
  const auto a = run_plan(p), b = run_plan(q);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].parity_mean == doctest::Approx(b[i].parity_mean).epsilon(1e-12));
    CHECK(expected_parity(p, {a[i].wait, 0.0}) == doctest::Approx(expected_parity(q, {a[i].wait, 0.0})));
  }
}

TEST_CASE("gradient scenario arithmetic") {
  GradientSetup g;
  g.db_dz = 0.08;
  g.distance = 5e-6;
  g.plan.pair1 = default_gradient_pair();
  g.plan.scan = WaitScan{{0.0, 0.1, 0.2}};
  g.plan.shots_per_point = 10;
  const auto r = gradient_scenario(g);
  CHECK(r.field_difference == doctest::Approx(0.4e-6).epsilon(1e-12));
  CHECK(r.analytic_frequency == doctest::Approx(2.797e6 * 0.4e-6).epsilon(1e-3));
  CHECK(r.analytic_frequency == doctest::Approx(1.12).epsilon(0.01));
  CHECK(r.plan.pair1.static_detuning == -r.plan.pair2.static_detuning);

  g.db_dz = 0.0;
  g.plan.scan = WaitScan{{0.0, 0.3, 0.6, 0.9}};
  g.plan.noise.laser_fwhm = 48.0;
  g.plan.shots_per_point = 2000;
  const auto flat = gradient_scenario(g);
  CHECK(flat.analytic_frequency == 0.0);
  for (const auto& tr : flat.traces) {
    CHECK(expected_parity(flat.plan, {tr.wait, 0.0}) == doctest::Approx(tr.wait == 0.0 ? 1.0 : 0.5).epsilon(1e-6));
  }
}
