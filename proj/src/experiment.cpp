#include "ionpair/experiment.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <omp.h>

namespace ionpair::experiment {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHalfPi = 0.5 * std::numbers::pi;

bool is_phase_scan(const RamseyPlan& plan) { return std::holds_alternative<PhaseScan>(plan.scan); }

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

int sample_outcome(const dynamics::OutcomeProbs& probs, double u) {
  double acc = 0.0;
  for (int k = 0; k < 3; ++k) {
    acc += probs[k];
    if (u < acc) return k;
  }
  return 3;
}

std::uint8_t simulate_shot(const RamseyPlan& plan, const dynamics::TwoIonState& initial,
                           const ScanPoint& point, bool phase_scan, std::uint64_t shot_index) {
  const auto draw = noise::draw_shot(plan.noise, point.wait, shot_index);
  const auto phases = analysis_phases(plan.policy, point, phase_scan, draw.phi_x);
  const auto probs = shot_probabilities(plan, initial, point.wait, draw, phases);
  noise::ShotRng rng(plan.noise.master_seed, shot_index, noise::Stream::Measurement);
  return static_cast<std::uint8_t>(sample_outcome(probs, rng.uniform()));
}

std::vector<ParityTrace> aggregate(const RamseyPlan& plan, const std::vector<ScanPoint>& points,
                                   const std::vector<std::uint8_t>& outcomes) {
  const bool phase_scan = is_phase_scan(plan);
  const auto shots = static_cast<std::size_t>(plan.shots_per_point);
  std::vector<ParityTrace> traces;
  traces.reserve(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::array<long, 4> counts{};
    for (std::size_t k = 0; k < shots; ++k) ++counts[outcomes[p * shots + k]];
    const double n = static_cast<double>(shots);
    ParityTrace t;
    t.wait = points[p].wait;
    t.phi0 = points[p].phi0;
    t.abscissa = phase_scan ? t.phi0 : t.wait;
    t.shots = plan.shots_per_point;
    t.parity_mean = static_cast<double>(counts[0] - counts[1] - counts[2] + counts[3]) / n;
    // Outcome index bit 1 is ion 1 dark (D), bit 0 is ion 2 dark.
    t.single_ion_means[0] = static_cast<double>(counts[2] + counts[3] - counts[0] - counts[1]) / n;
    t.single_ion_means[1] = static_cast<double>(counts[1] + counts[3] - counts[0] - counts[2]) / n;
    if (shots > 1) {
      const double var = n * (1.0 - t.parity_mean * t.parity_mean) / (n - 1.0);
      t.parity_stderr = std::sqrt(std::max(var, 0.0) / n);
    }
    traces.push_back(t);
  }
  return traces;
}

// Closed-form noise statistics of theta_1 + sign * theta_2.
struct PhaseStats {
  double mean = 0.0;
  double variance = 0.0;
};

PhaseStats combination_stats(const RamseyPlan& plan, double wait, double sign) {
  const auto& p1 = plan.pair1;
  const auto& p2 = plan.pair2;
  const double g = plan.env.field_gradient;
  const double det = (p1.static_detuning + p1.quadrupole_sensitivity * g) +
                     sign * (p2.static_detuning + p2.quadrupole_sensitivity * g);
  const double zee = p1.zeeman_sensitivity + sign * p2.zeeman_sensitivity;
  const double las = (p1.laser_coupled ? 1.0 : 0.0) + sign * (p2.laser_coupled ? 1.0 : 0.0);
  const double vx = noise::ou_integral_variance(plan.noise.b_rms, plan.noise.b_corr_time, wait);
  const double sf = noise::sigma_from_fwhm(plan.noise.laser_fwhm);
  PhaseStats s;
  s.mean = kTwoPi * (det * wait + zee * plan.b0 * wait - las * plan.noise.laser_offset * wait);
  s.variance = kTwoPi * kTwoPi * (zee * zee * vx + las * las * sf * sf * wait * wait);
  return s;
}

double averaged_cos(const PhaseStats& s, double extra) {
  return std::cos(s.mean + extra) * std::exp(-0.5 * s.variance);
}

}  // namespace

void validate(const RamseyPlan& plan) {
  require(plan.shots_per_point >= 1, "shots_per_point must be >= 1");
  require(plan.preparation.fidelity >= 0.0 && plan.preparation.fidelity <= 1.0,
          "preparation fidelity must lie in [0, 1]");
  require(!(plan.pair1.lower == plan.pair1.upper), "pair1 levels must differ");
  require(!(plan.pair2.lower == plan.pair2.upper), "pair2 levels must differ");
  try {
    noise::validate(plan.noise);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("noise: ") + e.what());
  }
  require(std::isfinite(plan.env.field_gradient) && std::isfinite(plan.env.beta) &&
              std::isfinite(plan.env.theta_moment),
          "env fields must be finite");
  require(std::isfinite(plan.b0), "b0 must be finite");
  if (const auto* ws = std::get_if<WaitScan>(&plan.scan)) {
    require(!ws->waits.empty(), "waits grid must be non-empty");
    for (double w : ws->waits) require(w >= 0.0 && std::isfinite(w), "waits must be finite and >= 0");
  } else {
    const auto& ps = std::get<PhaseScan>(plan.scan);
    require(!ps.phases.empty(), "phases grid must be non-empty");
    require(ps.wait >= 0.0 && std::isfinite(ps.wait), "phase scan wait must be finite and >= 0");
    for (double ph : ps.phases) require(std::isfinite(ph), "phases must be finite");
  }
  using K = PhasePolicy::Kind;
  if (plan.policy.kind == K::RandomizedLaserSensitive) {
    require(plan.pair1.laser_coupled || plan.pair2.laser_coupled,
            "phase_policy randomized_laser needs a laser-coupled pair");
  }
  if (plan.policy.kind == K::RandomizedBFieldSensitive) {
    require(plan.pair1.zeeman_sensitivity != 0.0 || plan.pair2.zeeman_sensitivity != 0.0,
            "phase_policy randomized_bfield needs a field-sensitive pair");
  }
}

std::vector<ScanPoint> scan_points(const RamseyPlan& plan) {
  std::vector<ScanPoint> points;
  if (const auto* ws = std::get_if<WaitScan>(&plan.scan)) {
    for (double w : ws->waits) points.push_back({w, 0.0});
  } else {
    const auto& ps = std::get<PhaseScan>(plan.scan);
    for (double ph : ps.phases) points.push_back({ps.wait, ph});
  }
  return points;
}

std::array<double, 2> analysis_phases(const PhasePolicy& policy, const ScanPoint& point,
                                      bool phase_scan, double phi_x) {
  const double phi0 = phase_scan ? point.phi0 : policy.phi0;
  switch (policy.kind) {
    case PhasePolicy::Kind::Fixed:
      return {policy.phi1 + (phase_scan ? point.phi0 : 0.0), policy.phi2};
    case PhasePolicy::Kind::RandomizedLaserSensitive:
      return {phi0 + phi_x, -phi_x};
    case PhasePolicy::Kind::RandomizedBFieldSensitive:
      return {phi0 + phi_x, phi_x};
  }
  return {0.0, 0.0};
}

dynamics::TwoIonState initial_state(const RamseyPlan& plan) {
  using dynamics::PrepareKind;
  switch (plan.preparation.kind) {
    case Preparation::Kind::Bell:
      return dynamics::prepare(PrepareKind::bell(plan.preparation.bell_phase), plan.pair1,
                               plan.pair2, plan.preparation.fidelity);
    case Preparation::Kind::Product:
      return dynamics::prepare(PrepareKind::product(), plan.pair1, plan.pair2,
                               plan.preparation.fidelity);
    case Preparation::Kind::DephasedProduct:
      return dynamics::collective_dephase(dynamics::prepare(
          PrepareKind::product(), plan.pair1, plan.pair2, plan.preparation.fidelity));
  }
  throw ConfigError("unknown preparation");
}

dynamics::OutcomeProbs shot_probabilities(const RamseyPlan& plan,
                                          const dynamics::TwoIonState& initial, double wait,
                                          const noise::ShotNoiseDraw& draw,
                                          std::array<double, 2> phases) {
  auto state = dynamics::evolve(initial, wait, draw, plan.env, plan.b0);
  state = dynamics::apply_pulse(state, {1, kHalfPi, phases[0] + kHalfPi});
  state = dynamics::apply_pulse(state, {2, kHalfPi, phases[1] + kHalfPi});
  return dynamics::measure_probs(state, plan.leak);
}

std::vector<ParityTrace> run_plan(const RamseyPlan& plan, const ExecutionOptions& options) {
  validate(plan);
  const auto points = scan_points(plan);
  const auto initial = initial_state(plan);
  const bool phase_scan = is_phase_scan(plan);
  const auto shots = static_cast<std::int64_t>(plan.shots_per_point);
  const auto total = static_cast<std::int64_t>(points.size()) * shots;
  std::vector<std::uint8_t> outcomes(static_cast<std::size_t>(total));
  const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();

#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::int64_t i = 0; i < total; ++i) {
    const auto& point = points[static_cast<std::size_t>(i / shots)];
    outcomes[static_cast<std::size_t>(i)] =
        simulate_shot(plan, initial, point, phase_scan, static_cast<std::uint64_t>(i));
  }
  return aggregate(plan, points, outcomes);
}

std::vector<ParityTrace> run_plan_serial(const RamseyPlan& plan) {
  validate(plan);
  const auto points = scan_points(plan);
  const auto initial = initial_state(plan);
  const bool phase_scan = is_phase_scan(plan);
  const auto shots = static_cast<std::uint64_t>(plan.shots_per_point);
  std::vector<std::uint8_t> outcomes;
  outcomes.reserve(points.size() * shots);
  for (std::uint64_t p = 0; p < points.size(); ++p) {
    for (std::uint64_t k = 0; k < shots; ++k) {
      outcomes.push_back(simulate_shot(plan, initial, points[p], phase_scan, p * shots + k));
    }
  }
  return aggregate(plan, points, outcomes);
}

double expected_parity(const RamseyPlan& plan, const ScanPoint& point) {
  const bool phase_scan = is_phase_scan(plan);
  const auto phases = analysis_phases(plan.policy, point, phase_scan, 0.0);
  const double sum = phases[0] + phases[1];
  const double diff = phases[0] - phases[1];
  const auto plus = combination_stats(plan, point.wait, +1.0);
  const auto minus = combination_stats(plan, point.wait, -1.0);

  using K = PhasePolicy::Kind;
  const bool sum_random = plan.policy.kind == K::RandomizedBFieldSensitive;
  const bool diff_random = plan.policy.kind == K::RandomizedLaserSensitive;

  switch (plan.preparation.kind) {
    case Preparation::Kind::Bell:
      return diff_random ? 0.0 : averaged_cos(minus, diff - plan.preparation.bell_phase);
    case Preparation::Kind::Product:
    case Preparation::Kind::DephasedProduct: {
      bool keep_sum = true;
      bool keep_diff = true;
      if (plan.preparation.kind == Preparation::Kind::DephasedProduct) {
        keep_sum = plan.pair1.zeeman_sensitivity + plan.pair2.zeeman_sensitivity == 0.0;
        keep_diff = plan.pair1.zeeman_sensitivity == plan.pair2.zeeman_sensitivity;
      }
      const double sum_term = (keep_sum && !sum_random) ? averaged_cos(plus, sum) : 0.0;
      const double diff_term = (keep_diff && !diff_random) ? averaged_cos(minus, diff) : 0.0;
      return 0.5 * (sum_term + diff_term);
    }
  }
  return 0.0;
}

atomic::LevelPair default_gradient_pair() {
  return atomic::coherence_sensitivities(atomic::s_level(+1), atomic::d_level(+5), {}, true);
}

GradientResult gradient_scenario(const GradientSetup& setup, const ExecutionOptions& options) {
  GradientResult result;
  result.plan = setup.plan;
  result.field_difference = setup.db_dz * setup.distance;
  const double s = setup.plan.pair1.zeeman_sensitivity;
  result.plan.pair1 = setup.plan.pair1;
  result.plan.pair2 = setup.plan.pair1;
  result.plan.pair1.static_detuning = -0.5 * s * result.field_difference;
  result.plan.pair2.static_detuning = +0.5 * s * result.field_difference;
  result.analytic_frequency = std::abs(s * result.field_difference);
  result.traces = run_plan(result.plan, options);
  return result;
}

}  // namespace ionpair::experiment
