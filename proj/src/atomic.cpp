#include "ionpair/atomic.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ionpair::atomic {

namespace {

double angular_asymmetry(double beta) {
  const double c = std::cos(beta);
  return 3.0 * c * c - 1.0;
}

}  // namespace

Sublevel make_sublevel(Term term, int twice_m, double decay_rate) {
  Sublevel level;
  level.term = term;
  level.twice_m = twice_m;
  level.g_factor = term == Term::S_half ? kGFactorS : kGFactorD;
  level.decay_rate = decay_rate;
  const int twice_j = level.twice_j();
  if (std::abs(twice_m) > twice_j || (twice_m - twice_j) % 2 != 0) {
    throw std::invalid_argument("invalid magnetic quantum number 2m=" + std::to_string(twice_m));
  }
  if (!(decay_rate >= 0.0) || !std::isfinite(decay_rate)) {
    throw std::invalid_argument("decay_rate must be finite and >= 0");
  }
  return level;
}

Sublevel s_level(int twice_m) { return make_sublevel(Term::S_half, twice_m, 0.0); }

Sublevel d_level(int twice_m, double lifetime) {
  if (!(lifetime > 0.0)) throw std::invalid_argument("D-state lifetime must be > 0");
  const double rate = std::isinf(lifetime) ? 0.0 : 1.0 / lifetime;
  return make_sublevel(Term::D_fivehalf, twice_m, rate);
}

QuadrupoleEnvironment normalized(QuadrupoleEnvironment env) {
  double b = std::fmod(std::abs(env.beta), std::numbers::pi);
  if (b > std::numbers::pi / 2) b = std::numbers::pi - b;
  env.beta = b;
  return env;
}

double zeeman_shift(const Sublevel& level, double field_gauss) {
  return level.g_factor * level.m() * kBohrHzPerGauss * field_gauss;
}

double quadrupole_angular_factor(const Sublevel& level) {
  if (level.term != Term::D_fivehalf) return 0.0;
  // j = 5/2: j(j+1) = 35/4, j(2j-1) = 10. Kept in quarters to stay exact.
  const int four_m_sq = level.twice_m * level.twice_m;
  return (35.0 - 3.0 * four_m_sq) / 40.0;
}

double quadrupole_shift(const Sublevel& level, const QuadrupoleEnvironment& env) {
  if (level.term != Term::D_fivehalf) return 0.0;
  return 0.25 * env.field_gradient * env.theta_moment * quadrupole_angular_factor(level) *
         angular_asymmetry(env.beta);
}

double zeeman_sensitivity(const Sublevel& lower, const Sublevel& upper) {
  if (lower.term == upper.term) {
    return lower.g_factor * (upper.twice_m - lower.twice_m) / 2.0 * kBohrHzPerGauss;
  }
  return (upper.g_factor * upper.twice_m - lower.g_factor * lower.twice_m) / 2.0 *
         kBohrHzPerGauss;
}

double branch_zeeman_sensitivity(std::span<const Sublevel> levels) {
  int twice_m_s = 0;
  int twice_m_d = 0;
  for (const auto& l : levels) {
    (l.term == Term::S_half ? twice_m_s : twice_m_d) += l.twice_m;
  }
  return (kGFactorS * twice_m_s + kGFactorD * twice_m_d) / 2.0 * kBohrHzPerGauss;
}

double branch_quadrupole_factor(std::span<const Sublevel> levels) {
  double sum = 0.0;
  for (const auto& l : levels) sum += quadrupole_angular_factor(l);
  return sum;
}

LevelPair coherence_sensitivities(const Sublevel& lower, const Sublevel& upper,
                                  const QuadrupoleEnvironment& env, bool laser_coupled,
                                  double static_detuning) {
  if (lower == upper) throw IdenticalLevels();
  LevelPair pair;
  pair.lower = lower;
  pair.upper = upper;
  pair.zeeman_sensitivity = zeeman_sensitivity(lower, upper);
  const double factor = quadrupole_angular_factor(upper) - quadrupole_angular_factor(lower);
  pair.quadrupole_sensitivity = 0.25 * env.theta_moment * factor * angular_asymmetry(env.beta);
  pair.laser_coupled = laser_coupled;
  pair.static_detuning = static_detuning;
  return pair;
}

double moment_for_slope(double slope, double factor_difference, double beta) {
  const double denom = 0.25 * factor_difference * angular_asymmetry(beta);
  if (denom == 0.0) throw std::invalid_argument("coherence is insensitive to the gradient");
  return slope / denom;
}

double moment_in_atomic_units(double theta_moment) {
  constexpr double kPlanck = 6.62607015e-34;
  constexpr double kCharge = 1.602176634e-19;
  constexpr double kBohrRadius = 5.29177210903e-11;
  const double si = kPlanck * theta_moment / 1e6;  // C m^2
  return si / (kCharge * kBohrRadius * kBohrRadius);
}

}  // namespace ionpair::atomic
