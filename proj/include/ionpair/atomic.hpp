#pragma once

// Zeeman and electric-quadrupole structure of the 40Ca+ S1/2 and D5/2
// manifolds, reduced to what the two-ion spectroscopy engine needs: per-level
// shifts and per-coherence sensitivities.

#include <span>
#include <stdexcept>

namespace ionpair::atomic {

/// Bohr magneton over Planck's constant, Hz/G.
inline constexpr double kBohrHzPerGauss = 1.399625e6;
inline constexpr double kGFactorS = 2.0023;
inline constexpr double kGFactorD = 1.2;
/// Default D5/2 lifetime in seconds.
inline constexpr double kDLifetime = 1.16;

enum class Term { S_half, D_fivehalf };

/// One Zeeman sublevel. The magnetic quantum number is stored doubled so
/// half-integer arithmetic stays exact.
struct Sublevel {
  Term term = Term::S_half;
  int twice_m = 1;
  double g_factor = kGFactorS;
  double decay_rate = 0.0;  // 1/s

  double m() const { return twice_m / 2.0; }
  int twice_j() const { return term == Term::S_half ? 1 : 5; }

  friend bool operator==(const Sublevel&, const Sublevel&) = default;
};

/// Validates |m| <= j and the half-integer parity; throws std::invalid_argument.
Sublevel make_sublevel(Term term, int twice_m, double decay_rate);
Sublevel s_level(int twice_m);
Sublevel d_level(int twice_m, double lifetime = kDLifetime);

struct QuadrupoleEnvironment {
  double field_gradient = 0.0;  // dE_z/dz in V/mm^2
  double beta = 0.0;            // rad, symmetry axis vs. B field
  double theta_moment = 0.0;    // quadrupole moment / h, Hz per (V/mm^2)
};

/// Folds beta into [0, pi/2]; 3cos^2(beta)-1 is unchanged.
QuadrupoleEnvironment normalized(QuadrupoleEnvironment env);

/// Probe coherence between two sublevels of one ion.
struct LevelPair {
  Sublevel lower;
  Sublevel upper;
  double zeeman_sensitivity = 0.0;      // Hz/G
  double quadrupole_sensitivity = 0.0;  // Hz per (V/mm^2), at the env's beta and moment
  bool laser_coupled = false;
  double static_detuning = 0.0;  // Hz
};

class IdenticalLevels : public std::invalid_argument {
 public:
  IdenticalLevels() : std::invalid_argument("coherence requires two distinct sublevels") {}
};

double zeeman_shift(const Sublevel& level, double field_gauss);

/// [j(j+1) - 3m^2] / [j(2j-1)] for D5/2, zero for S1/2.
double quadrupole_angular_factor(const Sublevel& level);

double quadrupole_shift(const Sublevel& level, const QuadrupoleEnvironment& env);

/// (g_u m_u - g_l m_l) * muB/h. Exact for two levels of the same term.
double zeeman_sensitivity(const Sublevel& lower, const Sublevel& upper);

/// Summed linear Zeeman coefficient of a multi-ion branch, Hz/G. Grouped by
/// term so branches with equal sum of m within a term compare bitwise equal.
double branch_zeeman_sensitivity(std::span<const Sublevel> levels);

/// Sum of quadrupole angular factors over a branch.
double branch_quadrupole_factor(std::span<const Sublevel> levels);

LevelPair coherence_sensitivities(const Sublevel& lower, const Sublevel& upper,
                                  const QuadrupoleEnvironment& env, bool laser_coupled,
                                  double static_detuning = 0.0);

/// Moment (Hz per V/mm^2) for which a coherence combination with summed
/// angular factor `factor_difference` shifts by `slope` Hz per (V/mm^2).
double moment_for_slope(double slope, double factor_difference, double beta);

/// Converts theta_moment to the quadrupole moment in units of e*a0^2, taking
/// the shift formula with h (not hbar) and 1 V/mm^2 = 1e6 V/m^2.
double moment_in_atomic_units(double theta_moment);

}  // namespace ionpair::atomic
