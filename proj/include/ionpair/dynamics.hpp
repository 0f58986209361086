#pragma once

// Two-ion open-system engine on a per-ion basis {lower, upper, leaked}.
// Composite index = 3 * level(ion 1) + level(ion 2).

#include <array>
#include <complex>

#include <Eigen/Dense>

#include "ionpair/atomic.hpp"
#include "ionpair/noise.hpp"

namespace ionpair::dynamics {

using Complex = std::complex<double>;
using Matrix9 = Eigen::Matrix<Complex, 9, 9>;
using Vector9 = Eigen::Matrix<Complex, 9, 1>;

enum Level : int { kLower = 0, kUpper = 1, kLeaked = 2 };

constexpr int composite(int level1, int level2) { return 3 * level1 + level2; }

struct TwoIonState {
  Matrix9 rho = Matrix9::Zero();
  atomic::LevelPair pair1;
  atomic::LevelPair pair2;
};

struct PulseSpec {
  int target = 1;  // 1 or 2
  double area = 0.0;
  double phase = 0.0;
};

void validate(const PulseSpec& pulse);

struct PrepareKind {
  enum class Kind { Bell, Product, GroundGround };
  Kind kind = Kind::Product;
  double bell_phase = 0.0;

  static PrepareKind bell(double phi) { return {Kind::Bell, phi}; }
  static PrepareKind product() { return {Kind::Product, 0.0}; }
  static PrepareKind ground_ground() { return {Kind::GroundGround, 0.0}; }
};

/// Bell(phi): (|g e> + e^{i phi}|e g>)/sqrt2. Product: (|g>+|e>)(|g>+|e>)/2.
/// `fidelity` < 1 mixes each ion towards the maximally mixed qubit state.
TwoIonState prepare(const PrepareKind& kind, const atomic::LevelPair& pair1,
                    const atomic::LevelPair& pair2, double fidelity = 1.0);

/// Free evolution over `wait`: phase on each upper level from its detuning,
/// quadrupole shift, Zeeman shift in (B0 + dB) and, for laser-coupled pairs,
/// the laser error; then spontaneous decay of both levels into the ion's leak
/// state. Only env.field_gradient is read; beta and moment are already folded
/// into the pairs' quadrupole sensitivities.
TwoIonState evolve(const TwoIonState& state, double wait, const noise::ShotNoiseDraw& draw,
                   const atomic::QuadrupoleEnvironment& env, double b0);

/// Removes every coherence whose two basis states differ in summed Zeeman
/// sensitivity.
TwoIonState collective_dephase(const TwoIonState& state);

TwoIonState apply_pulse(const TwoIonState& state, const PulseSpec& pulse);

enum class LeakDetection { Bright, Dark };

/// Outcome probabilities in the order SS, SD, DS, DD (ion 1 first). Lower
/// levels read as S, upper levels as D, leaked population per `leak`.
using OutcomeProbs = std::array<double, 4>;
OutcomeProbs measure_probs(const TwoIonState& state, LeakDetection leak = LeakDetection::Bright);

/// <sigma_z x sigma_z> from outcome probabilities.
double parity(const OutcomeProbs& probs);

/// Summed Zeeman sensitivity (Hz/G) of a composite basis state.
double basis_zeeman_sensitivity(const TwoIonState& state, int index);

// Diagnostics used by tests.
double trace_deviation(const Matrix9& rho);
double hermiticity_deviation(const Matrix9& rho);
double min_eigenvalue(const Matrix9& rho);
double purity(const Matrix9& rho);
double overlap(const Matrix9& rho, const Vector9& psi);

}  // namespace ionpair::dynamics
