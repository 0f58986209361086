#pragma once

// Ramsey/parity sequencer: prepare -> wait -> two analysis pulses -> one
// sampled two-ion detection per shot, repeated over a wait grid or an
// analysis-phase grid.
//
// Phase convention: an analysis phase phi_n is applied as a pi/2 pulse of
// phase phi_n + pi/2, i.e. relative to the pulse that would have created the
// (|g>+|e>)/sqrt2 preparation. With it the single-ion Ramsey signal is
// <sigma_z> = cos(theta_n + phi_n) with sigma_z = +1 for D.
//
// run_plan() is the OpenMP kernel; run_plan_serial() is the plain reference
// kept for testing. Both produce bit-identical traces.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "ionpair/atomic.hpp"
#include "ionpair/dynamics.hpp"
#include "ionpair/noise.hpp"

namespace ionpair::experiment {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Preparation {
  enum class Kind { Bell, Product, DephasedProduct };
  Kind kind = Kind::Product;
  double bell_phase = 0.0;
  double fidelity = 1.0;
};

struct WaitScan {
  std::vector<double> waits;  // s
};

struct PhaseScan {
  std::vector<double> phases;  // phi0 grid, rad
  double wait = 0.0;           // s
};

using Scan = std::variant<WaitScan, PhaseScan>;

struct PhasePolicy {
  enum class Kind { Fixed, RandomizedLaserSensitive, RandomizedBFieldSensitive };
  Kind kind = Kind::Fixed;
  double phi1 = 0.0;
  double phi2 = 0.0;
  double phi0 = 0.0;
};

struct RamseyPlan {
  Preparation preparation;
  atomic::LevelPair pair1;
  atomic::LevelPair pair2;
  Scan scan = WaitScan{};
  PhasePolicy policy;
  int shots_per_point = 100;
  noise::NoiseModel noise;
  atomic::QuadrupoleEnvironment env;
  double b0 = 0.0;  // G
  dynamics::LeakDetection leak = dynamics::LeakDetection::Bright;
};

/// Throws ConfigError naming the offending field.
void validate(const RamseyPlan& plan);

/// One scan point.
struct ParityTrace {
  double abscissa = 0.0;  // wait (s) for wait scans, phi0 (rad) for phase scans
  double wait = 0.0;
  double phi0 = 0.0;
  double parity_mean = 0.0;
  double parity_stderr = 0.0;
  std::array<double, 2> single_ion_means{};  // <sigma_z>, D = +1
  int shots = 0;
};

struct ScanPoint {
  double wait = 0.0;
  double phi0 = 0.0;
};

std::vector<ScanPoint> scan_points(const RamseyPlan& plan);

/// Analysis phases (phi1, phi2) for a point and a protocol draw phi_x. For
/// phase scans under the Fixed policy, phi0 is added to ion 1.
std::array<double, 2> analysis_phases(const PhasePolicy& policy, const ScanPoint& point,
                                      bool phase_scan, double phi_x);

/// Prepared initial state of a plan (DephasedProduct goes through the
/// collective dephasing channel).
dynamics::TwoIonState initial_state(const RamseyPlan& plan);

/// Outcome probabilities for a single shot given its noise draw and phases.
dynamics::OutcomeProbs shot_probabilities(const RamseyPlan& plan,
                                          const dynamics::TwoIonState& initial, double wait,
                                          const noise::ShotNoiseDraw& draw,
                                          std::array<double, 2> phases);

struct ExecutionOptions {
  int threads = 0;  // 0: OpenMP default
};

std::vector<ParityTrace> run_plan(const RamseyPlan& plan, const ExecutionOptions& options = {});
std::vector<ParityTrace> run_plan_serial(const RamseyPlan& plan);

/// Noise-averaged closed-form parity at a scan point, ignoring spontaneous
/// decay and preparation infidelity. Randomized policies return the
/// phi_x-averaged value.
double expected_parity(const RamseyPlan& plan, const ScanPoint& point);

/// Frequency gradient experiment: both ions on the same pair, fields offset by
/// -dB/2 and +dB/2 with dB = db_dz * distance.
struct GradientSetup {
  double db_dz = 0.0;     // G/m
  double distance = 0.0;  // m
  RamseyPlan plan;        // pair1 is used for both ions; its static detuning is overwritten
};

struct GradientResult {
  std::vector<ParityTrace> traces;
  double field_difference = 0.0;      // G
  double analytic_frequency = 0.0;    // Hz
  RamseyPlan plan;                    // plan actually run
};

atomic::LevelPair default_gradient_pair();
GradientResult gradient_scenario(const GradientSetup& setup, const ExecutionOptions& options = {});

}  // namespace ionpair::experiment
