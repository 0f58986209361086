#pragma once

// Declarative scenario files and the runner behind the CLI.
//
// Format: one `key = value` per line, `#` starts a comment. Lists are comma
// separated; an item may be `linspace(a, b, n)` (inclusive) and a whole list
// may be `circle(n)` (n points evenly covering [0, 2pi)). Levels are written
// `S1/2:+1/2` or `D5/2:-5/2`. Unknown or repeated keys are rejected.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ionpair/analysis.hpp"
#include "ionpair/atomic.hpp"
#include "ionpair/experiment.hpp"
#include "ionpair/noise.hpp"
#include "ionpair/trap.hpp"

namespace ionpair::scenario {

class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::invalid_argument("field '" + field + "': " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class UnknownScenario : public std::out_of_range {
 public:
  explicit UnknownScenario(const std::string& name) : std::out_of_range("unknown scenario: " + name) {}
};

enum class Kind { Gradient, QuadrupoleProduct, QuadrupoleBell, Linewidth, Custom };

std::string_view kind_name(Kind kind);

struct Scenario {
  std::string name;
  std::string description;
  Kind kind = Kind::Custom;
  trap::TrapConfig trap;

  std::vector<double> gradients;  // V/mm^2, explicit
  std::vector<double> axial_freqs;  // Hz, converted through the trap calibration
  double beta = 0.0;
  std::optional<double> alpha;  // target parity slope, Hz per (V/mm^2)
  std::optional<double> theta;  // moment, Hz per (V/mm^2)
  double b0 = 0.0;

  noise::NoiseModel noise;

  experiment::Preparation preparation;
  std::optional<std::array<atomic::Sublevel, 4>> levels;  // ion1 lower/upper, ion2 lower/upper
  std::array<double, 2> detunings{};
  double d_lifetime = atomic::kDLifetime;
  std::vector<double> waits;
  std::vector<double> phases;
  experiment::PhasePolicy policy;
  int shots_per_point = 100;
  double exclude_below = 0.0;
  dynamics::LeakDetection leak = dynamics::LeakDetection::Bright;

  double db_dz = 0.0;                  // G/m
  std::optional<double> ion_distance;  // m, default from the trap

  std::string output_prefix;
};

/// Parses and validates; throws ValidationError naming the field.
Scenario parse_scenario(std::string_view text);

std::vector<std::string> builtin_names();
/// Throws UnknownScenario.
std::string_view builtin_text(std::string_view name);
/// Names matching exactly, or sharing the given family prefix
/// (e.g. fig4_quadrupole_sweep). Throws UnknownScenario when none match.
std::vector<std::string> resolve_builtin(std::string_view name_or_family);

std::string describe(const Scenario& scn);

/// 64-bit FNV-1a, used as the configuration hash in manifests.
std::uint64_t fnv1a64(std::string_view text);

/// Gradients the scenario sweeps, in V/mm^2.
std::vector<double> gradient_grid(const Scenario& scn);
/// The two probe pairs for a given gradient environment.
std::array<atomic::LevelPair, 2> level_pairs(const Scenario& scn);
/// Parity-frequency slope per unit gradient implied by the pairs, Hz per (V/mm^2).
double parity_slope(const Scenario& scn);
/// Plan for one block of the scenario.
experiment::RamseyPlan build_plan(const Scenario& scn, double gradient, std::uint64_t seed);

std::uint64_t block_seed(std::uint64_t seed, std::uint64_t block);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> shots_override;
  int threads = 0;
};

struct TraceBlock {
  std::optional<double> gradient;
  bool phase_scan = false;
  std::vector<experiment::ParityTrace> traces;
};

struct ScenarioResult {
  Scenario scenario;  // with overrides applied
  std::vector<TraceBlock> blocks;
  nlohmann::json report;
  bool fits_converged = true;
};

ScenarioResult run_scenario(Scenario scn, const RunOptions& options = {});

}  // namespace ionpair::scenario
