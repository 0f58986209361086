#include "ionpair/trap.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ionpair::trap {

namespace {

constexpr double kCharge = 1.602176634e-19;
constexpr double kEpsilon0 = 8.8541878128e-12;
constexpr double kAtomicMass = 1.66053906660e-27;

double angular(double hz) { return 2.0 * std::numbers::pi * hz; }

}  // namespace

void validate(const TrapConfig& cfg) {
  if (!(cfg.axial_freq > 0.0) || !std::isfinite(cfg.axial_freq)) {
    throw std::invalid_argument("axial_freq must be > 0");
  }
  if (!(cfg.radial_freq > cfg.axial_freq)) {
    throw std::invalid_argument("radial_freq must exceed axial_freq");
  }
  if (!(cfg.ion_mass > 0.0)) throw std::invalid_argument("ion_mass must be > 0");
}

double two_ion_distance(const TrapConfig& cfg) {
  validate(cfg);
  const double w = angular(cfg.axial_freq);
  const double m = cfg.ion_mass * kAtomicMass;
  return std::cbrt(kCharge * kCharge / (2.0 * std::numbers::pi * kEpsilon0 * m * w * w));
}

double gradient_from_axial_freq(const TrapConfig& cfg) {
  validate(cfg);
  const double w = angular(cfg.axial_freq);
  const double si = cfg.ion_mass * kAtomicMass * w * w / kCharge;  // V/m^2
  return si * 1e-6;
}

double axial_freq_from_tip_voltage(double volts) {
  if (!(volts > 0.0)) throw std::invalid_argument("tip voltage must be > 0");
  return 860.0e3 * std::sqrt(volts / 500.0);
}

}  // namespace ionpair::trap
