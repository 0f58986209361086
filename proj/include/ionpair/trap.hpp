#pragma once

namespace ionpair::trap {

inline constexpr double kCa40MassU = 39.962591;

struct TrapConfig {
  double axial_freq = 1.0e6;   // Hz
  double radial_freq = 4.0e6;  // Hz
  double ion_mass = kCa40MassU;  // u
};

/// Throws std::invalid_argument unless 0 < axial < radial and mass > 0.
void validate(const TrapConfig& cfg);

/// Equilibrium separation of two identical ions in the axial well, metres.
double two_ion_distance(const TrapConfig& cfg);

/// |dE_z/dz| = m w_z^2 / e, in V/mm^2.
double gradient_from_axial_freq(const TrapConfig& cfg);

/// Tip voltage to axial frequency through the two calibration endpoints
/// (500 V -> 860 kHz, 2000 V -> 1720 kHz), using w_z proportional to sqrt(V).
double axial_freq_from_tip_voltage(double volts);

}  // namespace ionpair::trap
