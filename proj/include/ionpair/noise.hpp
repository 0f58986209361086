#pragma once

// Seeded collective-noise sources. Every random quantity of a shot is a pure
// function of (master_seed, shot_index, stream), so shots can be evaluated in
// any order or in parallel with identical results.
//
// Substream derivation, fixed for cross-implementation reproducibility:
//   mix(z)  = SplitMix64 finalizer (Stafford variant 13)
//   seed    = mix(master_seed ^ mix(shot_index + 0x9E3779B97F4A7C15 * (stream + 1)))
// The seed initialises std::mt19937_64; uniforms take the top 53 bits and
// normals use the Box-Muller cosine branch on two consecutive uniforms.

#include <cstdint>
#include <random>
#include <stdexcept>

namespace ionpair::noise {

struct NoiseModel {
  double b_rms = 0.0;        // G
  double b_corr_time = 1.0;  // s
  double laser_fwhm = 0.0;   // Hz, Gaussian line
  double laser_offset = 0.0; // Hz
  std::uint64_t master_seed = 0;
};

void validate(const NoiseModel& model);

struct ShotNoiseDraw {
  double b_phase_integral = 0.0;  // G s, integral of dB over the wait
  double laser_freq = 0.0;        // Hz, quasi-static laser error for the shot
  double phi_x = 0.0;             // rad, uniform on [0, 2pi)
};

enum class Stream : std::uint64_t { Noise = 0, Measurement = 1 };

std::uint64_t mix64(std::uint64_t z);
std::uint64_t substream_seed(std::uint64_t master_seed, std::uint64_t shot_index,
                             Stream stream);

class ShotRng {
 public:
  explicit ShotRng(std::uint64_t seed) : engine_(seed) {}
  ShotRng(std::uint64_t master_seed, std::uint64_t shot_index, Stream stream)
      : engine_(substream_seed(master_seed, shot_index, stream)) {}

  /// Uniform on [0, 1).
  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// Variance of the integral of a stationary OU process with rms b_rms and
/// correlation time tc over [0, wait]: 2 b^2 tc (wait - tc (1 - exp(-wait/tc))).
double ou_integral_variance(double b_rms, double corr_time, double wait);

/// Gaussian sigma for a full width at half maximum.
double sigma_from_fwhm(double fwhm);

ShotNoiseDraw draw_shot(const NoiseModel& model, double wait, std::uint64_t shot_index);

class ZeroNoise : public std::domain_error {
 public:
  ZeroNoise() : std::domain_error("magnetic noise amplitude is zero") {}
};

/// 1/e contrast time of a single-ion coherence with the given Zeeman
/// sensitivity (Hz/G) under the model's OU field noise. Returns +infinity for
/// an insensitive coherence; throws ZeroNoise when b_rms == 0.
double single_ion_dephasing_time(const NoiseModel& model, double zeeman_sensitivity);

/// Ensemble contrast |<exp(i 2 pi s X)>| for the OU phase integral X.
double single_ion_contrast(const NoiseModel& model, double zeeman_sensitivity, double wait);

}  // namespace ionpair::noise
