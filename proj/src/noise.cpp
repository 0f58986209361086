#include "ionpair/noise.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ionpair::noise {

void validate(const NoiseModel& model) {
  if (!(model.b_rms >= 0.0)) throw std::invalid_argument("b_rms must be >= 0");
  if (!(model.b_corr_time > 0.0)) throw std::invalid_argument("b_corr_time must be > 0");
  if (!(model.laser_fwhm >= 0.0)) throw std::invalid_argument("laser_fwhm must be >= 0");
  if (!std::isfinite(model.laser_offset)) throw std::invalid_argument("laser_offset must be finite");
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t substream_seed(std::uint64_t master_seed, std::uint64_t shot_index,
                             Stream stream) {
  const auto s = static_cast<std::uint64_t>(stream);
  return mix64(master_seed ^ mix64(shot_index + 0x9E3779B97F4A7C15ULL * (s + 1)));
}

double ShotRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double ShotRng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double ou_integral_variance(double b_rms, double corr_time, double wait) {
  if (wait <= 0.0 || b_rms == 0.0) return 0.0;
  const double x = wait / corr_time;
  // tc^2 (x - 1 + e^-x) loses precision for small x; expand instead.
  double bracket;
  if (x < 1e-4) {
    bracket = corr_time * corr_time * (x * x / 2.0 - x * x * x / 6.0);
  } else {
    bracket = corr_time * (wait - corr_time * (-std::expm1(-x)));
  }
  return 2.0 * b_rms * b_rms * bracket;
}

double sigma_from_fwhm(double fwhm) {
  return fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
}

ShotNoiseDraw draw_shot(const NoiseModel& model, double wait, std::uint64_t shot_index) {
  ShotRng rng(model.master_seed, shot_index, Stream::Noise);
  ShotNoiseDraw draw;
  const double zb = rng.normal();
  const double zl = rng.normal();
  draw.phi_x = 2.0 * std::numbers::pi * rng.uniform();
  draw.b_phase_integral = std::sqrt(ou_integral_variance(model.b_rms, model.b_corr_time, wait)) * zb;
  draw.laser_freq = model.laser_offset + sigma_from_fwhm(model.laser_fwhm) * zl;
  return draw;
}

double single_ion_contrast(const NoiseModel& model, double zeeman_sensitivity, double wait) {
  const double k = 2.0 * std::numbers::pi * zeeman_sensitivity;
  return std::exp(-0.5 * k * k * ou_integral_variance(model.b_rms, model.b_corr_time, wait));
}

double single_ion_dephasing_time(const NoiseModel& model, double zeeman_sensitivity) {
  if (model.b_rms == 0.0) throw ZeroNoise();
  if (zeeman_sensitivity == 0.0) return std::numeric_limits<double>::infinity();
  const double k = 2.0 * std::numbers::pi * std::abs(zeeman_sensitivity);
  // Contrast hits 1/e where the phase variance k^2 V(t) equals 2.
  const double target = 2.0 / (k * k);
  auto variance = [&](double t) {
    return ou_integral_variance(model.b_rms, model.b_corr_time, t);
  };
  double lo = 0.0;
  double hi = std::sqrt(2.0) / (k * model.b_rms);  // quasi-static answer, a lower bound
  while (variance(hi) < target) hi *= 2.0;
  for (int i = 0; i < 200 && (hi - lo) > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (variance(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace ionpair::noise
