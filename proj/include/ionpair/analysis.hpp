#pragma once

// Estimation layer: weighted fits of parity traces and contrast curves,
// linewidth conversion and the projection-noise error estimate.

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ionpair/experiment.hpp"

namespace ionpair::analysis {

enum class FitErrorKind { InsufficientData, NoConvergence, DegenerateDesign };

class FitError : public std::runtime_error {
 public:
  FitError(FitErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  FitErrorKind kind() const { return kind_; }

 private:
  FitErrorKind kind_;
};

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> stderrs;
  double chi2_reduced = 0.0;
  bool converged = false;
  int iterations = 0;

  /// Throws std::out_of_range for an unknown name.
  double value(std::string_view name) const;
  double error(std::string_view name) const;
  /// Throws FitError(NoConvergence) when the fit did not converge.
  const FitResult& require_converged() const;
};

/// Weighted data series; sigma must be > 0.
struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> sigma;
};

/// Wait-scan traces to a series, dropping waits below `exclude_below`. Parity
/// errors are floored at 1/shots so that saturated points keep finite weight.
Series parity_series(std::span<const experiment::ParityTrace> traces, double exclude_below = 0.0);

/// C0 exp(-t/tau_d) cos(2 pi freq t + phase), freq > 0. Parameters: C0, freq,
/// phase, tau_d, decay_rate (= 1/tau_d, the fitted quantity).
FitResult fit_damped_sinusoid(const Series& data);
FitResult fit_damped_sinusoid(std::span<const experiment::ParityTrace> traces, double exclude_below);

/// C0 exp(-ln2 (t/tau_half)^2). Parameters: C0, tau_half.
FitResult fit_contrast_gaussian(const Series& data);

/// Laser FWHM (Hz) from the parity-contrast half-width: ln2 / (pi tau_half).
double linewidth_from_tau_half(double tau_half);

/// y = alpha x + offset. Parameters: alpha, offset.
FitResult fit_line(std::span<const double> x, std::span<const double> y,
                   std::span<const double> y_err);

/// 1 / ((tau/2) C sqrt(2N)).
double projection_noise_sigma(double tau, double contrast, long n_experiments);

/// Fringe fit A cos(phi0 + offset) + B over a phase scan; contrast = |A|.
struct FringeFit {
  double contrast = 0.0;
  double contrast_err = 0.0;
  double phase_offset = 0.0;
  double dc = 0.0;
};
FringeFit fit_phase_fringe(std::span<const experiment::ParityTrace> traces);

}  // namespace ionpair::analysis
