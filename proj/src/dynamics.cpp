#include "ionpair/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ionpair::dynamics {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const atomic::LevelPair& pair_of(const TwoIonState& s, int ion) {
  return ion == 1 ? s.pair1 : s.pair2;
}

int level_of(int index, int ion) { return ion == 1 ? index / 3 : index % 3; }

// Per-basis-state sums over the ions sitting in their upper level.
struct BasisCoefficients {
  std::array<double, 9> detuning{};  // Hz, static + quadrupole
  std::array<double, 9> zeeman{};    // Hz/G
  std::array<double, 9> laser{};     // number of laser-coupled excitations
};

BasisCoefficients coefficients(const TwoIonState& s, double gradient) {
  BasisCoefficients c;
  for (int a = 0; a < 9; ++a) {
    for (int ion = 1; ion <= 2; ++ion) {
      if (level_of(a, ion) != kUpper) continue;
      const auto& p = pair_of(s, ion);
      c.detuning[a] += p.static_detuning + p.quadrupole_sensitivity * gradient;
      c.zeeman[a] += p.zeeman_sensitivity;
      c.laser[a] += p.laser_coupled ? 1.0 : 0.0;
    }
  }
  return c;
}

void decay_ion(Matrix9& rho, int ion, const atomic::LevelPair& pair, double wait) {
  const double rate_l = pair.lower.decay_rate;
  const double rate_u = pair.upper.decay_rate;
  if (rate_l == 0.0 && rate_u == 0.0) return;
  const std::array<double, 3> keep{std::exp(-0.5 * rate_l * wait), std::exp(-0.5 * rate_u * wait),
                                   1.0};
  const std::array<double, 2> jump{-std::expm1(-rate_l * wait), -std::expm1(-rate_u * wait)};

  Matrix9 out;
  for (int a = 0; a < 9; ++a) {
    for (int b = 0; b < 9; ++b) {
      out(a, b) = rho(a, b) * (keep[level_of(a, ion)] * keep[level_of(b, ion)]);
    }
  }
  // Population leaving {lower, upper} lands incoherently in the leak level,
  // keeping whatever correlations it had with the other ion.
  for (int y = 0; y < 3; ++y) {
    for (int yp = 0; yp < 3; ++yp) {
      Complex gained = 0.0;
      for (int l = 0; l < 2; ++l) {
        const int a = ion == 1 ? composite(l, y) : composite(y, l);
        const int b = ion == 1 ? composite(l, yp) : composite(yp, l);
        gained += jump[l] * rho(a, b);
      }
      const int a = ion == 1 ? composite(kLeaked, y) : composite(y, kLeaked);
      const int b = ion == 1 ? composite(kLeaked, yp) : composite(yp, kLeaked);
      out(a, b) += gained;
    }
  }
  rho = out;
}

void depolarize_ion(Matrix9& rho, int ion, double fidelity) {
  Matrix9 out = fidelity * rho;
  for (int y = 0; y < 3; ++y) {
    for (int yp = 0; yp < 3; ++yp) {
      Complex reduced = 0.0;
      for (int u = 0; u < 2; ++u) {
        reduced += rho(ion == 1 ? composite(u, y) : composite(y, u),
                       ion == 1 ? composite(u, yp) : composite(yp, u));
      }
      for (int u = 0; u < 2; ++u) {
        out(ion == 1 ? composite(u, y) : composite(y, u),
            ion == 1 ? composite(u, yp) : composite(yp, u)) += 0.5 * (1.0 - fidelity) * reduced;
      }
    }
  }
  rho = out;
}

}  // namespace

void validate(const PulseSpec& pulse) {
  if (pulse.target != 1 && pulse.target != 2) throw std::invalid_argument("pulse target must be 1 or 2");
  if (!(pulse.area > 0.0 && pulse.area <= 2.0 * std::numbers::pi)) {
    throw std::invalid_argument("pulse area must lie in (0, 2pi]");
  }
}

TwoIonState prepare(const PrepareKind& kind, const atomic::LevelPair& pair1,
                    const atomic::LevelPair& pair2, double fidelity) {
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) throw std::invalid_argument("fidelity must lie in [0, 1]");
  Vector9 psi = Vector9::Zero();
  switch (kind.kind) {
    case PrepareKind::Kind::Bell:
      psi(composite(kLower, kUpper)) = 1.0 / std::sqrt(2.0);
      psi(composite(kUpper, kLower)) = std::polar(1.0 / std::sqrt(2.0), kind.bell_phase);
      break;
    case PrepareKind::Kind::Product:
      for (int a : {composite(kLower, kLower), composite(kLower, kUpper),
                    composite(kUpper, kLower), composite(kUpper, kUpper)}) {
        psi(a) = 0.5;
      }
      break;
    case PrepareKind::Kind::GroundGround:
      psi(composite(kLower, kLower)) = 1.0;
      break;
  }
  TwoIonState s;
  s.rho = psi * psi.adjoint();
  s.pair1 = pair1;
  s.pair2 = pair2;
  if (fidelity < 1.0) {
    depolarize_ion(s.rho, 1, fidelity);
    depolarize_ion(s.rho, 2, fidelity);
  }
  return s;
}

TwoIonState evolve(const TwoIonState& state, double wait, const noise::ShotNoiseDraw& draw,
                   const atomic::QuadrupoleEnvironment& env, double b0) {
  if (!(wait >= 0.0)) throw std::invalid_argument("wait must be >= 0");
  TwoIonState out = state;
  if (wait == 0.0) return out;
  const auto c = coefficients(state, env.field_gradient);
  const double field_integral = b0 * wait + draw.b_phase_integral;
  // Differences are formed per coefficient so that sensitivities cancelling
  // exactly never see the (large, noisy) field term.
  for (int a = 0; a < 9; ++a) {
    for (int b = 0; b < 9; ++b) {
      if (a == b) continue;
      const double phase =
          kTwoPi * ((c.detuning[a] - c.detuning[b]) * wait +
                    (c.zeeman[a] - c.zeeman[b]) * field_integral -
                    (c.laser[a] - c.laser[b]) * draw.laser_freq * wait);
      out.rho(a, b) *= std::polar(1.0, -phase);
    }
  }
  decay_ion(out.rho, 1, state.pair1, wait);
  decay_ion(out.rho, 2, state.pair2, wait);
  return out;
}

TwoIonState collective_dephase(const TwoIonState& state) {
  TwoIonState out = state;
  const auto c = coefficients(state, 0.0);
  for (int a = 0; a < 9; ++a) {
    for (int b = 0; b < 9; ++b) {
      if (c.zeeman[a] != c.zeeman[b]) out.rho(a, b) = 0.0;
    }
  }
  return out;
}

TwoIonState apply_pulse(const TwoIonState& state, const PulseSpec& pulse) {
  validate(pulse);
  const double c = std::cos(pulse.area / 2.0);
  const double s = std::sin(pulse.area / 2.0);
  Eigen::Matrix<Complex, 3, 3> u = Eigen::Matrix<Complex, 3, 3>::Identity();
  u(0, 0) = c;
  u(1, 1) = c;
  u(0, 1) = Complex(0.0, -1.0) * std::polar(s, -pulse.phase);
  u(1, 0) = Complex(0.0, -1.0) * std::polar(s, pulse.phase);

  Matrix9 full = Matrix9::Zero();
  for (int a = 0; a < 9; ++a) {
    for (int b = 0; b < 9; ++b) {
      if (pulse.target == 1) {
        if (a % 3 == b % 3) full(a, b) = u(a / 3, b / 3);
      } else {
        if (a / 3 == b / 3) full(a, b) = u(a % 3, b % 3);
      }
    }
  }
  TwoIonState out = state;
  out.rho = full * state.rho * full.adjoint();
  return out;
}

OutcomeProbs measure_probs(const TwoIonState& state, LeakDetection leak) {
  auto dark = [leak](int level) {
    return level == kUpper || (level == kLeaked && leak == LeakDetection::Dark);
  };
  OutcomeProbs probs{};
  for (int a = 0; a < 9; ++a) {
    const int outcome = 2 * (dark(a / 3) ? 1 : 0) + (dark(a % 3) ? 1 : 0);
    probs[outcome] += state.rho(a, a).real();
  }
  return probs;
}

double parity(const OutcomeProbs& probs) { return probs[0] - probs[1] - probs[2] + probs[3]; }

double basis_zeeman_sensitivity(const TwoIonState& state, int index) {
  return coefficients(state, 0.0).zeeman[index];
}

double trace_deviation(const Matrix9& rho) { return std::abs(rho.trace() - 1.0); }

double hermiticity_deviation(const Matrix9& rho) { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }

double min_eigenvalue(const Matrix9& rho) {
  const Matrix9 h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix9> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double purity(const Matrix9& rho) { return (rho * rho).trace().real(); }

double overlap(const Matrix9& rho, const Vector9& psi) {
  return (psi.adjoint() * rho * psi)(0, 0).real();
}

}  // namespace ionpair::dynamics
