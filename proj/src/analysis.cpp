#include "ionpair/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "least_squares.hpp"

namespace ionpair::analysis {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::Map<const Eigen::VectorXd> view(const std::vector<double>& v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

void check_series(const Series& s) {
  if (s.x.size() != s.y.size() || s.x.size() != s.sigma.size()) {
    throw std::invalid_argument("series columns differ in length");
  }
  for (double sg : s.sigma) {
    if (!(sg > 0.0)) throw std::invalid_argument("series sigma must be > 0");
  }
}

double wrap_phase(double phi) {
  phi = std::remainder(phi, kTwoPi);
  return phi <= -std::numbers::pi ? phi + kTwoPi : phi;
}

// Weighted a cos(wt) + b sin(wt) projection at one frequency.
struct Quadrature {
  double a = 0.0;
  double b = 0.0;
  double chi2_drop = 0.0;
};

Quadrature project(const Series& s, double freq, std::size_t begin, std::size_t end) {
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
  Eigen::Vector2d r = Eigen::Vector2d::Zero();
  for (std::size_t i = begin; i < end; ++i) {
    const double w = 1.0 / (s.sigma[i] * s.sigma[i]);
    const double c = std::cos(kTwoPi * freq * s.x[i]);
    const double sn = std::sin(kTwoPi * freq * s.x[i]);
    m(0, 0) += w * c * c;
    m(0, 1) += w * c * sn;
    m(1, 1) += w * sn * sn;
    r(0) += w * c * s.y[i];
    r(1) += w * sn * s.y[i];
  }
  m(1, 0) = m(0, 1);
  Quadrature q;
  Eigen::FullPivLU<Eigen::Matrix2d> lu(m);
  if (!lu.isInvertible()) return q;
  const Eigen::Vector2d ab = lu.solve(r);
  q.a = ab(0);
  q.b = ab(1);
  q.chi2_drop = ab.dot(r);
  return q;
}

FitResult unconverged(std::vector<std::string> names) {
  FitResult f;
  f.params.assign(names.size(), kNaN);
  f.stderrs.assign(names.size(), kNaN);
  f.names = std::move(names);
  f.converged = false;
  return f;
}

}  // namespace

double FitResult::value(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return params[i];
  }
  throw std::out_of_range("no fit parameter named " + std::string(name));
}

double FitResult::error(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return stderrs[i];
  }
  throw std::out_of_range("no fit parameter named " + std::string(name));
}

const FitResult& FitResult::require_converged() const {
  if (!converged) throw FitError(FitErrorKind::NoConvergence, "fit did not converge");
  return *this;
}

Series parity_series(std::span<const experiment::ParityTrace> traces, double exclude_below) {
  Series s;
  for (const auto& t : traces) {
    if (t.wait < exclude_below) continue;
    s.x.push_back(t.wait);
    s.y.push_back(t.parity_mean);
    s.sigma.push_back(std::max(t.parity_stderr, 1.0 / std::max(t.shots, 1)));
  }
  return s;
}

FitResult fit_damped_sinusoid(std::span<const experiment::ParityTrace> traces, double exclude_below) {
  return fit_damped_sinusoid(parity_series(traces, exclude_below));
}

FitResult fit_damped_sinusoid(const Series& data) {
  check_series(data);
  const std::vector<std::string> names{"C0", "freq", "phase", "tau_d", "decay_rate"};
  const std::size_t n = data.x.size();
  if (n < 6) throw FitError(FitErrorKind::InsufficientData, "damped sinusoid needs >= 6 points");

  // Sort by abscissa so the envelope estimate can split early from late.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return data.x[a] < data.x[b]; });
  Series s;
  for (auto i : order) {
    s.x.push_back(data.x[i]);
    s.y.push_back(data.y[i]);
    s.sigma.push_back(data.sigma[i]);
  }
  const double span = s.x.back() - s.x.front();
  double min_step = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < n; ++i) {
    const double d = s.x[i] - s.x[i - 1];
    if (d > 0.0) min_step = std::min(min_step, d);
  }
  if (!(span > 0.0)) throw FitError(FitErrorKind::InsufficientData, "abscissa has zero span");

  // Spectral peak of the weighted periodogram.
  const double df = 1.0 / (8.0 * span);
  const double f_max = 0.5 / min_step;
  const std::size_t steps = std::min<std::size_t>(static_cast<std::size_t>(f_max / df), 200000);
  Quadrature best;
  double best_f = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double f = df * static_cast<double>(k);
    const auto q = project(s, f, 0, n);
    if (q.chi2_drop > best.chi2_drop) {
      best = q;
      best_f = f;
    }
  }
  const double amp0 = std::hypot(best.a, best.b);
  double y_scale = 0.0;
  for (double y : s.y) y_scale = std::max(y_scale, std::abs(y));
  if (best_f == 0.0 || !(amp0 > 1e-12 * (y_scale + 1e-300))) return unconverged(names);

  // Envelope decay from the amplitudes of the early and late halves.
  double rate0 = 0.0;
  {
    const std::size_t h = n / 2;
    const auto q1 = project(s, best_f, 0, h);
    const auto q2 = project(s, best_f, h, n);
    const double a1 = std::hypot(q1.a, q1.b);
    const double a2 = std::hypot(q2.a, q2.b);
    double t1 = 0.0, t2 = 0.0;
    for (std::size_t i = 0; i < h; ++i) t1 += s.x[i];
    for (std::size_t i = h; i < n; ++i) t2 += s.x[i];
    t1 /= static_cast<double>(h);
    t2 /= static_cast<double>(n - h);
    if (a1 > 0.0 && a2 > 0.0 && t2 > t1) rate0 = std::max(0.0, std::log(a1 / a2) / (t2 - t1));
  }

  detail::LmProblem problem;
  const Eigen::VectorXd x = view(s.x);
  problem.y = view(s.y);
  problem.sigma = view(s.sigma);
  problem.model = [x](const Eigen::VectorXd& p) {
    Eigen::VectorXd m(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      m(i) = p(0) * std::exp(-p(3) * x(i)) * std::cos(kTwoPi * p(1) * x(i) + p(2));
    }
    return m;
  };
  problem.jacobian = [x](const Eigen::VectorXd& p) {
    Eigen::MatrixXd j(x.size(), 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double e = std::exp(-p(3) * x(i));
      const double arg = kTwoPi * p(1) * x(i) + p(2);
      const double c = std::cos(arg);
      const double sn = std::sin(arg);
      j(i, 0) = e * c;
      j(i, 1) = -p(0) * e * sn * kTwoPi * x(i);
      j(i, 2) = -p(0) * e * sn;
      j(i, 3) = -x(i) * p(0) * e * c;
    }
    return j;
  };
  Eigen::VectorXd start(4);
  // Envelope is referenced to t = 0; the projection measured it on average
  // over the scan, so scale back by the initial decay estimate.
  double mean_t = 0.0;
  for (double t : s.x) mean_t += t;
  mean_t /= static_cast<double>(n);
  start << amp0 * std::exp(rate0 * mean_t), best_f, std::atan2(-best.b, best.a), rate0;
  const auto lm = detail::levenberg_marquardt(problem, start);

  Eigen::VectorXd p = lm.params;
  if (p(0) < 0.0) {
    p(0) = -p(0);
    p(2) += std::numbers::pi;
  }
  if (p(1) < 0.0) {
    p(1) = -p(1);
    p(2) = -p(2);
  }
  p(2) = wrap_phase(p(2));

  FitResult f;
  f.names = names;
  const auto err = [&](int i) { return std::sqrt(std::max(lm.covariance(i, i), 0.0)); };
  const double rate = p(3);
  f.params = {p(0), p(1), p(2), 1.0 / rate, rate};
  f.stderrs = {err(0), err(1), err(2), err(3) / (rate * rate), err(3)};
  f.chi2_reduced = n > 4 ? lm.chi2 / static_cast<double>(n - 4) : 0.0;
  f.iterations = lm.iterations;
  f.converged = lm.converged && p.allFinite() && p(1) * span >= 1.0;
  return f;
}

FitResult fit_contrast_gaussian(const Series& data) {
  check_series(data);
  const std::vector<std::string> names{"C0", "tau_half"};
  const std::size_t n = data.x.size();
  if (n < 5) throw FitError(FitErrorKind::InsufficientData, "gaussian contrast fit needs >= 5 points");

  // Log-linear start: ln C = ln C0 - k t^2.
  double sw = 0, su = 0, sv = 0, suu = 0, suv = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(data.y[i] > 0.0)) continue;
    const double w = std::pow(data.y[i] / data.sigma[i], 2);
    const double u = data.x[i] * data.x[i];
    const double v = std::log(data.y[i]);
    sw += w;
    su += w * u;
    sv += w * v;
    suu += w * u * u;
    suv += w * u * v;
  }
  const double det = sw * suu - su * su;
  if (!(det > 0.0)) return unconverged(names);
  const double slope = (sw * suv - su * sv) / det;
  const double intercept = (sv - slope * su) / sw;
  if (!(slope < 0.0)) return unconverged(names);

  detail::LmProblem problem;
  const Eigen::VectorXd x = view(data.x);
  problem.y = view(data.y);
  problem.sigma = view(data.sigma);
  problem.model = [x](const Eigen::VectorXd& p) {
    return Eigen::VectorXd(p(0) * (-p(1) * x.array().square()).exp());
  };
  problem.jacobian = [x](const Eigen::VectorXd& p) {
    Eigen::MatrixXd j(x.size(), 2);
    const Eigen::ArrayXd e = (-p(1) * x.array().square()).exp();
    j.col(0) = e.matrix();
    j.col(1) = (-p(0) * x.array().square() * e).matrix();
    return j;
  };
  Eigen::VectorXd start(2);
  start << std::exp(intercept), -slope;
  const auto lm = detail::levenberg_marquardt(problem, start);
  const double k = lm.params(1);
  if (!(k > 0.0) || !lm.params.allFinite()) return unconverged(names);

  FitResult f;
  f.names = names;
  const double tau = std::sqrt(std::numbers::ln2 / k);
  const double sk = std::sqrt(std::max(lm.covariance(1, 1), 0.0));
  f.params = {lm.params(0), tau};
  f.stderrs = {std::sqrt(std::max(lm.covariance(0, 0), 0.0)), 0.5 * tau / k * sk};
  f.chi2_reduced = n > 2 ? lm.chi2 / static_cast<double>(n - 2) : 0.0;
  f.iterations = lm.iterations;
  f.converged = lm.converged;
  return f;
}

double linewidth_from_tau_half(double tau_half) {
  if (!(tau_half > 0.0)) throw std::invalid_argument("tau_half must be > 0");
  return std::numbers::ln2 / (std::numbers::pi * tau_half);
}

FitResult fit_line(std::span<const double> x, std::span<const double> y,
                   std::span<const double> y_err) {
  if (x.size() != y.size() || x.size() != y_err.size()) {
    throw std::invalid_argument("fit_line inputs differ in length");
  }
  if (x.size() < 2) throw FitError(FitErrorKind::InsufficientData, "line fit needs >= 2 points");
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) {
    throw FitError(FitErrorKind::DegenerateDesign, "all abscissae are equal");
  }
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y_err[i] > 0.0)) throw std::invalid_argument("y_err must be > 0");
    const double w = 1.0 / (y_err[i] * y_err[i]);
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
  }
  const double xm = sx / sw;
  const double ym = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 1.0 / (y_err[i] * y_err[i]);
    sxx += w * (x[i] - xm) * (x[i] - xm);
    sxy += w * (x[i] - xm) * (y[i] - ym);
  }
  const double alpha = sxy / sxx;
  const double offset = ym - alpha * xm;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    chi2 += std::pow((y[i] - alpha * x[i] - offset) / y_err[i], 2);
  }
  FitResult f;
  f.names = {"alpha", "offset"};
  f.params = {alpha, offset};
  f.stderrs = {std::sqrt(1.0 / sxx), std::sqrt(1.0 / sw + xm * xm / sxx)};
  f.chi2_reduced = x.size() > 2 ? chi2 / static_cast<double>(x.size() - 2) : 0.0;
  f.converged = true;
  return f;
}

double projection_noise_sigma(double tau, double contrast, long n_experiments) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  if (!(contrast > 0.0 && contrast <= 1.0)) throw std::invalid_argument("contrast must lie in (0, 1]");
  if (n_experiments < 1) throw std::invalid_argument("N must be >= 1");
  return 1.0 / ((tau / 2.0) * contrast * std::sqrt(2.0 * static_cast<double>(n_experiments)));
}

FringeFit fit_phase_fringe(std::span<const experiment::ParityTrace> traces) {
  if (traces.size() < 3) throw FitError(FitErrorKind::InsufficientData, "fringe fit needs >= 3 points");
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  Eigen::Vector3d r = Eigen::Vector3d::Zero();
  for (const auto& t : traces) {
    const double sg = std::max(t.parity_stderr, 1.0 / std::max(t.shots, 1));
    const double w = 1.0 / (sg * sg);
    const Eigen::Vector3d row(std::cos(t.phi0), std::sin(t.phi0), 1.0);
    m += w * row * row.transpose();
    r += w * row * t.parity_mean;
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
  if (!lu.isInvertible()) throw FitError(FitErrorKind::DegenerateDesign, "phase grid cannot separate quadratures");
  const Eigen::Matrix3d cov = lu.inverse();
  const Eigen::Vector3d abc = cov * r;
  FringeFit out;
  out.contrast = std::hypot(abc(0), abc(1));
  out.dc = abc(2);
  out.phase_offset = std::atan2(-abc(1), abc(0));
  if (out.contrast > 0.0) {
    const Eigen::Vector2d g(abc(0) / out.contrast, abc(1) / out.contrast);
    out.contrast_err = std::sqrt(std::max(g.dot(cov.topLeftCorner<2, 2>() * g), 0.0));
  } else {
    out.contrast_err = std::sqrt(std::max(cov(0, 0), 0.0));
  }
  return out;
}

}  // namespace ionpair::analysis
