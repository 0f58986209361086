#include "least_squares.hpp"

#include <cmath>
#include <limits>

namespace ionpair::analysis::detail {

double weighted_chi2(const LmProblem& problem, const Eigen::VectorXd& params) {
  const Eigen::VectorXd r = (problem.y - problem.model(params)).cwiseQuotient(problem.sigma);
  return r.squaredNorm();
}

LmResult levenberg_marquardt(const LmProblem& problem, Eigen::VectorXd start, int max_iterations) {
  LmResult out;
  out.params = std::move(start);
  const Eigen::VectorXd w = problem.sigma.cwiseInverse();
  double chi2 = weighted_chi2(problem, out.params);
  double lambda = 1e-3;

  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it + 1;
    const Eigen::MatrixXd j = w.asDiagonal() * problem.jacobian(out.params);
    const Eigen::VectorXd r = (problem.y - problem.model(out.params)).cwiseProduct(w);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd jtr = j.transpose() * r;

    bool improved = false;
    double new_chi2 = chi2;
    Eigen::VectorXd trial;
    while (lambda < 1e12) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(jtr);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      trial = out.params + step;
      new_chi2 = weighted_chi2(problem, trial);
      if (std::isfinite(new_chi2) && new_chi2 <= chi2) {
        improved = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // No downhill step at any damping: a stationary point.
      out.converged = true;
      break;
    }
    const double drop = chi2 - new_chi2;
    const Eigen::VectorXd delta = trial - out.params;
    out.params = trial;
    chi2 = new_chi2;
    lambda = std::max(lambda / 10.0, 1e-12);
    const bool small_step =
        delta.cwiseAbs().maxCoeff() <= 1e-12 * (out.params.cwiseAbs().maxCoeff() + 1e-12);
    if (drop <= 1e-12 * (chi2 + 1e-300) || small_step) {
      out.converged = true;
      break;
    }
  }

  out.chi2 = chi2;
  const Eigen::MatrixXd j = w.asDiagonal() * problem.jacobian(out.params);
  const Eigen::MatrixXd jtj = j.transpose() * j;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (!lu.isInvertible() || !out.params.allFinite()) {
    out.converged = false;
    out.covariance = Eigen::MatrixXd::Constant(jtj.rows(), jtj.cols(),
                                               std::numeric_limits<double>::quiet_NaN());
  } else {
    out.covariance = lu.inverse();
  }
  return out;
}

}  // namespace ionpair::analysis::detail
