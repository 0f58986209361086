#pragma once

// Weighted Levenberg-Marquardt for small dense problems with analytic
// Jacobians. Internal to the analysis layer.

#include <functional>

#include <Eigen/Dense>

namespace ionpair::analysis::detail {

struct LmProblem {
  // Model values at every abscissa for the parameter vector.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> model;
  // d model / d params, rows = points, cols = params.
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
  Eigen::VectorXd y;
  Eigen::VectorXd sigma;
};

struct LmResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

LmResult levenberg_marquardt(const LmProblem& problem, Eigen::VectorXd start, int max_iterations = 200);

double weighted_chi2(const LmProblem& problem, const Eigen::VectorXd& params);

}  // namespace ionpair::analysis::detail
