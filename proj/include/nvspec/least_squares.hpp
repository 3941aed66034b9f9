#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nvspec {

/// Residual function r(x); the objective is |r(x)|^2.
using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LeastSquaresProblem {
    ResidualFunction residuals;
    std::vector<std::string> names;
    Eigen::VectorXd lower;  // -inf for unbounded
    Eigen::VectorXd upper;  // +inf for unbounded
    /// Typical magnitude per parameter, used for finite-difference steps.
    Eigen::VectorXd typical;
};

struct LeastSquaresOptions {
    int max_iterations = 200;
    /// Converged when max_j |J_j . r| / (|J_j| |r|) falls below this.
    double gradient_tolerance = 1e-5;
    double step_tolerance = 1e-10;        // relative
    double cost_tolerance = 1e-14;        // relative decrease
    double initial_damping = 1e-3;
    double relative_fd_step = 1e-5;
    /// Objective values at or below this count as an exact fit.
    double cost_floor = 0.0;
};

struct LeastSquaresResult {
    Eigen::VectorXd x;
    double cost = 0.0;  // sum of squared residuals
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::string status;
    /// Accepted objective values, starting with the initial point.
    std::vector<double> cost_history;
    Eigen::MatrixXd jacobian;
    /// s^2 (J^T J)^-1 with s^2 = cost / (m - n); NaN when singular.
    Eigen::MatrixXd covariance;
    Eigen::VectorXd sigma;
    bool singular = false;
    /// Parameter dominating the null direction of J^T J, when singular.
    std::optional<std::string> degenerate_parameter;
};

/// Central differences, one-sided where a step would cross a bound.
/// `r0` must equal residuals(x).
Eigen::MatrixXd numerical_jacobian(const LeastSquaresProblem& problem, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& r0, double relative_step,
                                   int* evaluations = nullptr);

/// Damped Gauss-Newton (Levenberg-Marquardt, Marquardt diagonal scaling) with
/// bound projection. Each iteration first tries the undamped step. The
/// objective never increases between accepted iterates. x0 is projected onto
/// the bounds first.
LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                                       const LeastSquaresOptions& options = {});

}  // namespace nvspec
