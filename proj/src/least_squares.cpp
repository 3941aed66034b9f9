#include "nvspec/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nvspec {

namespace {

Eigen::VectorXd clamp(const Eigen::VectorXd& x, const LeastSquaresProblem& p) {
    return x.cwiseMax(p.lower).cwiseMin(p.upper);
}

double gradient_cosine(const Eigen::MatrixXd& j, const Eigen::VectorXd& r) {
    const double rn = r.norm();
    if (rn == 0.0) return 0.0;
    const Eigen::VectorXd g = j.transpose() * r;
    double worst = 0.0;
    for (Eigen::Index c = 0; c < j.cols(); ++c) {
        const double cn = j.col(c).norm();
        if (cn == 0.0) continue;
        worst = std::max(worst, std::abs(g(c)) / (cn * rn));
    }
    return worst;
}

void fill_covariance(LeastSquaresResult& result, const LeastSquaresProblem& problem, Eigen::Index m) {
    const Eigen::Index n = result.x.size();
    const Eigen::MatrixXd& j = result.jacobian;
    const Eigen::MatrixXd a = j.transpose() * j;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    result.covariance = Eigen::MatrixXd::Constant(n, n, nan);
    result.sigma = Eigen::VectorXd::Constant(n, nan);

    // Column-equilibrated normal matrix; a tiny eigenvalue exposes the null direction.
    Eigen::VectorXd d(n);
    for (Eigen::Index c = 0; c < n; ++c) d(c) = std::sqrt(a(c, c));
    Eigen::Index zero_col = -1;
    for (Eigen::Index c = 0; c < n; ++c) {
        if (!(d(c) > 0.0)) zero_col = c;
    }
    if (zero_col >= 0) {
        result.singular = true;
        result.degenerate_parameter = problem.names.at(static_cast<std::size_t>(zero_col));
        return;
    }
    const Eigen::MatrixXd scaled = d.asDiagonal().inverse() * a * d.asDiagonal().inverse();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(n - 1);
    if (!(lo > 1e-14 * hi)) {
        result.singular = true;
        Eigen::Index worst = 0;
        eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&worst);
        result.degenerate_parameter = problem.names.at(static_cast<std::size_t>(worst));
        return;
    }
    const double dof = static_cast<double>(m - n);
    const double s2 = dof > 0.0 ? result.cost / dof : nan;
    const Eigen::MatrixXd inv_scaled = eig.eigenvectors() *
                                       eig.eigenvalues().cwiseInverse().asDiagonal() *
                                       eig.eigenvectors().transpose();
    result.covariance = s2 * (d.asDiagonal().inverse() * inv_scaled * d.asDiagonal().inverse());
    result.covariance = 0.5 * (result.covariance + result.covariance.transpose()).eval();
    result.sigma = result.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

Eigen::MatrixXd numerical_jacobian(const LeastSquaresProblem& problem, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& r0, double relative_step,
                                   int* evaluations) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd j(r0.size(), n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const double h = relative_step * std::max(std::abs(x(c)), problem.typical(c));
        const bool up_ok = x(c) + h <= problem.upper(c);
        const bool down_ok = x(c) - h >= problem.lower(c);
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        if (up_ok && down_ok) {
            xp(c) += h;
            xm(c) -= h;
            j.col(c) = (problem.residuals(xp) - problem.residuals(xm)) / (2.0 * h);
            if (evaluations) *evaluations += 2;
        } else if (up_ok) {
            xp(c) += h;
            j.col(c) = (problem.residuals(xp) - r0) / h;
            if (evaluations) *evaluations += 1;
        } else if (down_ok) {
            xm(c) -= h;
            j.col(c) = (r0 - problem.residuals(xm)) / h;
            if (evaluations) *evaluations += 1;
        } else {
            j.col(c).setZero();  // bounds narrower than the step: pinned
        }
    }
    return j;
}

LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                                       const LeastSquaresOptions& options) {
    const Eigen::Index n = x0.size();
    if (n == 0) throw std::invalid_argument("least squares needs at least one free parameter");
    if (problem.lower.size() != n || problem.upper.size() != n || problem.typical.size() != n ||
        static_cast<Eigen::Index>(problem.names.size()) != n) {
        throw std::invalid_argument("least squares problem arrays must match the parameter count");
    }
    for (Eigen::Index c = 0; c < n; ++c) {
        if (!(problem.lower(c) <= problem.upper(c))) {
            throw std::invalid_argument("bounds of '" + problem.names[static_cast<std::size_t>(c)] +
                                        "' are not ordered");
        }
    }

    LeastSquaresResult result;
    result.x = clamp(x0, problem);
    Eigen::VectorXd r = problem.residuals(result.x);
    result.evaluations = 1;
    if (!r.allFinite()) throw std::invalid_argument("residuals are not finite at the initial point");
    const Eigen::Index m = r.size();
    result.cost = r.squaredNorm();
    result.cost_history.push_back(result.cost);

    double lambda = 0.0;
    result.status = "iteration limit reached";
    Eigen::MatrixXd j;
    bool fresh_jacobian = false;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        j = numerical_jacobian(problem, result.x, r, options.relative_fd_step, &result.evaluations);
        fresh_jacobian = true;
        if (result.cost <= options.cost_floor || gradient_cosine(j, r) <= options.gradient_tolerance) {
            result.status = "gradient criterion met";
            break;
        }
        const Eigen::MatrixXd a = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;
        Eigen::VectorXd diag = a.diagonal();
        const double diag_floor = 1e-12 * std::max(diag.maxCoeff(), 1e-300);
        diag = diag.cwiseMax(diag_floor);

        bool accepted = false;
        bool stop = false;
        while (true) {
            Eigen::MatrixXd damped = a;
            damped.diagonal() += lambda * diag;
            const Eigen::VectorXd step = damped.ldlt().solve(-g);
            Eigen::VectorXd trial = clamp(result.x + step, problem);
            const Eigen::VectorXd actual = trial - result.x;
            if (step.allFinite()) {
                const Eigen::VectorXd rt = problem.residuals(trial);
                ++result.evaluations;
                const double ct = rt.allFinite() ? rt.squaredNorm()
                                                 : std::numeric_limits<double>::infinity();
                if (ct < result.cost) {
                    const double decrease = (result.cost - ct) / std::max(result.cost, 1e-300);
                    const bool tiny_step =
                        actual.norm() <= options.step_tolerance * (result.x.norm() + options.step_tolerance);
                    result.x = trial;
                    r = rt;
                    result.cost = ct;
                    result.cost_history.push_back(ct);
                    accepted = true;
                    fresh_jacobian = false;
                    lambda = lambda < 1e-9 ? 0.0 : lambda / 10.0;
                    if (decrease <= options.cost_tolerance || tiny_step) stop = true;
                    break;
                }
                if (actual.norm() <= options.step_tolerance * (result.x.norm() + options.step_tolerance)) {
                    stop = true;
                    break;
                }
            }
            lambda = lambda == 0.0 ? options.initial_damping : lambda * 10.0;
            if (lambda > 1e16) {
                stop = true;
                break;
            }
        }
        result.iterations = iter + 1;
        if (!accepted || stop) {
            result.status = accepted ? "objective stationary" : "no decreasing step found";
            break;
        }
    }
    if (!fresh_jacobian) {
        j = numerical_jacobian(problem, result.x, r, options.relative_fd_step, &result.evaluations);
    }
    result.jacobian = j;
    result.converged = result.cost <= options.cost_floor || gradient_cosine(j, r) <= options.gradient_tolerance;
    fill_covariance(result, problem, m);
    return result;
}

}  // namespace nvspec
