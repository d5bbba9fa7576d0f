#include "funreg/irls.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace funreg {

double penalized_objective(const Eigen::VectorXd& residuals, const RobustLoss& loss,
                           double sigma, double lambda, const Eigen::MatrixXd& Dq_star,
                           const Eigen::VectorXd& gamma) {
    const double n = static_cast<double>(residuals.size());
    double data_term = 0;
    for (Eigen::Index i = 0; i < residuals.size(); ++i)
        data_term += sigma * sigma * loss.rho(residuals[i] / sigma);
    return data_term / n + lambda * gamma.dot(Dq_star * gamma);
}

Eigen::VectorXd estimating_equation_residual(const Eigen::MatrixXd& Z, const Eigen::VectorXd& Y,
                                             const Eigen::VectorXd& gamma, const RobustLoss& loss,
                                             double sigma, double lambda,
                                             const Eigen::MatrixXd& Dq_star) {
    const double n = static_cast<double>(Y.size());
    const Eigen::VectorXd r = Y - Z * gamma;
    Eigen::VectorXd score(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) score[i] = sigma * loss.psi(r[i] / sigma);
    return -(Z.transpose() * score) / n + 2.0 * lambda * (Dq_star * gamma);
}

namespace {

// solves A x = b for symmetric A, rejecting numerically singular systems
Eigen::VectorXd solve_symmetric(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("singular system: penalized normal equations failed to factor");
    const Eigen::VectorXd x = ldlt.solve(b);
    const double check = (A * x - b).norm();
    if (!x.allFinite() || check > 1e-8 * (b.norm() + A.norm() * x.norm()))
        throw std::runtime_error("singular system: penalized normal equations are rank deficient");
    return x;
}

}  // namespace

FitResult irls_fit(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Dq_star,
                   const Eigen::VectorXd& Y, double lambda, const RobustLoss& loss,
                   const ScaleEstimate& sigma, const Eigen::VectorXd& start,
                   const IrlsOptions& options) {
    if (lambda < 0) throw std::invalid_argument("irls_fit: lambda must be >= 0");
    if (!(sigma.sigma > 0)) throw std::invalid_argument("irls_fit: scale must be positive");
    if (start.size() != Z.cols()) throw std::invalid_argument("irls_fit: start has wrong length");

    const double n = static_cast<double>(Y.size());
    const double s = sigma.sigma;
    // n times the normal equations: Z'WZ + 2 n lambda D, same system as the
    // n^-1-scaled form and identical to the hat-matrix convention
    const Eigen::MatrixXd penalty = (2.0 * n * lambda) * Dq_star;

    Eigen::VectorXd gamma = start;
    Eigen::VectorXd resid = Y - Z * gamma;
    Eigen::VectorXd wts(Y.size());

    FitResult fit;
    fit.lambda = lambda;
    fit.sigma = sigma;
    fit.loss = loss;
    fit.objective_trace.reserve(16);
    fit.objective_trace.push_back(penalized_objective(resid, loss, s, lambda, Dq_star, gamma));

    int it = 0;
    for (; it < options.max_iter; ++it) {
        for (Eigen::Index i = 0; i < Y.size(); ++i) wts[i] = loss.weight(resid[i] / s);

        const Eigen::MatrixXd Zw = wts.asDiagonal() * Z;
        const Eigen::MatrixXd A = Z.transpose() * Zw + penalty;
        const Eigen::VectorXd b = Z.transpose() * wts.cwiseProduct(Y);
        const Eigen::VectorXd next = solve_symmetric(A, b);

        const double step = (next - gamma).norm();
        gamma = next;
        resid = Y - Z * gamma;

        const double obj = penalized_objective(resid, loss, s, lambda, Dq_star, gamma);
        if (!std::isfinite(obj)) throw std::runtime_error("divergence: objective became non-finite");
        fit.objective_trace.push_back(obj);

        if (step <= options.tol * std::max(1.0, gamma.norm())) {
            fit.converged = true;
            ++it;
            break;
        }
    }

    for (Eigen::Index i = 0; i < Y.size(); ++i) wts[i] = loss.weight(resid[i] / s);

    fit.intercept = gamma[0];
    fit.coefficients = gamma.tail(gamma.size() - 1);
    fit.residuals = resid;
    fit.weights = wts;
    fit.iterations = it;
    fit.objective = fit.objective_trace.back();
    fit.edf = hat_trace(Z, Dq_star, wts, lambda);
    return fit;
}

double hat_trace(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Dq_star,
                 const Eigen::VectorXd& weights, double lambda) {
    const double n = static_cast<double>(Z.rows());
    const Eigen::MatrixXd ZtWZ = Z.transpose() * (weights.asDiagonal() * Z);
    const Eigen::MatrixXd M = ZtWZ + (2.0 * n * lambda) * Dq_star;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("singular system: hat matrix factorization failed");
    const Eigen::MatrixXd S = ldlt.solve(ZtWZ);
    if (!S.allFinite())
        throw std::runtime_error("singular system: hat matrix solve produced non-finite values");
    return S.trace();
}

Eigen::VectorXd standardized_residuals(const FitResult& fit) {
    if (!(fit.sigma.sigma > 0))
        throw std::invalid_argument("standardized_residuals: scale must be positive");
    return fit.residuals / fit.sigma.sigma;
}

}  // namespace funreg
