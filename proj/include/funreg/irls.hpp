#pragma once

#include <Eigen/Core>

#include <vector>

#include "funreg/loss.hpp"
#include "funreg/scale.hpp"

namespace funreg {

/// Converged state of the penalized M-fit.
struct FitResult {
    double intercept = 0;
    Eigen::VectorXd coefficients;  // spline coefficients (length K+p)
    double lambda = 0;
    ScaleEstimate sigma;
    RobustLoss loss = RobustLoss::square();
    double edf = 0;                // Tr H(lambda) at the final weights
    Eigen::VectorXd residuals;     // Y - alpha - X beta
    Eigen::VectorXd weights;       // final IRLS weights at standardized residuals
    int iterations = 0;
    bool converged = false;
    double objective = 0;                 // penalized objective at the final iterate
    std::vector<double> objective_trace;  // objective after every accepted iterate

    Eigen::VectorXd gamma() const {
        Eigen::VectorXd g(coefficients.size() + 1);
        g[0] = intercept;
        g.tail(coefficients.size()) = coefficients;
        return g;
    }
};

struct IrlsOptions {
    double tol = 1e-8;   // relative l2 change of gamma
    int max_iter = 200;
};

/// Penalized objective in response units:
///   n^-1 sum sigma^2 rho(r_i/sigma) + lambda gamma' Dq_star gamma.
/// Standardizing the loss rescales its tuning constant to c*sigma in the
/// response scale; the sigma^2 factor keeps the data term and the penalty in
/// the same units, so this is exactly the function whose stationary points
/// solve the reweighted system below.
double penalized_objective(const Eigen::VectorXd& residuals, const RobustLoss& loss,
                           double sigma, double lambda, const Eigen::MatrixXd& Dq_star,
                           const Eigen::VectorXd& gamma);

/// Gradient of the penalized objective (the estimating-equation residual):
///   -n^-1 sum sigma psi(r_i/sigma) z_i + 2 lambda Dq_star gamma.
Eigen::VectorXd estimating_equation_residual(const Eigen::MatrixXd& Z, const Eigen::VectorXd& Y,
                                             const Eigen::VectorXd& gamma, const RobustLoss& loss,
                                             double sigma, double lambda,
                                             const Eigen::MatrixXd& Dq_star);

/// Iteratively reweighted least squares for the penalized M-estimator:
/// repeatedly solves
///   (n^-1 Z' W Z + 2 lambda Dq_star) gamma = n^-1 Z' W Y
/// with W_i the loss weight at the standardized residual r_i/sigma. The same
/// iterates solve the system written with the standardized-loss weights
/// psi(r/sigma)/(sigma^2 (r/sigma)) once the penalty carries the matching
/// sigma^2 factor: the common factor scales both sides.
///
/// Requires lambda >= 0 and a positive scale; with lambda = 0 the design must
/// have full column rank. Throws on a singular system or a non-finite
/// objective.
FitResult irls_fit(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Dq_star,
                   const Eigen::VectorXd& Y, double lambda, const RobustLoss& loss,
                   const ScaleEstimate& sigma, const Eigen::VectorXd& start,
                   const IrlsOptions& options = {});

/// Trace of the smoother matrix H = Z (Z'WZ + 2 n lambda Dq_star)^-1 Z'W.
double hat_trace(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Dq_star,
                 const Eigen::VectorXd& weights, double lambda);

/// residuals / sigma.
Eigen::VectorXd standardized_residuals(const FitResult& fit);

}  // namespace funreg
