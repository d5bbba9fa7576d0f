#pragma once

#include <Eigen/Core>

#include <utility>
#include <vector>

#include "funreg/design.hpp"
#include "funreg/irls.hpp"

namespace funreg {

enum class Criterion { aicc, gcv };

/// Robust corrected AIC at the fitted smoothing level:
///   log(sigma^2(lambda)) + 1 + 2 (Tr H + 1) / (n - Tr H - 2)
/// with sigma^2(lambda) = n^-1 sum rho(r_i / sigma-hat), the preliminary
/// scale held fixed. Throws an oversmoothing-guard error once Tr H reaches
/// n - 2, where the correction term blows up.
double aicc(const FitResult& fit, int n);

/// Generalized cross-validation for the square-loss fit:
///   n RSS / (n - Tr H)^2.
double gcv(const FitResult& fit, int n);

double criterion_value(Criterion criterion, const FitResult& fit, int n);

struct SelectOptions {
    Criterion criterion = Criterion::aicc;
    double lambda_lo = 1e-8;
    double lambda_hi = 1e4;
    std::vector<double> starts = {-6.0, -3.0, 0.0};  // log10-lambda start points
    double simplex_step = 1.0;                       // initial simplex edge in log10 units
    double diameter_tol = 1e-4;
    int max_iter = 200;
    IrlsOptions irls;
};

struct SelectionResult {
    double lambda_opt = 0;
    double criterion_value = 0;
    bool at_boundary = false;
    std::vector<std::pair<double, double>> trace_path;  // (lambda, criterion) per evaluation
    FitResult fit;
};

/// Minimizes the selection criterion over log10(lambda) by Nelder-Mead from
/// each start, clamping proposals into the bounds. Every criterion
/// evaluation is a warm-started IRLS fit (previous gamma, falling back to
/// gamma0); evaluations that fail count as +infinity. Throws a
/// selection-failure error when no start yields a finite criterion.
SelectionResult select_lambda(const DesignMatrices& design, const Eigen::VectorXd& Y,
                              const RobustLoss& loss, const ScaleEstimate& sigma,
                              const Eigen::VectorXd& gamma0, const SelectOptions& options = {});

}  // namespace funreg
