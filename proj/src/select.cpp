#include "funreg/select.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "funreg/nelder_mead.hpp"

namespace funreg {

double aicc(const FitResult& fit, int n) {
    const double tr = fit.edf;
    if (tr >= n - 2)
        throw std::runtime_error("oversmoothing guard: Tr H >= n - 2, criterion undefined");
    double s2 = 0;
    for (Eigen::Index i = 0; i < fit.residuals.size(); ++i)
        s2 += fit.loss.rho(fit.residuals[i] / fit.sigma.sigma);
    s2 /= static_cast<double>(n);
    if (!(s2 > 0))
        throw std::runtime_error("oversmoothing guard: zero robust residual scale");
    return std::log(s2) + 1.0 + 2.0 * (tr + 1.0) / (static_cast<double>(n) - tr - 2.0);
}

double gcv(const FitResult& fit, int n) {
    if (fit.loss.family() != LossFamily::square)
        throw std::invalid_argument("gcv: defined for the square loss only");
    const double tr = fit.edf;
    if (tr >= n)
        throw std::runtime_error("oversmoothing guard: Tr H >= n, criterion undefined");
    const double rss = fit.residuals.squaredNorm();
    const double denom = static_cast<double>(n) - tr;
    return static_cast<double>(n) * rss / (denom * denom);
}

double criterion_value(Criterion criterion, const FitResult& fit, int n) {
    return criterion == Criterion::aicc ? aicc(fit, n) : gcv(fit, n);
}

SelectionResult select_lambda(const DesignMatrices& design, const Eigen::VectorXd& Y,
                              const RobustLoss& loss, const ScaleEstimate& sigma,
                              const Eigen::VectorXd& gamma0, const SelectOptions& options) {
    if (!(options.lambda_lo > 0) || !(options.lambda_lo < options.lambda_hi))
        throw std::invalid_argument("select_lambda: need 0 < lambda_lo < lambda_hi");
    if (options.starts.empty())
        throw std::invalid_argument("select_lambda: need at least one start");

    const int n = static_cast<int>(Y.size());
    const double u_lo = std::log10(options.lambda_lo);
    const double u_hi = std::log10(options.lambda_hi);

    SelectionResult result;
    Eigen::VectorXd warm = gamma0;

    const auto evaluate = [&](double u) -> double {
        const double uc = std::min(std::max(u, u_lo), u_hi);
        const double lambda = std::pow(10.0, uc);
        try {
            FitResult fit = irls_fit(design.Z, design.Dq_star, Y, lambda, loss, sigma, warm,
                                     options.irls);
            warm = fit.gamma();
            const double value = criterion_value(options.criterion, fit, n);
            result.trace_path.emplace_back(lambda, value);
            return value;
        } catch (const std::exception&) {
            warm = gamma0;
            return std::numeric_limits<double>::infinity();
        }
    };

    NelderMeadOptions nm;
    nm.diameter_tol = options.diameter_tol;
    nm.max_iter = options.max_iter;

    double best_u = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (const double start : options.starts) {
        warm = gamma0;
        Eigen::VectorXd x0(1);
        x0[0] = std::min(std::max(start, u_lo), u_hi);
        const auto run = nelder_mead([&](const Eigen::VectorXd& x) { return evaluate(x[0]); },
                                     x0, options.simplex_step, nm);
        if (run.value < best_value) {
            best_value = run.value;
            best_u = std::min(std::max(run.x[0], u_lo), u_hi);
        }
    }
    if (!std::isfinite(best_value))
        throw std::runtime_error("selection failure: no start produced a finite criterion");

    result.lambda_opt = std::pow(10.0, best_u);
    const double edge = 2.0 * options.diameter_tol;
    result.at_boundary = (best_u - u_lo) <= edge || (u_hi - best_u) <= edge;

    // refit at the winner so the reported fit, criterion and trace agree
    result.fit = irls_fit(design.Z, design.Dq_star, Y, result.lambda_opt, loss, sigma,
                          warm.size() == design.Z.cols() ? warm : gamma0, options.irls);
    result.criterion_value = criterion_value(options.criterion, result.fit, n);
    return result;
}

}  // namespace funreg
