#include "funreg/scale.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "funreg/design.hpp"
#include "funreg/loss.hpp"
#include "funreg/rng.hpp"

namespace funreg {

namespace {

double median_of(std::vector<double> v) {
    const size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double m = v[n / 2];
    if (n % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.begin() + n / 2);
        m = 0.5 * (m + v[n / 2 - 1]);
    }
    return m;
}

}  // namespace

double mad_scale(const Eigen::VectorXd& r) {
    if (r.size() == 0) throw std::invalid_argument("mad_scale: empty residual vector");
    std::vector<double> v(r.data(), r.data() + r.size());
    const double med = median_of(v);
    for (auto& x : v) x = std::abs(x - med);
    return 1.4826 * median_of(std::move(v));
}

double bisquare_chi(double x, double c) {
    const double a = std::abs(x);
    if (a >= c) return 1.0;
    const double u = 1.0 - (x * x) / (c * c);
    return 1.0 - u * u * u;
}

double bisquare_consistency_constant(double b) {
    if (!(b > 0 && b <= 0.5))
        throw std::invalid_argument("breakdown target must lie in (0, 0.5]");
    // E chi_c(Z) = 2 * integral_0^c chi_c phi + 2 * (1 - Phi(c)); decreasing in c
    const auto expected_chi = [](double c) {
        const auto [nodes, weights] = gauss_legendre<double>(64);
        double acc = 0;
        for (int g = 0; g < nodes.size(); ++g) {
            const double z = 0.5 * c * (nodes[g] + 1.0);
            const double phi = std::exp(-0.5 * z * z) / 2.5066282746310005;
            acc += 0.5 * c * weights[g] * bisquare_chi(z, c) * phi;
        }
        const double tail = std::erfc(c / 1.4142135623730951);  // 2(1 - Phi(c))
        return 2.0 * acc + tail;
    };
    double lo = 1e-3, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (expected_chi(mid) > b)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double m_scale(const Eigen::VectorXd& r, double b, double c) {
    const Eigen::Index n = r.size();
    if (n == 0) throw std::invalid_argument("m_scale: empty residual vector");
    if (!(b > 0 && b < 1)) throw std::invalid_argument("m_scale: b must lie in (0, 1)");

    const double rmax = r.cwiseAbs().maxCoeff();
    if (rmax == 0.0) throw std::runtime_error("degenerate scale: all residuals are zero");
    // mean chi is bounded by the fraction of nonzero residuals; below b the
    // scale equation has no positive root
    const double nonzero = static_cast<double>((r.array() != 0.0).count()) / static_cast<double>(n);
    if (nonzero <= b + 1e-12)
        throw std::runtime_error("degenerate scale: too many exactly-zero residuals for breakdown target");

    double sigma = mad_scale(r);
    if (!(sigma > 0)) sigma = r.cwiseAbs().mean() / 0.8;
    if (!(sigma > 0)) sigma = rmax;

    const auto mean_chi = [&](double s) {
        double acc = 0;
        for (Eigen::Index i = 0; i < n; ++i) acc += bisquare_chi(r[i] / s, c);
        return acc / static_cast<double>(n);
    };
    for (int it = 0; it < 200; ++it) {
        const double f = mean_chi(sigma);
        // chi(x)/x^2 is decreasing, so sigma^2 <- sigma^2 f/b contracts to the root
        const double next = sigma * std::sqrt(f / b);
        if (!(next > 0) || !std::isfinite(next))
            throw std::runtime_error("degenerate scale: M-scale iteration failed");
        const double rel = std::abs(next - sigma) / sigma;
        sigma = next;
        if (rel < 1e-12) break;
    }
    return sigma;
}

namespace {

// weighted unpenalized least squares; returns false when the normal
// equations are numerically singular
bool weighted_ls(const Eigen::MatrixXd& Z, const Eigen::VectorXd& Y,
                 const Eigen::VectorXd& w, Eigen::VectorXd& gamma) {
    const Eigen::MatrixXd Zw = w.asDiagonal() * Z;
    const Eigen::MatrixXd A = Z.transpose() * Zw;
    const Eigen::VectorXd rhs = Z.transpose() * w.cwiseProduct(Y);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success) return false;
    gamma = ldlt.solve(rhs);
    const double denom = rhs.norm();
    const double resid = (A * gamma - rhs).norm();
    return gamma.allFinite() && resid <= 1e-8 * (denom + 1.0);
}

}  // namespace

InitialFit initial_scale(const FunctionalDataset& data, const BSplineBasisd& basis,
                         const InitialFitOptions& options) {
    const Eigen::Index n = data.size();
    const int p = basis.order();
    const int full_dim = basis.dimension();
    const int pilot_dim = std::min(options.max_dimension, full_dim);
    const int pilot_knots = std::max(0, pilot_dim - p);
    const BSplineBasisd pilot =
        (pilot_dim == full_dim) ? basis : make_basis(p, pilot_knots);

    const Eigen::VectorXd w = trapezoid_weights(data.grid);
    const Eigen::MatrixXd Bp = basis_on_grid(pilot, data.grid);
    Eigen::MatrixXd Z(n, pilot.dimension() + 1);
    Z.col(0).setOnes();
    Z.rightCols(pilot.dimension()) = data.curves * (w.asDiagonal() * Bp);
    const Eigen::VectorXd& Y = data.responses;

    const Eigen::Index cols = Z.cols();
    if (n <= cols)
        throw std::invalid_argument("initial_scale: need more observations than pilot parameters");

    const double chi_c = bisquare_consistency_constant(options.breakdown);
    const RobustLoss score = RobustLoss::bisquare(chi_c);
    Rng rng(options.seed);

    const auto try_scale = [&](const Eigen::VectorXd& resid, double& out) {
        try {
            out = m_scale(resid, options.breakdown, chi_c);
            return true;
        } catch (const std::runtime_error&) {
            return false;
        }
    };

    // a candidate is kept only if its M-scale exists; exact interpolation of a
    // subsample can zero out too many residuals on tiny n, which try_scale rejects
    Eigen::VectorXd best_gamma;
    Eigen::VectorXd best_resid;
    double best_sigma = std::numeric_limits<double>::infinity();
    bool any_exact_fit = false;

    std::vector<Eigen::Index> idx(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;

    for (int s = 0; s < options.subsamples; ++s) {
        // partial Fisher-Yates draw of `cols` distinct rows
        for (Eigen::Index j = 0; j < cols; ++j) {
            const Eigen::Index pick = j + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - j)));
            std::swap(idx[static_cast<size_t>(j)], idx[static_cast<size_t>(pick)]);
        }
        Eigen::MatrixXd Zs(cols, cols);
        Eigen::VectorXd Ys(cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            Zs.row(j) = Z.row(idx[static_cast<size_t>(j)]);
            Ys[j] = Y[idx[static_cast<size_t>(j)]];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(Zs);
        if (!lu.isInvertible()) continue;
        Eigen::VectorXd gamma = lu.solve(Ys);
        if (!gamma.allFinite()) continue;

        Eigen::VectorXd resid = Y - Z * gamma;
        double sigma;
        if (!try_scale(resid, sigma)) {
            if (resid.cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + Y.cwiseAbs().maxCoeff()))
                any_exact_fit = true;
            continue;
        }

        // a couple of reweighting steps sharpen each candidate before ranking
        for (int step = 0; step < options.refine_steps; ++step) {
            Eigen::VectorXd wts(n);
            for (Eigen::Index i = 0; i < n; ++i) wts[i] = score.weight(resid[i] / sigma);
            Eigen::VectorXd next;
            if (!weighted_ls(Z, Y, wts, next)) break;
            Eigen::VectorXd next_resid = Y - Z * next;
            double next_sigma;
            if (!try_scale(next_resid, next_sigma)) break;
            gamma = next;
            resid = std::move(next_resid);
            sigma = next_sigma;
        }
        if (sigma < best_sigma) {
            best_sigma = sigma;
            best_gamma = gamma;
            best_resid = resid;
        }
    }

    if (!best_gamma.size()) {
        if (any_exact_fit)
            throw std::runtime_error("degenerate scale: responses lie in the pilot design span");
        throw std::runtime_error("initial_scale: no valid subsample candidate");
    }

    // full refinement of the winner
    Eigen::VectorXd gamma = best_gamma;
    Eigen::VectorXd resid = best_resid;
    double sigma = best_sigma;
    for (int it = 0; it < options.max_iter; ++it) {
        Eigen::VectorXd wts(n);
        for (Eigen::Index i = 0; i < n; ++i) wts[i] = score.weight(resid[i] / sigma);
        Eigen::VectorXd next;
        if (!weighted_ls(Z, Y, wts, next)) break;
        Eigen::VectorXd next_resid = Y - Z * next;
        double next_sigma;
        if (!try_scale(next_resid, next_sigma)) break;
        const double delta = (next - gamma).norm();
        const double sdelta = std::abs(next_sigma - sigma);
        gamma = next;
        resid = std::move(next_resid);
        sigma = next_sigma;
        if (delta <= options.tol * std::max(1.0, gamma.norm()) && sdelta <= options.tol * sigma) break;
    }

    if (sigma <= 1e-12 * (1.0 + Y.cwiseAbs().maxCoeff()))
        throw std::runtime_error("degenerate scale: responses lie in the pilot design span");

    InitialFit fit;
    fit.scale = {sigma, ScaleMethod::m_scale, options.breakdown};
    fit.residuals = resid;

    if (pilot_dim == full_dim) {
        fit.gamma = gamma;
        return fit;
    }

    // refit the pilot coefficient function in the full basis (dense-grid
    // least squares; the full basis nests enough resolution for exactness
    // up to conditioning)
    const int m = 8 * full_dim;
    Eigen::VectorXd tt(m);
    for (int i = 0; i < m; ++i) tt[i] = static_cast<double>(i) / (m - 1);
    Eigen::MatrixXd Bfull(m, full_dim);
    Eigen::VectorXd g(m);
    for (int i = 0; i < m; ++i) {
        Bfull.row(i) = eval_basis(basis, tt[i]).transpose();
        g[i] = eval_basis(pilot, tt[i]).dot(gamma.tail(pilot.dimension()));
    }
    fit.gamma.resize(full_dim + 1);
    fit.gamma[0] = gamma[0];
    fit.gamma.tail(full_dim) = Bfull.colPivHouseholderQr().solve(g);
    return fit;
}

}  // namespace funreg
