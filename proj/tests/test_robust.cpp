#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "funreg/design.hpp"
#include "funreg/irls.hpp"
#include "funreg/rng.hpp"
#include "funreg/scale.hpp"
#include "funreg/simulate.hpp"
#include "test_utils.hpp"

using namespace funreg;

namespace {

Eigen::VectorXd uniform_grid(int k) {
    Eigen::VectorXd g(k);
    for (int j = 0; j < k; ++j) g[j] = static_cast<double>(j) / (k - 1);
    return g;
}

// smooth synthetic regression problem with optional contamination
struct Problem {
    FunctionalDataset data;
    DesignMatrices design;
    BSplineBasisd basis;
};

Problem make_problem(int n, int basis_dim, unsigned seed, double noise = 0.5,
                     int outliers = 0) {
    const int k = 80;
    const Eigen::VectorXd grid = uniform_grid(k);
    std::mt19937 gen(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd curves(n, k);
    for (int i = 0; i < n; ++i) {
        const double a = normal(gen), b = normal(gen), c = normal(gen), d = normal(gen);
        for (int j = 0; j < k; ++j)
            curves(i, j) = a + b * grid[j] + c * std::sin(4.0 * grid[j]) +
                           d * std::cos(2.0 * 3.14159265358979 * grid[j]) +
                           0.3 * normal(gen);  // rough component keeps the design well conditioned
    }
    const Eigen::VectorXd w = trapezoid_weights(grid);
    Eigen::VectorXd beta(k);
    for (int j = 0; j < k; ++j) beta[j] = std::cos(2.0 * 3.14159265358979 * grid[j]);
    Eigen::VectorXd y = curves * w.cwiseProduct(beta);
    y.array() += 0.7;
    for (int i = 0; i < n; ++i) y[i] += noise * normal(gen);
    for (int i = 0; i < outliers; ++i) y[i] += 10.0;

    Problem prob{make_dataset(grid, curves, y), {}, make_basis(4, basis_dim - 4)};
    prob.design = inner_products(prob.data, prob.basis, 2);
    return prob;
}

}  // namespace

TEST_SUITE("robust") {

TEST_CASE("loss triples at reference points") {
    const auto huber = RobustLoss::huber(1.345);
    auto inside = loss_eval(huber, 0.5);
    CHECK(inside.rho == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(inside.psi == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(inside.weight == 1.0);

    auto outside = loss_eval(huber, 3.0);
    CHECK(outside.rho == doctest::Approx(1.345 * 3.0 - 0.5 * 1.345 * 1.345).epsilon(1e-14));
    CHECK(outside.psi == doctest::Approx(1.345).epsilon(1e-14));
    CHECK(outside.weight == doctest::Approx(1.345 / 3.0).epsilon(1e-14));

    const auto bisq = RobustLoss::bisquare(4.685);
    CHECK(bisq.psi(4.685) == 0.0);
    CHECK(bisq.psi(7.0) == 0.0);
    CHECK(bisq.weight(5.0) == 0.0);
    CHECK(bisq.rho(100.0) == doctest::Approx(4.685 * 4.685 / 6.0).epsilon(1e-14));

    const auto square = RobustLoss::square();
    for (double x : {-4.0, -0.3, 0.0, 2.5}) CHECK(square.weight(x) == 1.0);
    CHECK(square.rho(3.0) == doctest::Approx(4.5).epsilon(1e-14));

    for (const auto& loss : {huber, bisq, square}) {
        CHECK(loss.rho(0.0) == 0.0);
        CHECK(loss.weight(0.0) == 1.0);
        for (double x : {0.2, 1.0, 2.2, 6.0}) {
            CHECK(loss.rho(-x) == doctest::Approx(loss.rho(x)).epsilon(1e-14));
            CHECK(loss.psi(-x) == doctest::Approx(-loss.psi(x)).epsilon(1e-14));
            CHECK(loss.weight(-x) == doctest::Approx(loss.weight(x)).epsilon(1e-14));
        }
    }
}

TEST_CASE("psi matches finite differences of rho") {
    const double h = 1e-6;
    for (double c : {0.5, 1.345, 4.685}) {
        for (const auto& loss :
             {RobustLoss::square(), RobustLoss::huber(c), RobustLoss::bisquare(c)}) {
            for (int s = 0; s < 1000; ++s) {
                const double x = -10.0 + 20.0 * (s + 0.5) / 1000.0;
                const double fd = (loss.rho(x + h) - loss.rho(x - h)) / (2.0 * h);
                CHECK(std::abs(fd - loss.psi(x)) < 1e-6);
            }
        }
    }
}

TEST_CASE("weights are even, bounded and nonincreasing for positive arguments") {
    for (const auto& loss : {RobustLoss::huber(1.345), RobustLoss::bisquare(4.685)}) {
        double prev = loss.weight(1e-8);
        CHECK(prev <= 1.0);
        for (int s = 1; s <= 400; ++s) {
            const double x = 8.0 * s / 400.0;
            const double w = loss.weight(x);
            CHECK(w >= 0.0);
            CHECK(w <= prev + 1e-14);
            prev = w;
        }
    }
}

TEST_CASE("m-scale solves the scale equation") {
    const double c = bisquare_consistency_constant(0.5);
    // the classical 50%-breakdown constant
    CHECK(c == doctest::Approx(1.5476).epsilon(1e-3));

    // independent check of the calibration integral
    const double expected = adaptive_simpson(
        [&](double z) {
            return 2.0 * bisquare_chi(z, c) * std::exp(-0.5 * z * z) /
                   std::sqrt(2.0 * 3.14159265358979323846);
        },
        0.0, 12.0, 1e-13);
    CHECK(expected == doctest::Approx(0.5).epsilon(1e-8));

    // alternating unit residuals: sigma solves chi(1/sigma) = 1/2
    Eigen::VectorXd alternating(40);
    for (int i = 0; i < 40; ++i) alternating[i] = (i % 2 == 0) ? 1.0 : -1.0;
    const double sigma = m_scale(alternating, 0.5, c);
    double lo = 1e-3, hi = 10.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bisquare_chi(1.0 / mid, c) > 0.5 ? lo : hi) = mid;
    }
    CHECK(sigma == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-9));
    CHECK(bisquare_chi(1.0 / sigma, c) == doctest::Approx(0.5).epsilon(1e-9));

    CHECK_THROWS_WITH_AS(m_scale(Eigen::VectorXd::Zero(20), 0.5, c),
                         doctest::Contains("degenerate scale"), std::runtime_error);
}

TEST_CASE("m-scale is near one for standard gaussian samples") {
    const double c = bisquare_consistency_constant(0.5);
    int hits = 0;
    const int seeds = 40;
    for (int s = 0; s < seeds; ++s) {
        Rng rng(1000 + s);
        Eigen::VectorXd r(500);
        for (int i = 0; i < 500; ++i) r[i] = rng.gauss();
        const double sigma = m_scale(r, 0.5, c);
        if (sigma > 0.9 && sigma < 1.1) ++hits;
    }
    CHECK(hits >= seeds - 2);
}

TEST_CASE("mad scale") {
    Eigen::VectorXd r(5);
    r << 1.0, 2.0, 3.0, 4.0, 100.0;
    CHECK(mad_scale(r) == doctest::Approx(1.4826).epsilon(1e-12));
}

TEST_CASE("initial scale on clean data and degenerate input") {
    auto prob = make_problem(120, 20, 42, 0.4);
    InitialFitOptions opts;
    opts.seed = 9;
    const auto init = initial_scale(prob.data, prob.basis, opts);
    CHECK(init.scale.sigma > 0.2);
    CHECK(init.scale.sigma < 0.8);
    CHECK(init.gamma.size() == prob.basis.dimension() + 1);
    // the pilot start should already track the data
    const Eigen::VectorXd fitted = prob.design.Z * init.gamma;
    const double r2 = 1.0 - (prob.data.responses - fitted).squaredNorm() /
                                (prob.data.responses.array() - prob.data.responses.mean())
                                    .matrix()
                                    .squaredNorm();
    CHECK(r2 > 0.3);

    // responses exactly in the pilot span: the scale collapses
    auto clean = make_problem(60, 20, 7, 0.0);
    const auto pilot = make_basis(4, 6);  // what a 10-dim pilot uses
    const Eigen::VectorXd w = trapezoid_weights(clean.data.grid);
    const Eigen::MatrixXd Xp =
        clean.data.curves * (w.asDiagonal() * basis_on_grid(pilot, clean.data.grid));
    Eigen::VectorXd coef(pilot.dimension());
    for (int l = 0; l < pilot.dimension(); ++l) coef[l] = 0.1 * (l + 1);
    clean.data.responses = (Xp * coef).array() + 0.7;
    CHECK_THROWS_WITH_AS(initial_scale(clean.data, clean.basis, opts),
                         doctest::Contains("degenerate scale"), std::runtime_error);
}

TEST_CASE("square-loss irls reproduces the closed form in one step") {
    auto prob = make_problem(50, 12, 3);
    const auto& Z = prob.design.Z;
    const auto& D = prob.design.Dq_star;
    const auto& y = prob.data.responses;
    const double n = static_cast<double>(y.size());

    for (double lambda : {0.0, 1e-2, 0.2, 10.0}) {
        const ScaleEstimate scale{1.7, ScaleMethod::m_scale, 0.5};
        const auto fit = irls_fit(Z, D, y, lambda, RobustLoss::square(), scale,
                                  Eigen::VectorXd::Zero(Z.cols()));
        const Eigen::VectorXd closed =
            (Z.transpose() * Z + 2.0 * n * lambda * D).ldlt().solve(Z.transpose() * y);
        CHECK((fit.gamma() - closed).cwiseAbs().maxCoeff() <
              1e-10 * std::max(1.0, closed.cwiseAbs().maxCoeff()));
        CHECK(fit.converged);
        CHECK((fit.residuals - (y - Z * fit.gamma())).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("huber with a huge corner matches the square fit") {
    auto prob = make_problem(60, 12, 5);
    const ScaleEstimate scale{1.3, ScaleMethod::m_scale, 0.5};
    const Eigen::VectorXd start = Eigen::VectorXd::Zero(prob.design.Z.cols());
    const auto square = irls_fit(prob.design.Z, prob.design.Dq_star, prob.data.responses, 0.01,
                                 RobustLoss::square(), scale, start);
    const auto huber = irls_fit(prob.design.Z, prob.design.Dq_star, prob.data.responses, 0.01,
                                RobustLoss::huber(1e6 * scale.sigma), scale, start);
    CHECK((square.gamma() - huber.gamma()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("huber irls satisfies the estimating equations with descent") {
    for (unsigned seed : {11u, 12u, 13u, 14u}) {
        auto prob = make_problem(50, 12, seed, 0.8, 4);
        InitialFitOptions sopts;
        sopts.seed = seed;
        const auto init = initial_scale(prob.data, prob.basis, sopts);
        const auto loss = RobustLoss::huber(1.345);
        const auto fit = irls_fit(prob.design.Z, prob.design.Dq_star, prob.data.responses, 0.01,
                                  loss, init.scale, init.gamma);
        CHECK(fit.converged);
        for (size_t i = 1; i < fit.objective_trace.size(); ++i)
            CHECK(fit.objective_trace[i] <=
                  fit.objective_trace[i - 1] + 1e-10 * std::max(1.0, fit.objective_trace[i - 1]));
        const Eigen::VectorXd grad = estimating_equation_residual(
            prob.design.Z, prob.data.responses, fit.gamma(), loss, init.scale.sigma, 0.01,
            prob.design.Dq_star);
        CHECK(grad.norm() < 1e-8);
    }
}

TEST_CASE("standardized weights and the scale factor move together") {
    // the reweighted system with weights at r/sigma and penalty 2*lambda*D
    // equals the system with the standardized-loss weights (which carry a
    // 1/sigma^2) once the penalty is rescaled by the same 1/sigma^2
    auto prob = make_problem(40, 10, 21);
    const auto loss = RobustLoss::huber(1.345);
    const double sigma = 2.4, lambda = 0.03;
    const auto& Z = prob.design.Z;
    const auto& D = prob.design.Dq_star;
    const auto& y = prob.data.responses;
    const double n = static_cast<double>(y.size());

    Eigen::VectorXd gamma = Eigen::VectorXd::Random(Z.cols());
    const Eigen::VectorXd r = y - Z * gamma;
    Eigen::VectorXd w_std(r.size()), w_raw(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        w_std[i] = loss.weight(r[i] / sigma);
        w_raw[i] = w_std[i] / (sigma * sigma);  // rho_sigma'(r)/r
    }
    const Eigen::VectorXd a =
        (Z.transpose() * w_std.asDiagonal() * Z / n + 2.0 * lambda * D)
            .ldlt()
            .solve(Z.transpose() * w_std.cwiseProduct(y) / n);
    const Eigen::VectorXd b =
        (Z.transpose() * w_raw.asDiagonal() * Z / n + 2.0 * (lambda / (sigma * sigma)) * D)
            .ldlt()
            .solve(Z.transpose() * w_raw.cwiseProduct(y) / n);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff()));

    // at lambda = 0 the common factor cancels outright
    const Eigen::VectorXd a0 = (Z.transpose() * w_std.asDiagonal() * Z)
                                   .ldlt()
                                   .solve(Z.transpose() * w_std.cwiseProduct(y));
    const Eigen::VectorXd b0 = (Z.transpose() * w_raw.asDiagonal() * Z)
                                   .ldlt()
                                   .solve(Z.transpose() * w_raw.cwiseProduct(y));
    CHECK((a0 - b0).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, a0.cwiseAbs().maxCoeff()));
}

TEST_CASE("hat trace limits and dense oracle") {
    auto prob = make_problem(30, 8, 31);
    const auto& Z = prob.design.Z;
    const auto& D = prob.design.Dq_star;
    const Eigen::Index m = Z.cols();

    const Eigen::VectorXd unit = Eigen::VectorXd::Ones(Z.rows());
    CHECK(hat_trace(Z, D, unit, 0.0) == doctest::Approx(static_cast<double>(m)).epsilon(1e-10));

    // with q = 2 the surviving span is the intercept plus linear polynomials
    // (lambda large enough to dominate, small enough that epsilon-level
    // penalty rounding does not swamp the data term)
    CHECK(hat_trace(Z, D, unit, 1e6) == doctest::Approx(3.0).epsilon(1e-3));
    double prev = hat_trace(Z, D, unit, 1e-8);
    for (double lambda : {1e-6, 1e-4, 1e-2, 1.0, 1e2}) {
        const double tr = hat_trace(Z, D, unit, lambda);
        CHECK(tr < prev + 1e-9);
        CHECK(tr > 0.0);
        prev = tr;
    }

    std::mt19937 gen(8);
    std::uniform_real_distribution<double> unif(0.2, 2.0);
    Eigen::VectorXd w(Z.rows());
    for (Eigen::Index i = 0; i < Z.rows(); ++i) w[i] = unif(gen);
    const double lambda = 0.07;
    const double n = static_cast<double>(Z.rows());
    const Eigen::MatrixXd M = Z.transpose() * w.asDiagonal() * Z + 2.0 * n * lambda * D;
    const Eigen::MatrixXd H = Z * M.ldlt().solve(Z.transpose() * w.asDiagonal());
    CHECK(hat_trace(Z, D, w, lambda) == doctest::Approx(H.trace()).epsilon(1e-10));
}

TEST_CASE("standardized residuals") {
    FitResult fit;
    fit.sigma = {2.0, ScaleMethod::m_scale, 0.5};
    fit.residuals = Eigen::VectorXd::Zero(4);
    CHECK(standardized_residuals(fit).isZero());
    fit.residuals << 6.0, -6.0, 0.0, 2.0;
    const auto s = standardized_residuals(fit);
    CHECK(s[0] == 3.0);
    CHECK(s[1] == -3.0);
    CHECK(s[3] == 1.0);
}

TEST_CASE("response shifts move only the intercept at lambda zero") {
    auto prob = make_problem(70, 10, 77, 0.6);
    InitialFitOptions sopts;
    sopts.seed = 5;
    sopts.tol = 1e-12;  // two separately converged pipelines are compared
    IrlsOptions iopts;
    iopts.tol = 1e-12;
    iopts.max_iter = 500;
    const auto loss = RobustLoss::huber(1.345);

    const auto init1 = initial_scale(prob.data, prob.basis, sopts);
    const auto fit1 = irls_fit(prob.design.Z, prob.design.Dq_star, prob.data.responses, 0.0,
                               loss, init1.scale, init1.gamma, iopts);

    FunctionalDataset shifted = prob.data;
    shifted.responses.array() += 5.0;
    const auto init2 = initial_scale(shifted, prob.basis, sopts);
    const auto fit2 = irls_fit(prob.design.Z, prob.design.Dq_star, shifted.responses, 0.0, loss,
                               init2.scale, init2.gamma, iopts);

    CHECK(init2.scale.sigma == doctest::Approx(init1.scale.sigma).epsilon(1e-8));
    CHECK(fit2.intercept - fit1.intercept == doctest::Approx(5.0).epsilon(1e-8));
    CHECK((fit2.coefficients - fit1.coefficients).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("bisquare irls descends from the pilot start") {
    auto prob = make_problem(80, 14, 91, 0.7, 8);
    InitialFitOptions sopts;
    sopts.seed = 19;
    const auto init = initial_scale(prob.data, prob.basis, sopts);
    const auto fit = irls_fit(prob.design.Z, prob.design.Dq_star, prob.data.responses, 0.01,
                              RobustLoss::bisquare(4.685), init.scale, init.gamma);
    for (size_t i = 1; i < fit.objective_trace.size(); ++i)
        CHECK(fit.objective_trace[i] <=
              fit.objective_trace[i - 1] + 1e-10 * std::max(1.0, fit.objective_trace[i - 1]));
}

TEST_CASE("outlier flagging recovers injected shifts") {
    int total = 0, flagged = 0;
    for (int seed = 0; seed < 10; ++seed) {
        auto prob = make_problem(100, 13, 200 + seed, 1.0, 10);
        InitialFitOptions sopts;
        sopts.seed = 300 + seed;
        const auto init = initial_scale(prob.data, prob.basis, sopts);
        const auto fit = irls_fit(prob.design.Z, prob.design.Dq_star, prob.data.responses, 0.01,
                                  RobustLoss::huber(1.345), init.scale, init.gamma);
        const auto s = standardized_residuals(fit);
        for (int i = 0; i < 10; ++i) {
            ++total;
            if (std::abs(s[i]) > 2.5) ++flagged;
        }
    }
    CHECK(flagged >= static_cast<int>(0.9 * total));
}

TEST_CASE("singular systems are reported") {
    // duplicate column with lambda = 0 leaves the normal equations singular
    Eigen::MatrixXd Z(6, 3);
    Z << 1, 2, 2, 1, 3, 3, 1, 4, 4, 1, 5, 5, 1, 6, 6, 1, 7, 7;
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(3, 3);
    Eigen::VectorXd y(6);
    y << 1, 2, 3, 4, 5, 6;
    const ScaleEstimate scale{1.0, ScaleMethod::m_scale, 0.5};
    CHECK_THROWS_WITH_AS(irls_fit(Z, D, y, 0.0, RobustLoss::square(), scale,
                                  Eigen::VectorXd::Zero(3)),
                         doctest::Contains("singular system"), std::runtime_error);
}

}  // TEST_SUITE
