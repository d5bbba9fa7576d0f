#include "funreg/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "funreg/design.hpp"

#include <json.hpp>

namespace funreg {

namespace {

constexpr double kPi = 3.14159265358979323846;

double gaussian_density(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * kPi));
}

}  // namespace

double beta_eval(BetaId beta, double x) {
    switch (beta) {
        case BetaId::b1:
            return std::cos(2.0 * kPi * x);
        case BetaId::b2:
            return -gaussian_density(x, 0.2, 0.03) + 3.0 * gaussian_density(x, 0.5, 0.4) +
                   gaussian_density(x, 0.75, 0.05);
        case BetaId::b3:
            return 1.0 / (1.0 + std::exp(-20.0 * (x - 0.5)));
        case BetaId::b4:
            return 1.0 / (0.1 + x) + 8.0 * std::exp(-400.0 * (x - 0.5) * (x - 0.5));
    }
    return 0;
}

void validate(const SimulationConfig& config) {
    if (config.n < 10) throw std::invalid_argument("simulation config: n must be >= 10");
    if (config.grid_size < 20) throw std::invalid_argument("simulation config: grid size must be >= 20");
    if (config.replications < 1)
        throw std::invalid_argument("simulation config: replications must be >= 1");
    if (config.n_terms < 1) throw std::invalid_argument("simulation config: n_terms must be >= 1");
    if (config.beta_custom.size() > 0 && config.beta_custom.size() != config.grid_size)
        throw std::invalid_argument("simulation config: custom beta must be sampled on the grid");
    if (config.estimator.basis_dimension <= config.estimator.order)
        throw std::invalid_argument("simulation config: basis dimension must exceed the order");
}

Eigen::VectorXd beta_on_grid(const SimulationConfig& config, const Eigen::VectorXd& grid) {
    if (config.beta_custom.size() > 0) return config.beta_custom;
    Eigen::VectorXd values(grid.size());
    for (Eigen::Index j = 0; j < grid.size(); ++j) values[j] = beta_eval(config.beta, grid[j]);
    return values;
}

SeriesExpansion series_expansion(Process process, PhiVariant phi, int n_terms,
                                 const Eigen::VectorXd& grid) {
    const Eigen::Index k = grid.size();
    SeriesExpansion expansion;
    expansion.coefficients.resize(n_terms);
    expansion.functions.resize(n_terms, k);
    if (process == Process::well_spaced) {
        for (int j = 1; j <= n_terms; ++j) {
            const double freq = (j - 0.5) * kPi;
            expansion.coefficients[j - 1] = std::sqrt(2.0) / freq;
            for (Eigen::Index g = 0; g < k; ++g)
                expansion.functions(j - 1, g) = std::sin(freq * grid[g]);
        }
    } else {
        for (int j = 1; j <= n_terms; ++j) {
            double gj;
            if (j == 1) {
                gj = 1.0;
            } else if (j <= 4) {
                gj = 0.2 * ((j % 2 == 1) ? 1.0 : -1.0) * (1.0 - 0.0001 * j);
            } else {
                const double block = 5.0 * std::floor(j / 5.0);
                gj = 0.2 * ((j % 2 == 1) ? 1.0 : -1.0) *
                     (std::pow(block, -0.75) - 0.0001 * (j % 5));
            }
            expansion.coefficients[j - 1] = gj;
            for (Eigen::Index g = 0; g < k; ++g) {
                if (j == 1) {
                    expansion.functions(0, g) = 1.0;
                } else {
                    const double freq = (phi == PhiVariant::verbatim) ? 2.0 * kPi : j * kPi;
                    expansion.functions(j - 1, g) = std::sqrt(2.0) * std::cos(freq * grid[g]);
                }
            }
        }
    }
    return expansion;
}

Eigen::MatrixXd curves_from_scores(const SeriesExpansion& expansion,
                                   const Eigen::MatrixXd& scores) {
    return scores * expansion.coefficients.asDiagonal() * expansion.functions;
}

Eigen::MatrixXd gen_curves(Process process, PhiVariant phi, int n, const Eigen::VectorXd& grid,
                           int n_terms, Rng& rng) {
    const SeriesExpansion expansion = series_expansion(process, phi, n_terms, grid);
    Eigen::MatrixXd scores(n, n_terms);
    const double half_width = std::sqrt(3.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n_terms; ++j)
            scores(i, j) = (process == Process::well_spaced) ? rng.gauss()
                                                             : rng.uniform(-half_width, half_width);
    return curves_from_scores(expansion, scores);
}

Eigen::VectorXd gen_errors(ErrorLaw law, int n, Rng& rng) {
    Eigen::VectorXd eps(n);
    for (int i = 0; i < n; ++i) {
        switch (law) {
            case ErrorLaw::gaussian:
                eps[i] = rng.gauss();
                break;
            case ErrorLaw::t3:
                eps[i] = rng.student_t(3);
                break;
            case ErrorLaw::mix_gaussian:
                eps[i] = (rng.uniform01() < 0.9) ? rng.gauss() : 10.0 + rng.gauss();
                break;
            case ErrorLaw::slash:
                eps[i] = rng.gauss() / rng.uniform01();
                break;
        }
    }
    return eps;
}

Eigen::VectorXd gen_responses(const Eigen::MatrixXd& curves, const Eigen::VectorXd& grid,
                              const Eigen::VectorXd& beta_values, const Eigen::VectorXd& errors) {
    const Eigen::VectorXd w = trapezoid_weights(grid);
    return curves * w.cwiseProduct(beta_values) + errors;
}

FunctionalDataset gen_dataset(const SimulationConfig& config, Rng& rng) {
    Eigen::VectorXd grid(config.grid_size);
    for (int j = 0; j < config.grid_size; ++j)
        grid[j] = static_cast<double>(j) / (config.grid_size - 1);

    Eigen::MatrixXd curves =
        gen_curves(config.process, config.phi_variant, config.n, grid, config.n_terms, rng);
    Eigen::VectorXd errors = gen_errors(config.error, config.n, rng);
    Eigen::VectorXd y = gen_responses(curves, grid, beta_on_grid(config, grid), errors);
    return make_dataset(std::move(grid), std::move(curves), std::move(y));
}

namespace {

struct ScenarioContext {
    BSplineBasisd basis;
    PenaltyMatrixd penalty;
    Eigen::VectorXd grid;
    Eigen::MatrixXd basis_grid;  // basis evaluated on the grid
    Eigen::VectorXd beta_true;
};

ScenarioContext make_context(const SimulationConfig& config) {
    const auto& est = config.estimator;
    BSplineBasisd basis = make_basis(est.order, est.basis_dimension - est.order);
    PenaltyMatrixd penalty = penalty_matrix(basis, est.penalty_order);
    Eigen::VectorXd grid(config.grid_size);
    for (int j = 0; j < config.grid_size; ++j)
        grid[j] = static_cast<double>(j) / (config.grid_size - 1);
    Eigen::MatrixXd bg = basis_on_grid(basis, grid);
    Eigen::VectorXd beta_true = beta_on_grid(config, grid);
    return {std::move(basis), std::move(penalty), std::move(grid), std::move(bg),
            std::move(beta_true)};
}

ReplicationRecord run_replication(const SimulationConfig& config, const ScenarioContext& ctx,
                                  int index) {
    ReplicationRecord rec;
    rec.index = index;
    try {
        Rng rng(Rng::derive(config.seed, static_cast<std::uint64_t>(index)));
        const FunctionalDataset data = gen_dataset(config, rng);
        const DesignMatrices design = inner_products(data, ctx.basis, ctx.penalty);

        InitialFitOptions scale_opts = config.estimator.scale;
        scale_opts.seed = Rng::derive(config.seed, static_cast<std::uint64_t>(index)) ^
                          0x5ca1ab1e5ca1ab1eULL;
        const InitialFit init = initial_scale(data, ctx.basis, scale_opts);

        FitResult fit;
        double lambda = config.estimator.lambda_override;
        if (lambda >= 0) {
            fit = irls_fit(design.Z, design.Dq_star, data.responses, lambda,
                           config.estimator.loss, init.scale, init.gamma,
                           config.estimator.select.irls);
        } else {
            SelectOptions sel = config.estimator.select;
            sel.criterion = config.estimator.criterion;
            const SelectionResult selection =
                select_lambda(design, data.responses, config.estimator.loss, init.scale,
                              init.gamma, sel);
            fit = selection.fit;
            lambda = selection.lambda_opt;
        }

        const Eigen::VectorXd beta_hat = ctx.basis_grid * fit.coefficients;
        rec.mse = gamma_n_seminorm_sq(data, beta_hat - ctx.beta_true);
        rec.lambda = lambda;
        rec.edf = fit.edf;
        rec.converged = fit.converged;
        if (!std::isfinite(rec.mse)) throw std::runtime_error("non-finite error metric");
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.message = e.what();
    }
    return rec;
}

}  // namespace

MCReport run_monte_carlo(const SimulationConfig& config) {
    validate(config);
    const ScenarioContext ctx = make_context(config);

    MCReport report;
    report.replications.resize(config.replications);

    const int threads = std::max(1, config.threads);
    if (threads == 1) {
        for (int r = 0; r < config.replications; ++r)
            report.replications[r] = run_replication(config, ctx, r);
    } else {
        // records land in their replication slot, so scheduling cannot
        // change the report
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&]() {
                for (int r = next.fetch_add(1); r < config.replications; r = next.fetch_add(1))
                    report.replications[r] = run_replication(config, ctx, r);
            });
        }
        for (auto& th : pool) th.join();
    }

    std::vector<double> mses;
    mses.reserve(report.replications.size());
    for (const auto& rec : report.replications) {
        if (rec.ok)
            mses.push_back(rec.mse);
        else
            ++report.failures;
    }
    if (report.failures > 0.05 * config.replications)
        throw std::runtime_error("harness error: more than 5% of replications failed (" +
                                 std::to_string(report.failures) + "/" +
                                 std::to_string(config.replications) + ")");
    if (mses.empty()) throw std::runtime_error("harness error: no successful replications");

    double sum = 0;
    for (const double m : mses) sum += m;
    report.mean_mse = sum / static_cast<double>(mses.size());

    std::sort(mses.begin(), mses.end());
    const size_t mid = mses.size() / 2;
    report.median_mse =
        (mses.size() % 2 == 1) ? mses[mid] : 0.5 * (mses[mid - 1] + mses[mid]);
    return report;
}

std::string to_string(Process p) {
    return p == Process::well_spaced ? "well_spaced" : "closely_spaced";
}

std::string to_string(BetaId b) {
    switch (b) {
        case BetaId::b1: return "b1";
        case BetaId::b2: return "b2";
        case BetaId::b3: return "b3";
        case BetaId::b4: return "b4";
    }
    return "?";
}

std::string to_string(ErrorLaw e) {
    switch (e) {
        case ErrorLaw::gaussian: return "gaussian";
        case ErrorLaw::t3: return "t3";
        case ErrorLaw::mix_gaussian: return "mix_gaussian";
        case ErrorLaw::slash: return "slash";
    }
    return "?";
}

Process process_from_string(const std::string& s) {
    if (s == "well_spaced" || s == "a") return Process::well_spaced;
    if (s == "closely_spaced" || s == "b") return Process::closely_spaced;
    throw std::invalid_argument("unknown process: " + s);
}

BetaId beta_from_string(const std::string& s) {
    if (s == "b1") return BetaId::b1;
    if (s == "b2") return BetaId::b2;
    if (s == "b3") return BetaId::b3;
    if (s == "b4") return BetaId::b4;
    throw std::invalid_argument("unknown beta id: " + s);
}

ErrorLaw error_from_string(const std::string& s) {
    if (s == "gaussian") return ErrorLaw::gaussian;
    if (s == "t3") return ErrorLaw::t3;
    if (s == "mix_gaussian") return ErrorLaw::mix_gaussian;
    if (s == "slash") return ErrorLaw::slash;
    throw std::invalid_argument("unknown error law: " + s);
}

void write_report_json(const MCReport& report, const SimulationConfig& config, std::ostream& out) {
    nlohmann::json j;
    j["config"] = {
        {"process", to_string(config.process)},
        {"beta", to_string(config.beta)},
        {"error", to_string(config.error)},
        {"n", config.n},
        {"grid_size", config.grid_size},
        {"n_terms", config.n_terms},
        {"replications", config.replications},
        {"seed", config.seed},
        {"loss", config.estimator.loss.name()},
        {"tuning", config.estimator.loss.tuning()},
        {"order", config.estimator.order},
        {"penalty_order", config.estimator.penalty_order},
        {"basis_dimension", config.estimator.basis_dimension},
        {"criterion", config.estimator.criterion == Criterion::aicc ? "aicc" : "gcv"},
    };
    j["mean_mse"] = report.mean_mse;
    j["median_mse"] = report.median_mse;
    j["failures"] = report.failures;
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& rec : report.replications) {
        nlohmann::json r = {{"index", rec.index}, {"ok", rec.ok}};
        if (rec.ok) {
            r["mse"] = rec.mse;
            r["lambda"] = rec.lambda;
            r["edf"] = rec.edf;
            r["converged"] = rec.converged;
        } else {
            r["message"] = rec.message;
        }
        reps.push_back(std::move(r));
    }
    j["replications"] = std::move(reps);
    out << j.dump(2) << '\n';
}

void write_report_csv(const MCReport& report, std::ostream& out) {
    out << "replication,ok,mse,lambda,edf,converged\n";
    char buf[32];
    const auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const auto& rec : report.replications) {
        out << rec.index << ',' << (rec.ok ? 1 : 0) << ',';
        if (rec.ok)
            out << num(rec.mse) << ',' << num(rec.lambda) << ',' << num(rec.edf) << ','
                << (rec.converged ? 1 : 0);
        else
            out << ",,,";
        out << '\n';
    }
}

}  // namespace funreg
