#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "funreg/dataset.hpp"
#include "funreg/rng.hpp"
#include "funreg/scale.hpp"
#include "funreg/select.hpp"

namespace funreg {

/// Predictor-curve families: truncated Karhunen-Loeve series with either
/// well-separated eigenvalues (a smooth Wiener-like process) or eigenvalues
/// that differ little within blocks of five (a hard, closely-spaced case).
enum class Process { well_spaced, closely_spaced };

/// Basis choice for the closely-spaced family beyond the constant leading
/// term: `verbatim` uses sqrt(2) cos(2 pi t) for every j >= 2, `frequency_j`
/// uses sqrt(2) cos(j pi t) instead.
enum class PhiVariant { verbatim, frequency_j };

enum class BetaId { b1, b2, b3, b4 };

enum class ErrorLaw { gaussian, t3, mix_gaussian, slash };

/// True coefficient functions used by the simulation scenarios.
double beta_eval(BetaId beta, double x);

struct EstimatorSettings {
    RobustLoss loss = RobustLoss::huber();
    int order = 4;            // p
    int penalty_order = 2;    // q
    int basis_dimension = 40; // K + p
    Criterion criterion = Criterion::aicc;
    double lambda_override = -1;  // >= 0 skips selection and fits at this value
    SelectOptions select;
    InitialFitOptions scale;
};

struct SimulationConfig {
    Process process = Process::well_spaced;
    PhiVariant phi_variant = PhiVariant::verbatim;
    BetaId beta = BetaId::b1;
    Eigen::VectorXd beta_custom;  // overrides beta when sampled on the grid
    ErrorLaw error = ErrorLaw::gaussian;
    int n = 100;
    int grid_size = 100;
    int n_terms = 50;  // series truncation
    int replications = 1;
    std::uint64_t seed = 1;
    int threads = 1;
    EstimatorSettings estimator;
};

void validate(const SimulationConfig& config);

/// Sampled coefficient function of a config on a grid.
Eigen::VectorXd beta_on_grid(const SimulationConfig& config, const Eigen::VectorXd& grid);

/// Deterministic part of the curve family: series coefficients gamma_j and
/// the basis functions phi_j sampled on the grid (one row per term).
struct SeriesExpansion {
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd functions;  // n_terms x grid_size
};

SeriesExpansion series_expansion(Process process, PhiVariant phi, int n_terms,
                                 const Eigen::VectorXd& grid);

/// Curves sum gamma_j scores(i, j) phi_j(t) for given scores (n x n_terms).
Eigen::MatrixXd curves_from_scores(const SeriesExpansion& expansion,
                                   const Eigen::MatrixXd& scores);

/// n random curves of the chosen family evaluated on the grid; scores are
/// standard normal for the well-spaced family and uniform on
/// [-sqrt(3), sqrt(3)] for the closely-spaced one.
Eigen::MatrixXd gen_curves(Process process, PhiVariant phi, int n, const Eigen::VectorXd& grid,
                           int n_terms, Rng& rng);

/// n i.i.d. draws of the chosen error law.
Eigen::VectorXd gen_errors(ErrorLaw law, int n, Rng& rng);

/// Responses Y_i = integral of X_i beta + eps_i (zero intercept, trapezoid
/// quadrature on the grid).
Eigen::VectorXd gen_responses(const Eigen::MatrixXd& curves, const Eigen::VectorXd& grid,
                              const Eigen::VectorXd& beta_values, const Eigen::VectorXd& errors);

/// One full synthetic dataset for a replication stream.
FunctionalDataset gen_dataset(const SimulationConfig& config, Rng& rng);

struct ReplicationRecord {
    int index = 0;
    bool ok = false;
    double mse = 0;     // squared empirical semi-norm of beta-hat minus beta
    double lambda = 0;
    double edf = 0;
    bool converged = false;
    std::string message;  // failure reason when !ok
};

struct MCReport {
    std::vector<ReplicationRecord> replications;
    double mean_mse = 0;
    double median_mse = 0;
    int failures = 0;
};

/// Runs the replication loop: each replication draws fresh data from its own
/// (seed, index)-derived stream, fits the penalized M-estimator with
/// smoothing selection and records the empirical squared error of the
/// estimated coefficient function. Failed replications are excluded from the
/// aggregates and counted; more than 5% failures aborts with a harness error.
MCReport run_monte_carlo(const SimulationConfig& config);

void write_report_json(const MCReport& report, const SimulationConfig& config, std::ostream& out);
void write_report_csv(const MCReport& report, std::ostream& out);

std::string to_string(Process p);
std::string to_string(BetaId b);
std::string to_string(ErrorLaw e);

Process process_from_string(const std::string& s);
BetaId beta_from_string(const std::string& s);
ErrorLaw error_from_string(const std::string& s);

}  // namespace funreg
